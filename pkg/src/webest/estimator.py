"""scikit-learn style front end to the design driver."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .driver import SolverConfig, run_p_schedule
from .metrics import islr_db, metrics_report
from .vector import LineSearchParams
from .waveform import PhaseConstraint, WaveformSet, as_waveform


class WaveformDesigner(TransformerMixin, BaseEstimator):
    """Design a set of unimodular sequences with low weighted correlation sidelobes.

    ``fit`` designs from a seeded random start (or from ``X`` when given);
    ``transform`` refines every supplied start and returns the designed phase
    matrices.  The "data" of this estimator are initial phase matrices, not
    samples, so ``X`` is an (M, N) phase matrix or a stack of them.

    Parameters
    ----------
    n_transmitters, length : int
        Number of sequences M and their length N.
    alphabet : int or "inf"
        MPSK alphabet size L, or "inf" for continuous phases.
    method : {"entry", "vector"}
        Block update: closed-form single entries, or gradient steps on whole rows.
    p_schedule : sequence of float
        Exponents run in order, each stage warm-started from the previous one.
    smooth_h : {1, 2, 3}
        Smoothing family for stages with p <= 1.
    epsilon, zeta, max_iters
        Smoothing radius, stopping threshold on the sweep change, sweep cap.
    weights : None, "ones", "band:K" or array of length 2N-1
        Lag weights.
    seed : int
        Seed of the random start.
    record_every : int
        Trace recording stride.

    Attributes
    ----------
    waveform_ : WaveformSet
    phases_ : ndarray of shape (M, N)
    traces_ : list of RunTrace, one per stage
    metrics_ : dict
    """

    def __init__(
        self,
        n_transmitters=4,
        length=64,
        alphabet="inf",
        method="entry",
        p_schedule=(2.0,),
        smooth_h=1,
        epsilon=0.05,
        zeta=1e-9,
        max_iters=100_000,
        weights=None,
        seed=0,
        record_every=1,
        line_search=None,
    ):
        self.n_transmitters = n_transmitters
        self.length = length
        self.alphabet = alphabet
        self.method = method
        self.p_schedule = p_schedule
        self.smooth_h = smooth_h
        self.epsilon = epsilon
        self.zeta = zeta
        self.max_iters = max_iters
        self.weights = weights
        self.seed = seed
        self.record_every = record_every
        self.line_search = line_search

    def _config(self, shape=None):
        M, N = shape if shape is not None else (self.n_transmitters, self.length)
        return SolverConfig(
            M=M,
            N=N,
            constraint=PhaseConstraint.parse(self.alphabet),
            method=self.method,
            p_schedule=tuple(np.atleast_1d(self.p_schedule)),
            smooth_h=self.smooth_h,
            epsilon=self.epsilon,
            zeta=self.zeta,
            max_iters=self.max_iters,
            weights=self.weights,
            seed=self.seed,
            record_every=self.record_every,
            line_search=self.line_search or LineSearchParams(),
        )

    def _start(self, X, config):
        if isinstance(X, WaveformSet):
            return X
        arr = np.asarray(X)
        if arr.ndim != 2:
            raise ValueError(f"expected one (M, N) phase matrix, got shape {arr.shape}")
        return as_waveform(arr) if np.iscomplexobj(arr) else WaveformSet(arr, config.constraint)

    def fit(self, X=None, y=None):
        """Run the p-schedule from ``X`` (an initial phase matrix) or from the seeded random start."""
        config = self._config()
        X0 = None if X is None else self._start(X, config)
        if X0 is not None and X0.shape != (config.M, config.N):
            config = self._config(X0.shape)
        self.config_ = config
        self.waveform_, self.traces_ = run_p_schedule(config, X0)
        self.phases_ = np.array(self.waveform_.phases)
        self.metrics_ = metrics_report(self.waveform_, config.weights)
        return self

    def transform(self, X):
        """Refine each initial phase matrix in ``X``; returns designed phases of the same shape."""
        check_is_fitted(self, "config_")
        arr = np.asarray(X.phases if isinstance(X, WaveformSet) else X)
        stack = arr[None] if arr.ndim == 2 else arr
        if stack.ndim != 3:
            raise ValueError(f"expected (M, N) or (K, M, N) phase arrays, got shape {arr.shape}")
        out = []
        for start in stack:
            config = self._config(start.shape)
            Xs, _ = run_p_schedule(config, self._start(start, config))
            out.append(np.array(Xs.phases))
        out = np.stack(out)
        return out[0] if arr.ndim == 2 else out

    def score(self, X=None, y=None):
        """Negative ISLR (dB) of the fitted set, or of ``X`` when given: higher is better."""
        check_is_fitted(self, "config_")
        target = self.waveform_ if X is None else self._start(X, self.config_)
        return -islr_db(target, self.config_.weights if target.N == self.config_.N else None)
