"""Row-wise gradient descent on the phase vector of one transmitter.

The gradient of ``sum |w_k r_{t,l}(k)|**p`` (or of its smoothed version)
with respect to ``phi_t`` is

    G[n] = 2 Im{ conj(x_t[n]) * sum_l y_l[n] },
    y_l[n] = sum_k A_l(k) r_{t,l}(k) x_l[n + k],

where ``A_l(k)`` collects the per-lag curvature of both ordered pairs
``(t, l)`` and ``(l, t)``.  Each ``y_l`` is a linear convolution, evaluated
with one FFT per row.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ._validation import check_p, check_positive, check_smooth_kind
from .correlation import row_correlations
from .surrogates import DEFAULT_EPSILON, GRADIENT_GUARD, gamma_coeff, smooth_g
from .waveform import WaveformSet, as_waveform, as_weights, wrap_phase

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LineSearchParams:
    """Armijo backtracking constants."""

    alpha: float = 0.3
    beta: float = 0.5
    delta0: float = 1.0
    max_trials: int = 50

    def __post_init__(self):
        if not 0 < self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5], got {self.alpha}")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.delta0 > 0:
            raise ValueError(f"delta0 must be positive, got {self.delta0}")
        if int(self.max_trials) != self.max_trials or self.max_trials < 1:
            raise ValueError(f"max_trials must be a positive integer, got {self.max_trials}")


class _Path:
    """Value and curvature of the per-lag term for one regime."""

    def __init__(self, p, h=None, eps=DEFAULT_EPSILON):
        self.p = check_p(p)
        if h is None:
            if self.p < 2:
                raise ValueError(f"the f path needs p >= 2, got {p}")
        else:
            check_smooth_kind(h, self.p)
            check_positive(eps, "eps")
        self.h = h
        self.eps = eps

    def value(self, a):
        if self.h is None:
            return a**self.p
        return smooth_g(self.h, self.eps, self.p, a)

    def curvature(self, a):
        # d value / d |r|**2
        if self.h is None:
            return 0.5 * self.p * np.maximum(a, GRADIENT_GUARD) ** (self.p - 2)
        return gamma_coeff(self.h, self.eps, self.p, a)


def _row_terms(x, t, w):
    r = row_correlations(x, t)
    N = x.shape[1]
    mask = np.ones(r.shape, dtype=bool)
    mask[t, N - 1] = False
    return r, mask


def _lag_coeffs(r, mask, w, path):
    # both orders of each pair: weight w_k on r(k) and w_{-k} on r_{l,t}(-k) = conj r(k)
    wf, wr = w, w[::-1]
    A = wf**2 * path.curvature(np.abs(wf * r)) + wr**2 * path.curvature(np.abs(wr * r))
    return np.where(mask, A, 0.0)


def _row_objective(x, t, w, path):
    """Every objective term that depends on row ``t``."""
    r, mask = _row_terms(x, t, w)
    M = x.shape[0]
    fw = path.value(np.abs(w * r))
    total = float(np.sum(fw[mask]))
    cross = np.arange(M) != t
    total += float(np.sum(path.value(np.abs(w[::-1] * r[cross]))))
    return total


def _gradient(X, t, w, path):
    X = as_waveform(X)
    x = X.x
    M, N = x.shape
    if not 0 <= t < M:
        raise IndexError(f"row {t} out of range for M={M}")
    w = as_weights(w, N).w
    r, mask = _row_terms(x, t, w)
    q = _lag_coeffs(r, mask, w, path) * r
    nfft = 1
    while nfft < 3 * N - 2:
        nfft <<= 1
    conv = np.fft.ifft(np.fft.fft(x, nfft, axis=1) * np.fft.fft(q[:, ::-1], nfft, axis=1), axis=1)
    y = conv[:, N - 1 : 2 * N - 1].sum(axis=0)
    return 2.0 * np.imag(np.conj(x[t]) * y)


def gradient_f(X, t, w=None, p=2.0):
    """Gradient of the weighted lp objective with respect to the phases of row ``t`` (p >= 2)."""
    return _gradient(X, t, w, _Path(p))


def gradient_g(X, t, w=None, p=0.5, eps=DEFAULT_EPSILON, h=1):
    """Gradient of the smoothed objective ``sum g_h(|w r|)`` with respect to row ``t``."""
    return _gradient(X, t, w, _Path(p, h, eps))


def backtracking_line_search(phi, direction, objective, params=LineSearchParams()):
    """Largest ``delta0 * beta**k`` meeting the Armijo decrease condition.

    ``objective`` maps a phase vector to a real value.  Returns 0.0 when no
    trial step is accepted within ``params.max_trials``.
    """
    phi = np.asarray(phi, dtype=float)
    direction = np.asarray(direction, dtype=float)
    sq = float(direction @ direction)
    if sq == 0.0:
        return params.delta0
    f0 = objective(phi)
    delta = params.delta0
    for _ in range(params.max_trials):
        if objective(phi + delta * direction) <= f0 - params.alpha * delta * sq:
            return delta
        delta *= params.beta
    return 0.0


def vector_update(X, t, p, w=None, h=None, eps=DEFAULT_EPSILON, params=LineSearchParams()):
    """One gradient step with line search on row ``t``.

    ``h=None`` descends the lp objective (needs p >= 2); otherwise the
    smoothed family ``h``.  The row objective is divided by its starting
    value so the line-search constants are scale free.  Returns the new set
    and the accepted step.
    """
    X = as_waveform(X)
    if X.constraint.is_discrete:
        raise ValueError("vector updates work on continuous phases only")
    path = _Path(p, h, eps)
    w = as_weights(w, X.N).w
    phases = X.phases.copy()
    row0 = phases[t].copy()

    def objective(phi_t):
        x = X.x.copy()
        x[t] = np.exp(1j * phi_t)
        return _row_objective(x, t, w, path)

    f0 = objective(row0)
    if f0 == 0.0:
        return X, 0.0
    grad = _gradient(X, t, w, path) / f0
    delta = backtracking_line_search(row0, -grad, lambda ph: objective(ph) / f0, params)
    if delta == 0.0:
        log.debug("line search failed on row %d; step skipped", t)
        return X, 0.0
    if not np.any(grad):
        return X, delta
    phases[t] = wrap_phase(row0 - delta * grad)
    return WaveformSet(phases, X.constraint), delta
