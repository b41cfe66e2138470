"""Full design runs: cyclic block sweeps, p-schedules and run traces."""

import logging
import math
import time
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels
from ._validation import check_p, check_positive, check_smooth_kind
from .correlation import correlation_array
from .entry import EntryRegime
from .metrics import islr_db, sparsity
from .surrogates import DEFAULT_EPSILON, smooth_g
from .vector import LineSearchParams, vector_update
from .waveform import (
    PhaseConstraint,
    WaveformSet,
    WeightVector,
    as_waveform,
    as_weights,
    random_mpsk_init,
    sidelobe_mask,
)

log = logging.getLogger(__name__)

METHODS = ("entry", "vector")
PSL_SCHEDULE_ENTRY = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0)
PSL_SCHEDULE_VECTOR = (2.0, 4.0, 8.0)
SPARSITY_SCHEDULE = (1.0, 0.75, 0.5, 0.25, 0.1)

TRACE_COLUMNS = (
    "stage",
    "iteration",
    "p",
    "surrogate",
    "objective",
    "scale",
    "psl",
    "islr_db",
    "sparsity",
    "delta_x",
)


def default_schedule(mode="psl", method="entry"):
    """Default p-schedule: doubling 2..128 (entry) or 2..8 (vector) for PSL, decreasing for sparsity."""
    if mode == "psl":
        return PSL_SCHEDULE_ENTRY if method == "entry" else PSL_SCHEDULE_VECTOR
    if mode == "sparsity":
        return SPARSITY_SCHEDULE
    raise ValueError(f"unknown schedule mode {mode!r}; expected 'psl' or 'sparsity'")


def make_weights(spec, N):
    """Build a WeightVector from ``"ones"``, ``("band", lo, hi)``, ``"band:K"`` or an explicit array.

    ``"band:K"`` is shorthand for the symmetric interval ``[-K, K]``.
    """
    if spec is None or isinstance(spec, WeightVector):
        return as_weights(spec, N)
    if isinstance(spec, str):
        s = spec.strip().lower()
        if s == "ones":
            return WeightVector.ones(N)
        if s.startswith("band:"):
            try:
                K = int(s[5:])
            except ValueError:
                raise ValueError(f"invalid band weight spec {spec!r}; expected band:K") from None
            return WeightVector.band(N, -K, K)
        raise ValueError(f"unknown weight spec {spec!r}")
    if isinstance(spec, tuple) and len(spec) == 3 and spec[0] == "band":
        return WeightVector.band(N, int(spec[1]), int(spec[2]))
    return as_weights(np.asarray(spec, dtype=float), N)


@dataclass(frozen=True)
class SolverConfig:
    """Everything that determines a run.  Identical configs give bit-identical results."""

    M: int
    N: int
    constraint: PhaseConstraint = PhaseConstraint()
    method: str = "entry"
    p_schedule: Tuple[float, ...] = (2.0,)
    smooth_h: int = 1
    epsilon: float = DEFAULT_EPSILON
    zeta: float = 1e-9
    max_iters: int = 100_000
    weights: object = None
    seed: int = 0
    record_every: int = 1
    line_search: LineSearchParams = LineSearchParams()
    init_alphabet: Optional[int] = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        set_("M", int(self.M))
        set_("N", int(self.N))
        set_("constraint", PhaseConstraint.parse(self.constraint))
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        sched = tuple(check_p(p) for p in np.atleast_1d(np.asarray(self.p_schedule, dtype=float)))
        if not sched:
            raise ValueError("p_schedule is empty")
        steps = np.diff(sched)
        if len(sched) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError(f"p_schedule must be strictly monotone, got {list(sched)}")
        set_("p_schedule", sched)
        if self.smooth_h not in (1, 2, 3):
            raise ValueError(f"smooth_h must be 1, 2 or 3, got {self.smooth_h}")
        check_positive(self.epsilon, "epsilon")
        check_positive(self.zeta, "zeta")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")
        set_("max_iters", int(self.max_iters))
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")
        set_("record_every", int(self.record_every))
        set_("weights", make_weights(self.weights, self.N))
        if self.init_alphabet is not None:
            PhaseConstraint(self.init_alphabet)
        discrete = self.constraint.is_discrete
        for p in sched:
            if p <= 1 and not discrete:
                check_smooth_kind(self.smooth_h, p)
            elif 1 < p < 2 and not discrete:
                raise ValueError(f"continuous-phase designs support p <= 1 or p >= 2, got p={p}")
        if self.method == "vector":
            if discrete:
                raise ValueError("the vector method has no discrete-phase variant; use method='entry'")
            if not (all(p >= 2 for p in sched) or all(p <= 1 for p in sched)):
                raise ValueError("vector method needs every p >= 2 or every p <= 1")

    def replace(self, **changes):
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return SolverConfig(**kw)


@dataclass
class RunTrace:
    """Recorded iterations of one p-stage.  ``wall_ms`` is kept in memory only."""

    p: float
    rows: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    stop_reason: Optional[str] = None

    def append(self, row, wall_ms):
        if self.rows and row["iteration"] <= self.rows[-1]["iteration"]:
            raise ValueError("trace iterations must strictly increase")
        self.rows.append(row)
        self.wall_ms.append(wall_ms)

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)


def _scaled_lp(a, p):
    s = float(a.max()) if a.size else 0.0
    if s == 0.0:
        return 0.0, 0.0
    return float(s**p * np.sum((a / s) ** p)), s


def _regime_kind(config, p):
    if config.constraint.is_discrete:
        return "discrete"
    return "pge2" if p >= 2 else "lowp"


def evaluate(X, config, p, stage=0, iteration=0, delta_x=math.nan):
    """Trace row for ``X`` at exponent ``p``, recomputed from scratch."""
    X = as_waveform(X)
    w = config.weights.w
    a = np.abs(correlation_array(X.x) * w)[sidelobe_mask(X.M, X.N)]
    f, scale = _scaled_lp(a, p)
    if _regime_kind(config, p) == "lowp":
        surrogate = float(np.sum(smooth_g(config.smooth_h, config.epsilon, p, a)))
    else:
        surrogate = f
    return {
        "stage": stage,
        "iteration": iteration,
        "p": p,
        "surrogate": surrogate,
        "objective": f,
        "scale": scale,
        "psl": scale,
        "islr_db": islr_db(X, config.weights),
        "sparsity": sparsity(X),
        "delta_x": delta_x,
    }


def stopping_check(X_prev, X_next, iteration, config):
    """``(stop, reason)`` with reason ``"converged"`` (ΔX ≤ zeta), ``"max_iters"`` or None."""
    xp = X_prev.x if isinstance(X_prev, WaveformSet) else np.asarray(X_prev)
    xn = X_next.x if isinstance(X_next, WaveformSet) else np.asarray(X_next)
    dx = float(np.sqrt(np.sum(np.abs(xn - xp) ** 2)))
    if dx <= config.zeta:
        return True, "converged"
    if iteration >= config.max_iters:
        return True, "max_iters"
    return False, None


def _check_start(X0, config):
    if isinstance(X0, WaveformSet):
        X = X0
        if config.constraint.is_discrete and X.constraint != config.constraint:
            X = WaveformSet(X.phases, config.constraint)
    else:
        arr = np.asarray(X0)
        if np.iscomplexobj(arr):
            X = WaveformSet.from_complex(arr, config.constraint)
        else:
            X = WaveformSet(arr, config.constraint)
    if X.shape != (config.M, config.N):
        raise ValueError(f"initial set has shape {X.shape}, config expects {(config.M, config.N)}")
    return X


def _entry_sweeper(config, p):
    kind = _regime_kind(config, p)
    EntryRegime(p, config.constraint.L, config.smooth_h, config.epsilon)
    code = {"discrete": _kernels.DISCRETE, "lowp": _kernels.LOWP, "pge2": _kernels.PGE2}[kind]
    w = np.ascontiguousarray(config.weights.w)
    L = config.constraint.L or 0

    def sweep(ph, x):
        R = correlation_array(x)
        _kernels.entry_sweep(ph, x, R, w, code, float(p), int(config.smooth_h), float(config.epsilon), int(L))

    return sweep


def _vector_sweeper(config, p):
    h = None if p >= 2 else config.smooth_h

    def sweep(ph, x):
        X = WaveformSet(ph)
        for t in range(config.M):
            X, _ = vector_update(X, t, p, config.weights, h, config.epsilon, config.line_search)
        ph[:] = X.phases
        x[:] = X.x

    return sweep


def run_stage(config, p, X0, stage=0):
    """Sweep until ``ΔX <= zeta`` or ``max_iters`` sweeps; returns ``(X, RunTrace)``."""
    p = check_p(p)
    X = _check_start(X0, config)
    sweep = (_entry_sweeper if config.method == "entry" else _vector_sweeper)(config, p)
    trace = RunTrace(p)
    t0 = time.perf_counter()
    trace.append(evaluate(X, config, p, stage, 0), 0.0)
    ph = np.array(X.phases)
    x = np.exp(1j * ph)
    it = 0
    while True:
        it += 1
        x_prev = x.copy()
        sweep(ph, x)
        stop, reason = stopping_check(x_prev, x, it, config)
        if stop or it % config.record_every == 0:
            dx = float(np.sqrt(np.sum(np.abs(x - x_prev) ** 2)))
            Xi = WaveformSet(ph, config.constraint)
            trace.append(evaluate(Xi, config, p, stage, it, dx), 1e3 * (time.perf_counter() - t0))
        if stop:
            trace.stop_reason = reason
            break
    log.info("stage p=%g stopped after %d iterations (%s)", p, it, reason)
    return WaveformSet(ph, config.constraint), trace


def initial_set(config):
    """Seeded random start: MPSK on ``init_alphabet`` if set, else on the design alphabet."""
    L = config.init_alphabet if config.init_alphabet is not None else config.constraint
    X = random_mpsk_init(config.M, config.N, L, config.seed)
    return WaveformSet(X.phases, config.constraint)


def run_p_schedule(config, X0=None):
    """Run every stage of ``config.p_schedule``, warm-starting each from the previous output."""
    X = initial_set(config) if X0 is None else _check_start(X0, config)
    traces = []
    for s, p in enumerate(config.p_schedule):
        X, tr = run_stage(config, p, X, stage=s)
        traces.append(tr)
    return X, traces
