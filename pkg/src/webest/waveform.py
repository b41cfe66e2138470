"""Value types for unimodular waveform sets, phase constraints and lag weights."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ._validation import check_phase_matrix, wrap_phase

TWO_PI = 2.0 * math.pi
ALPHABET_ATOL = 1e-12


@dataclass(frozen=True)
class PhaseConstraint:
    """Feasible phase set: continuous (``L=None``) or an L-point MPSK alphabet."""

    L: Optional[int] = None

    def __post_init__(self):
        if self.L is not None:
            if int(self.L) != self.L or self.L < 2:
                raise ValueError(f"discrete alphabet size must be an integer >= 2, got {self.L}")
            object.__setattr__(self, "L", int(self.L))

    @classmethod
    def continuous(cls) -> "PhaseConstraint":
        return cls(None)

    @classmethod
    def discrete(cls, L: int) -> "PhaseConstraint":
        return cls(L)

    @classmethod
    def parse(cls, value: Union[str, int, None, "PhaseConstraint"]) -> "PhaseConstraint":
        """Accept ``"inf"``/``None`` for continuous, an integer (or its string) for MPSK."""
        if isinstance(value, PhaseConstraint):
            return value
        if value is None:
            return cls(None)
        if isinstance(value, str):
            v = value.strip().lower()
            if v in ("inf", "infinity", "continuous", "cont"):
                return cls(None)
            try:
                value = int(v)
            except ValueError:
                raise ValueError(f"invalid alphabet {value!r}; expected an integer >= 2 or 'inf'") from None
        if isinstance(value, bool) or int(value) != value:
            raise ValueError(f"invalid alphabet {value!r}; expected an integer >= 2 or 'inf'")
        return cls(int(value))

    @property
    def is_discrete(self) -> bool:
        return self.L is not None

    def __str__(self) -> str:
        return "inf" if self.L is None else str(self.L)

    def contains(self, phases: np.ndarray, atol: float = ALPHABET_ATOL) -> bool:
        if self.L is None:
            return True
        return bool(np.all(alphabet_distance(phases, self.L) <= atol))


def alphabet_distance(phases: np.ndarray, L: int) -> np.ndarray:
    """Absolute phase distance from each entry to the nearest point of the L-point alphabet."""
    step = TWO_PI / L
    idx = np.round(np.asarray(phases, dtype=float) / step)
    return np.abs(np.asarray(phases) - idx * step)


def alphabet_index(phases: np.ndarray, L: int) -> np.ndarray:
    """Zero-based alphabet index of each (on-alphabet) phase."""
    step = TWO_PI / L
    return np.mod(np.round(np.asarray(phases, dtype=float) / step).astype(np.int64), L)


def alphabet_phase(index: np.ndarray, L: int) -> np.ndarray:
    """Canonical wrapped phase of zero-based alphabet indices."""
    return wrap_phase(TWO_PI * np.asarray(index, dtype=float) / L)


class WaveformSet:
    """An M x N set of unit-modulus sequences stored by phase.

    Phases are the canonical representation and are wrapped to ``(-pi, pi]``;
    the complex entries ``exp(1j * phase)`` are derived on demand.  Instances
    are immutable: the phase array is read-only.

    Parameters
    ----------
    phases : array_like of shape (M, N)
        Phase matrix in radians.
    constraint : PhaseConstraint, optional
        Constraint the set satisfies.  A discrete constraint is validated
        against the alphabet at construction.
    """

    __slots__ = ("_phases", "constraint")

    def __init__(self, phases, constraint: Optional[PhaseConstraint] = None):
        ph = wrap_phase(check_phase_matrix(phases))
        constraint = constraint if constraint is not None else PhaseConstraint()
        if constraint.is_discrete:
            dist = alphabet_distance(ph, constraint.L)
            if np.any(dist > ALPHABET_ATOL):
                m, n = np.unravel_index(np.argmax(dist), dist.shape)
                raise ValueError(
                    f"phase at row {m}, column {n} is off the {constraint.L}-point alphabet "
                    f"(distance {dist[m, n]:.3e})"
                )
            ph = alphabet_phase(alphabet_index(ph, constraint.L), constraint.L)
        ph.setflags(write=False)
        self._phases = ph
        self.constraint = constraint

    @classmethod
    def from_complex(cls, X, constraint: Optional[PhaseConstraint] = None, rtol: float = 1e-9) -> "WaveformSet":
        X = np.asarray(X, dtype=complex)
        if X.ndim != 2:
            raise ValueError(f"expected a 2-D complex matrix, got shape {X.shape}")
        mod = np.abs(X)
        if np.any(np.abs(mod - 1.0) > rtol):
            m, n = np.unravel_index(np.argmax(np.abs(mod - 1.0)), X.shape)
            raise ValueError(f"entry at row {m}, column {n} has modulus {mod[m, n]!r}, expected 1")
        return cls(np.angle(X), constraint)

    @property
    def phases(self) -> np.ndarray:
        return self._phases

    @property
    def x(self) -> np.ndarray:
        """Complex entries ``exp(1j * phases)`` (fresh array)."""
        return np.exp(1j * self._phases)

    @property
    def M(self) -> int:
        return self._phases.shape[0]

    @property
    def N(self) -> int:
        return self._phases.shape[1]

    @property
    def shape(self):
        return self._phases.shape

    def with_phases(self, phases) -> "WaveformSet":
        return WaveformSet(phases, self.constraint)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WaveformSet):
            return NotImplemented
        return self.constraint == other.constraint and np.array_equal(self._phases, other._phases)

    def __hash__(self):
        return hash((self._phases.tobytes(), self.shape, self.constraint))

    def __repr__(self) -> str:
        return f"WaveformSet(M={self.M}, N={self.N}, alphabet={self.constraint})"


def as_waveform(X) -> WaveformSet:
    """Coerce a WaveformSet, a real phase matrix or a complex unimodular matrix."""
    if isinstance(X, WaveformSet):
        return X
    arr = np.asarray(X)
    if np.iscomplexobj(arr):
        return WaveformSet.from_complex(arr)
    return WaveformSet(arr)


@dataclass(frozen=True)
class WeightVector:
    """Per-lag weights ``w_k`` for ``k = -N+1 .. N-1``; ``w[k + N - 1]`` holds ``w_k``."""

    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=float).ravel()
        if w.size < 3 or w.size % 2 == 0:
            raise ValueError(f"weight vector length must be 2N-1 with N >= 2, got {w.size}")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0) or np.any(w > 1.0):
            bad = int(np.flatnonzero(~((w >= 0.0) & (w <= 1.0)))[0])
            raise ValueError(f"weight at lag {bad - (w.size - 1) // 2} is {w[bad]!r}, outside [0, 1]")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def ones(cls, N: int) -> "WeightVector":
        return cls(np.ones(2 * N - 1))

    @classmethod
    def band(cls, N: int, lo: int, hi: int) -> "WeightVector":
        """Binary mask with ``w_k = 1`` for ``lo <= k <= hi`` and zero elsewhere."""
        if lo > hi or lo < -N + 1 or hi > N - 1:
            raise ValueError(f"lag interval [{lo}, {hi}] not inside [{-N + 1}, {N - 1}]")
        k = np.arange(-N + 1, N)
        return cls(((k >= lo) & (k <= hi)).astype(float))

    @property
    def N(self) -> int:
        return (self.w.size + 1) // 2

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.N + 1, self.N)

    def at(self, k: int) -> float:
        """Weight of lag ``k`` (negative lags allowed)."""
        if abs(k) > self.N - 1:
            raise IndexError(f"lag {k} outside [{-self.N + 1}, {self.N - 1}]")
        return float(self.w[k + self.N - 1])

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.w, self.w[::-1]))

    def __eq__(self, other):
        if not isinstance(other, WeightVector):
            return NotImplemented
        return np.array_equal(self.w, other.w)

    def __hash__(self):
        return hash(self.w.tobytes())


def as_weights(w, N: int) -> WeightVector:
    """Coerce ``None`` (all ones), a WeightVector, or an explicit length-(2N-1) array."""
    if w is None:
        return WeightVector.ones(N)
    if not isinstance(w, WeightVector):
        w = WeightVector(w)
    if w.N != N:
        raise ValueError(f"weights are for N={w.N}, waveform has N={N}")
    return w


@dataclass(frozen=True)
class CorrelationSet:
    """All ``M**2`` aperiodic correlations; ``r[m, l, k + N - 1] = r_{m,l}(k)``."""

    r: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.r.shape[0]

    @property
    def N(self) -> int:
        return (self.r.shape[2] + 1) // 2

    def lag(self, m: int, l: int, k: int) -> complex:
        return complex(self.r[m, l, k + self.N - 1])

    def sidelobe_mask(self) -> np.ndarray:
        """Boolean (M, M, 2N-1) mask of the sidelobe region (auto zero lag excluded)."""
        return sidelobe_mask(self.M, self.N)


def sidelobe_mask(M: int, N: int) -> np.ndarray:
    mask = np.ones((M, M, 2 * N - 1), dtype=bool)
    idx = np.arange(M)
    mask[idx, idx, N - 1] = False
    return mask


def sidelobe_indices(M: int, N: int):
    """Enumerate sidelobe triples ``(m, l, k)``; there are ``M**2 (2N-1) - M`` of them."""
    for m in range(M):
        for l in range(M):
            for k in range(-N + 1, N):
                if m == l and k == 0:
                    continue
                yield m, l, k


def random_mpsk_init(M: int, N: int, L: Union[int, None, PhaseConstraint] = 8, seed=None) -> WaveformSet:
    """Random feasible start: MPSK phases ``2 pi (l-1)/L`` with uniform ``l``.

    With ``L=None`` (continuous) the phases are drawn uniformly on ``(-pi, pi]``.
    The draw depends only on ``(M, N, L, seed)``.
    """
    if M < 1 or N < 2:
        raise ValueError(f"need M >= 1 and N >= 2, got M={M}, N={N}")
    constraint = PhaseConstraint.parse(L)
    rng = np.random.default_rng(seed)
    if constraint.is_discrete:
        idx = rng.integers(0, constraint.L, size=(M, N))
        return WaveformSet(alphabet_phase(idx, constraint.L), constraint)
    return WaveformSet(math.pi - TWO_PI * rng.random((M, N)), constraint)


def frobenius_delta(X: Union[WaveformSet, np.ndarray], Y: Union[WaveformSet, np.ndarray]) -> float:
    """``||X - Y||_F`` between the complex entry matrices."""
    a = X.x if isinstance(X, WaveformSet) else np.asarray(X)
    b = Y.x if isinstance(Y, WaveformSet) else np.asarray(Y)
    if not np.iscomplexobj(a):
        a = np.exp(1j * a)
    if not np.iscomplexobj(b):
        b = np.exp(1j * b)
    return float(np.linalg.norm(a - b))


def mpsk_phases(L: int) -> Sequence[float]:
    return [float(v) for v in alphabet_phase(np.arange(L), L)]
