"""Single-entry block updates.

Fixing every code entry but ``x[t, d]`` turns each weighted correlation that
involves it into ``c + a*x + b*conj(x)`` (auto) or ``c + a*x`` (cross).  With
``x = exp(1j*phi)`` the local approximation becomes a degree-2 trigonometric
polynomial in ``phi`` whose critical points are the real roots of a quartic
in ``z = tan(phi/2)``.  Under an MPSK alphabet the objective is evaluated at
all L phases at once with an L-point DFT.

Indices ``t``, ``d`` and alphabet indices are zero-based here.  Every function
in this module is the readable reference path; the solver sweeps run the
fused compiled kernel in ``_kernels``, which is checked against these.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .correlation import correlation_array
from .surrogates import (
    DEFAULT_EPSILON,
    gamma_coeff,
    majorizer_coeffs_pge2,
)
from .waveform import TWO_PI, WaveformSet, alphabet_index, as_waveform, as_weights

PSI_GUARD = 1e-12
IMAG_TOL = 1e-8
TIE_RTOL = 1e-13


@dataclass
class EntryCoeffs:
    """Decomposition of every weighted correlation touching ``x[t, d]``.

    ``auto_*`` arrays run over lags ``k = -N+1 .. N-1`` with the zero lag
    zeroed out and masked by ``auto_mask``.  ``cross_a``/``cross_c`` have
    ``2(M-1)`` rows: row ``j < M-1`` models ``w_k r_{t,l_j}(k)``, row
    ``M-1+j`` models ``conj(w_k r_{l_j,t}(k))`` (same magnitude, written
    linearly in ``x[t, d]``).  ``partners`` lists ``l_j``.
    """

    t: int
    d: int
    x_td: complex
    auto_a: np.ndarray
    auto_b: np.ndarray
    auto_c: np.ndarray
    auto_mask: np.ndarray
    cross_a: np.ndarray
    cross_c: np.ndarray
    partners: np.ndarray

    def auto_values(self, x):
        """Weighted auto-correlation lags (masked) at entry value(s) ``x``."""
        x = np.asarray(x, dtype=complex)[..., None]
        return self.auto_c + self.auto_a * x + self.auto_b * np.conj(x)

    def cross_values(self, x):
        x = np.asarray(x, dtype=complex)[..., None, None]
        return self.cross_c + self.cross_a * x

    def magnitudes(self, x):
        """Every lag magnitude that depends on ``x[t, d]``, flattened."""
        auto = np.abs(self.auto_values(x))[..., self.auto_mask]
        cross = np.abs(self.cross_values(x))
        return np.concatenate([auto, cross.reshape(cross.shape[:-2] + (-1,))], axis=-1)

    def objective(self, x, p):
        """Entry-dependent part of the lp objective at entry value(s) ``x``."""
        return np.sum(self.magnitudes(x) ** p, axis=-1)


def entry_coeffs(X, t, d, w=None, R=None):
    """Build the a/b/c decomposition for entry ``(t, d)``.

    ``c`` is obtained as the full weighted correlation minus the entry's own
    contribution, so a cached correlation array ``R`` (shape (M, M, 2N-1))
    makes this O(MN).
    """
    X = as_waveform(X)
    M, N = X.shape
    if not (0 <= t < M and 0 <= d < N):
        raise IndexError(f"entry ({t}, {d}) outside a {M} x {N} waveform set")
    w = as_weights(w, N).w
    x = X.x
    if R is None:
        R = correlation_array(x)
    K = 2 * N - 1
    k = np.arange(-N + 1, N)
    xd = x[t, d]
    fwd = d + k
    bwd = d - k
    fwd_ok = (fwd >= 0) & (fwd < N)
    bwd_ok = (bwd >= 0) & (bwd < N)
    fwd_i = np.clip(fwd, 0, N - 1)
    bwd_i = np.clip(bwd, 0, N - 1)

    auto_mask = k != 0
    a = np.where(fwd_ok, w * np.conj(x[t, fwd_i]), 0.0)
    b = np.where(bwd_ok, w * x[t, bwd_i], 0.0)
    c = w * R[t, t] - a * xd - b * np.conj(xd)
    a, b, c = (np.where(auto_mask, v, 0.0) for v in (a, b, c))

    partners = np.array([l for l in range(M) if l != t], dtype=int)
    ca = np.zeros((2 * len(partners), K), dtype=complex)
    cc = np.zeros_like(ca)
    for j, l in enumerate(partners):
        af = np.where(fwd_ok, w * np.conj(x[l, fwd_i]), 0.0)
        ca[j] = af
        cc[j] = w * R[t, l] - af * xd
        # r_{l,t}(k) picks up x[l, d-k] * conj(x[t, d]); conjugate to stay linear in x[t, d]
        ar = np.where(bwd_ok, w * np.conj(x[l, bwd_i]), 0.0)
        ca[len(partners) + j] = ar
        cc[len(partners) + j] = w * np.conj(R[l, t]) - ar * xd
    return EntryCoeffs(t, d, complex(xd), a, b, c, auto_mask, ca, cc, partners)


class TrigPoly:
    """Real degree-2 trigonometric polynomial ``Re{sum_n c_n exp(1j n phi)}``, ``n = -2..2``.

    ``coeffs[n + 2]`` holds ``c_n``.  The ``"v"`` form additionally guarantees
    ``c_{-n} = conj(c_n)`` so the sum is real without taking the real part.
    ``phi_ref`` is the expansion point (current phase), used for tie-breaking.
    """

    def __init__(self, coeffs, form="v", phi_ref=0.0):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (5,) or not np.all(np.isfinite(coeffs)):
            raise ValueError("TrigPoly needs five finite coefficients c_-2..c_2")
        if form not in ("u", "v"):
            raise ValueError(f"form must be 'u' or 'v', got {form!r}")
        self.coeffs = coeffs
        self.form = form
        self.phi_ref = float(phi_ref)

    @classmethod
    def from_half(cls, c0, c1, c2, form="v", phi_ref=0.0):
        """Build from ``value = c0 + 2 Re{c1 e^{j phi} + c2 e^{2j phi}}``."""
        c1, c2 = complex(c1), complex(c2)
        return cls([np.conj(c2), np.conj(c1), float(np.real(c0)), c1, c2], form, phi_ref)

    def value(self, phi):
        phi = np.asarray(phi, dtype=float)
        n = np.arange(-2, 3)
        return np.real(np.exp(1j * phi[..., None] * n) @ self.coeffs)

    def derivative(self, phi):
        phi = np.asarray(phi, dtype=float)
        n = np.arange(-2, 3)
        return np.real(np.exp(1j * phi[..., None] * n) @ (1j * n * self.coeffs))

    def second_derivative(self, phi):
        phi = np.asarray(phi, dtype=float)
        n = np.arange(-2, 3)
        return np.real(np.exp(1j * phi[..., None] * n) @ (-(n**2) * self.coeffs))

    @property
    def is_constant(self):
        return not np.any(self.coeffs[[0, 1, 3, 4]])

    def __repr__(self):
        return f"TrigPoly({self.coeffs!r}, form={self.form!r})"


def _accumulate(weight, a, b, c):
    c0 = np.sum(weight * (np.abs(c) ** 2 + np.abs(a) ** 2 + np.abs(b) ** 2))
    c1 = np.sum(weight * (a * np.conj(c) + c * np.conj(b)))
    c2 = np.sum(weight * a * np.conj(b))
    return c0, c1, c2


def lowp_gammas(coeffs: EntryCoeffs, p, h=1, eps=DEFAULT_EPSILON):
    """Majorizer curvatures at the current entry value, aligned with the coefficient arrays."""
    auto_r = np.abs(coeffs.auto_values(coeffs.x_td))
    cross_r = np.abs(coeffs.cross_values(coeffs.x_td))
    g_auto = np.where(coeffs.auto_mask, gamma_coeff(h, eps, p, auto_r), 0.0)
    return g_auto, gamma_coeff(h, eps, p, cross_r)


def trig_poly_lowp(coeffs: EntryCoeffs, gammas):
    """Quadratic-majorizer trigonometric polynomial (v-form) for the smoothed objective.

    Constant ``mu`` sums are omitted; they do not move the minimizer.
    """
    g_auto, g_cross = gammas
    zero = np.zeros_like(coeffs.cross_a)
    a0, a1, a2 = _accumulate(g_auto, coeffs.auto_a, coeffs.auto_b, coeffs.auto_c)
    b0, b1, b2 = _accumulate(g_cross, coeffs.cross_a, zero, coeffs.cross_c)
    return TrigPoly.from_half(a0 + b0, a1 + b1, a2 + b2, "v", np.angle(coeffs.x_td))


@dataclass
class MajorizerCoeffsP2:
    """Per-lag ``eta``, ``psi``, ``nu`` and per-pair ``tau`` of the ``p >= 2`` majorizer."""

    eta_auto: np.ndarray
    psi_auto: np.ndarray
    nu_auto: np.ndarray
    eta_cross: np.ndarray
    psi_cross: np.ndarray
    nu_cross: np.ndarray
    tau_auto: float
    tau_cross: np.ndarray


def pge2_majorizer(coeffs: EntryCoeffs, p):
    """Majorizer coefficients expanded at the current entry value.

    ``tau`` is the p-norm over the lags of each correlation pair: one for the
    auto pair and one per cross row of ``coeffs``.
    """
    auto_r = np.where(coeffs.auto_mask, np.abs(coeffs.auto_values(coeffs.x_td)), 0.0)
    cross_r = np.abs(coeffs.cross_values(coeffs.x_td))
    t_auto = _pnorm(auto_r, p)
    t_cross = np.array([_pnorm(row, p) for row in cross_r])
    ea, pa, na = majorizer_coeffs_pge2(auto_r, np.full_like(auto_r, t_auto), p)
    ec, pc, nc = majorizer_coeffs_pge2(cross_r, np.broadcast_to(t_cross[:, None], cross_r.shape), p)
    ea, pa, na = (np.where(coeffs.auto_mask, v, 0.0) for v in (ea, pa, na))
    return MajorizerCoeffsP2(ea, pa, na, ec, pc, nc, t_auto, t_cross)


def _pnorm(v, p):
    peak = np.max(v) if v.size else 0.0
    if peak == 0.0:
        return 0.0
    return float(peak * np.sum((v / peak) ** p) ** (1.0 / p))


def trig_poly_pge2(coeffs: EntryCoeffs, maj: MajorizerCoeffsP2, phi_i=None):
    """Trigonometric polynomial (u-form) of the ``p >= 2`` majorizer in the entry phase.

    Each lag contributes ``eta |r|^2 + psi Re{conj(r) r0/|r0|} + nu`` where
    ``r0`` is the lag value at the expansion phase ``phi_i``.
    """
    if phi_i is None:
        phi_i = float(np.angle(coeffs.x_td))
    x0 = np.exp(1j * phi_i)
    parts = []
    for a, b, c, eta, psi, nu, mask in (
        (coeffs.auto_a, coeffs.auto_b, coeffs.auto_c, maj.eta_auto, maj.psi_auto, maj.nu_auto, coeffs.auto_mask),
        (coeffs.cross_a, np.zeros_like(coeffs.cross_a), coeffs.cross_c, maj.eta_cross, maj.psi_cross, maj.nu_cross, True),
    ):
        r0 = c + a * x0 + b * np.conj(x0)
        mag = np.abs(r0)
        psi_p = np.where(mask, psi / np.maximum(mag, PSI_GUARD), 0.0)
        c0, c1, c2 = _accumulate(eta, a, b, c)
        c0 += np.sum(np.where(mask, nu, 0.0)) + np.sum(psi_p * np.real(np.conj(c) * r0))
        c1 += 0.5 * np.sum(psi_p * (a * np.conj(r0) + np.conj(b) * r0))
        parts.append((c0, c1, c2))
    (a0, a1, a2), (b0, b1, b2) = parts
    return TrigPoly.from_half(a0 + b0, a1 + b1, a2 + b2, "u", phi_i)


def quartic_from_trig(tp: TrigPoly, form=None):
    """Quartic ``sum q_k z**k`` (``q[k]``) whose real roots give ``phi = 2 atan(z)`` critical points.

    The derivative is written as
    ``k0 cos^2 + k1 sin^2 + k2 sin cos + k3 cos + k4 sin`` and multiplied by
    ``(1 + z^2)^2`` after the half-angle substitution.
    """
    form = tp.form if form is None else form
    cm2, cm1, _, c1, c2 = tp.coeffs
    if form == "u":
        k0 = 2.0 * np.imag(cm2 - c2)
        k1 = 2.0 * np.imag(c2 - cm2)
        k2 = -4.0 * np.real(c2 + cm2)
        k3 = np.imag(cm1 - c1)
        k4 = -np.real(cm1 + c1)
    else:
        k0 = -4.0 * np.imag(c2)
        k1 = 4.0 * np.imag(c2)
        k2 = -8.0 * np.real(c2)
        k3 = -2.0 * np.imag(c1)
        k4 = -2.0 * np.real(c1)
    return np.array(
        [k0 + k3, 2.0 * (k2 + k4), 2.0 * (2.0 * k1 - k0), 2.0 * (k4 - k2), k0 - k3],
        dtype=float,
    )


def real_roots_quartic(q, imag_tol=IMAG_TOL):
    """Real roots of ``sum q[k] z**k`` via companion-matrix eigenvalues.

    Leading coefficients that vanish relative to the largest one are dropped
    and the lower-degree polynomial is solved.  Roots with
    ``|imag| <= imag_tol * (1 + |real|)`` count as real and get one Newton
    polish step.
    """
    q = np.asarray(q, dtype=float)
    scale = np.max(np.abs(q))
    if scale == 0.0:
        raise ValueError("zero polynomial has no isolated roots")
    q = q / scale
    deg = len(q) - 1
    while deg > 0 and abs(q[deg]) <= 1e-14:
        deg -= 1
    if deg == 0:
        return np.array([])
    roots = np.roots(q[deg::-1])
    real = np.real(roots[np.abs(np.imag(roots)) <= imag_tol * (1.0 + np.abs(np.real(roots)))])
    dq = np.arange(1, deg + 1) * q[1 : deg + 1]
    val = np.polyval(q[deg::-1], real)
    der = np.polyval(dq[::-1], real)
    ok = der != 0
    real = np.where(ok, real - np.where(ok, val / np.where(ok, der, 1.0), 0.0), real)
    return np.sort(real)


def critical_phases(tp: TrigPoly):
    """Candidate minimizers: quartic roots mapped back, plus ``pi`` and the current phase."""
    cands = [tp.phi_ref, np.pi]
    q = quartic_from_trig(tp)
    if np.any(q):
        cands.extend(2.0 * np.arctan(real_roots_quartic(q)))
    return np.array(cands)


def best_phase_continuous(tp: TrigPoly):
    """Minimize the trigonometric polynomial over ``(-pi, pi]``.

    Ties (within rounding) keep the current phase, so the result never has a
    larger value than ``phi_ref``.
    """
    cands = critical_phases(tp)
    vals = tp.value(cands)
    j = int(np.argmin(vals))
    tol = TIE_RTOL * float(np.sum(np.abs(tp.coeffs)))
    if vals[j] < vals[0] - tol:
        return float(cands[j])
    return float(cands[0])


def discrete_values(coeffs: EntryCoeffs, L, p):
    """Entry-dependent lp objective at every alphabet phase ``2 pi l / L``.

    Each lag's ``L`` candidate values are the L-point DFT of ``{a, c, b}``
    (auto) or ``{a, c}`` (cross); for ``L = 2`` the auto sequence aliases to
    ``{a + b, c}``.
    """
    if L < 2:
        raise ValueError(f"alphabet size must be >= 2, got {L}")
    mask = coeffs.auto_mask
    a, b, c = coeffs.auto_a[mask], coeffs.auto_b[mask], coeffs.auto_c[mask]
    if L == 2:
        auto_seq = np.stack([a + b, c], axis=-1)
    else:
        auto_seq = np.stack([a, c, b], axis=-1)
    auto_F = np.fft.fft(auto_seq, n=L, axis=-1)
    cross_seq = np.stack([coeffs.cross_a.ravel(), coeffs.cross_c.ravel()], axis=-1)
    cross_F = np.fft.fft(cross_seq, n=L, axis=-1)
    mags = np.concatenate([np.abs(auto_F), np.abs(cross_F)], axis=0)
    peak = mags.max()
    if peak == 0.0:
        return np.zeros(L)
    # common rescaling keeps large p finite and does not move the argmin
    return peak**p * np.sum((mags / peak) ** p, axis=0)


def best_phase_discrete(coeffs: EntryCoeffs, L, p, current_l):
    """Alphabet index minimizing the entry objective; ties go to ``current_l``, then lowest index."""
    vals = discrete_values(coeffs, L, p)
    best = float(vals.min())
    tol = TIE_RTOL * max(abs(best), float(np.max(np.abs(vals))))
    if vals[current_l] <= best + tol:
        return int(current_l)
    return int(np.flatnonzero(vals <= best + tol)[0])


@dataclass(frozen=True)
class EntryRegime:
    """Which local problem an entry update solves.

    ``L`` set: exact discrete search of ``|.|**p``.  Otherwise ``p >= 2`` uses
    the quadratic majorizer and ``0 < p <= 1`` the smoothed family ``h``.
    """

    p: float
    L: Optional[int] = None
    h: int = 1
    eps: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.L is None and 1 < self.p < 2:
            raise ValueError(f"continuous-phase entry updates support p <= 1 or p >= 2, got {self.p}")

    @property
    def kind(self):
        if self.L is not None:
            return "discrete"
        return "pge2" if self.p >= 2 else "lowp"


def entry_update(X, t, d, regime: EntryRegime, w=None, R=None):
    """Optimize one entry; returns ``(new WaveformSet, change in the true lp objective)``.

    For ``p >= 2`` a surrogate step that would raise the true objective
    (possible when a lag outgrows its pair bound ``tau``) is rejected.
    """
    X = as_waveform(X)
    coeffs = entry_coeffs(X, t, d, w, R)
    p = regime.p
    x_old = coeffs.x_td
    if regime.kind == "discrete":
        cur = int(alphabet_index(np.angle(x_old), regime.L))
        l_new = best_phase_discrete(coeffs, regime.L, p, cur)
        phi = TWO_PI * l_new / regime.L
    elif regime.kind == "lowp":
        tp = trig_poly_lowp(coeffs, lowp_gammas(coeffs, p, regime.h, regime.eps))
        phi = best_phase_continuous(tp)
    else:
        tp = trig_poly_pge2(coeffs, pge2_majorizer(coeffs, p))
        phi = best_phase_continuous(tp)
    x_new = np.exp(1j * phi)
    f_old = float(coeffs.objective(x_old, p))
    f_new = float(coeffs.objective(x_new, p))
    if regime.kind == "pge2" and f_new > f_old:
        phi, f_new = float(np.angle(x_old)), f_old
    phases = X.phases.copy()
    phases[t, d] = phi
    return WaveformSet(phases, X.constraint), f_new - f_old
