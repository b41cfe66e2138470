"""Compiled cyclic entry sweep.

One call runs Algorithm-style t-outer / d-inner updates over every entry,
keeping the correlation cache ``R`` in sync incrementally.  The arithmetic
mirrors ``entry.py`` step for step; the test suite holds the two together.
"""

import math

import numpy as np
from numba import njit

DISCRETE = 0
LOWP = 1
PGE2 = 2

_IMAG_TOL = 1e-8
_PSI_GUARD = 1e-12
_TIE_RTOL = 1e-13
_SINGULAR_RTOL = 1e-12


@njit(cache=True)
def eta_unit(u, p):
    if p == 2.0:
        return 1.0
    gap = 1.0 - u
    if gap <= _SINGULAR_RTOL:
        return 0.5 * p * (p - 1.0) * u ** (p - 2.0)
    if p * gap >= 0.5:
        return (1.0 + (p - 1.0) * u**p - p * u ** (p - 1.0)) / (gap * gap)
    term = 0.5 * p * (p - 1.0) * u ** (p - 2.0)
    acc = term
    ratio = gap / u
    for j in range(3, 60):
        term = term * (p - j + 1.0) / j * ratio
        acc += term
        if abs(term) <= 1e-17 * abs(acc):
            break
    return acc


@njit(cache=True)
def _pow_abs2(m2, p, half):
    # |z|**p from m2 = |z|**2; exact squaring chain when p/2 is a small integer
    if half > 0:
        out = 1.0
        base = m2
        e = half
        while e > 0:
            if e & 1:
                out *= base
            base *= base
            e >>= 1
        return out
    return m2 ** (0.5 * p)


@njit(cache=True)
def _abs2(z):
    return z.real * z.real + z.imag * z.imag


@njit(cache=True)
def _eta_from_pow(u, up, p):
    # eta_unit with u**p supplied by the caller
    gap = 1.0 - u
    if p * gap >= 0.5:
        return (1.0 + (p - 1.0) * up - p * up / u) / (gap * gap) if u > 0.0 else 1.0
    if p == 2.0:
        return 1.0
    return eta_unit(u, p)


@njit(cache=True)
def gamma_scalar(h, eps, p, r):
    ro = r if r > eps else eps
    if h == 1:
        return 0.5 * p * ro ** (p - 2.0)
    if h == 2:
        return 0.5 / (math.log((p + 1.0) / p) * ro * (ro + p))
    return math.exp(-ro / p) / (2.0 * p * ro)


@njit(cache=True)
def smooth_g_scalar(h, eps, p, r):
    if r <= eps:
        if h == 1:
            return 0.5 * p * eps ** (p - 2.0) * r * r
        if h == 2:
            return r * r / (2.0 * eps * (p + eps) * math.log((p + 1.0) / p))
        return math.exp(-eps / p) / (2.0 * p * eps) * r * r
    if h == 1:
        return r**p - (1.0 - 0.5 * p) * eps**p
    if h == 2:
        return (math.log((p + r) / p) - math.log((p + eps) / p) + eps / (2.0 * (p + eps))) / math.log(
            (p + 1.0) / p
        )
    return -math.exp(-r / p) + (1.0 + eps / (2.0 * p)) * math.exp(-eps / p)


@njit(cache=True)
def real_roots(q, out):
    """Real roots of sum q[k] z**k into ``out``; returns the count (-1 for the zero polynomial)."""
    scale = 0.0
    for k in range(5):
        if abs(q[k]) > scale:
            scale = abs(q[k])
    if scale == 0.0:
        return -1
    qq = q / scale
    deg = 4
    while deg > 0 and abs(qq[deg]) <= 1e-14:
        deg -= 1
    if deg == 0:
        return 0
    comp = np.zeros((deg, deg))
    for i in range(deg):
        comp[0, i] = -qq[deg - 1 - i] / qq[deg]
    for i in range(1, deg):
        comp[i, i - 1] = 1.0
    ev = np.linalg.eigvals(comp.astype(np.complex128))
    n = 0
    for i in range(deg):
        re = ev[i].real
        if abs(ev[i].imag) <= _IMAG_TOL * (1.0 + abs(re)):
            val = 0.0
            der = 0.0
            for k in range(deg, -1, -1):
                der = der * re + val
                val = val * re + qq[k]
            if der != 0.0:
                re = re - val / der
            out[n] = re
            n += 1
    return n


@njit(cache=True)
def _trig_value(c0, c1, c2, phi):
    z = complex(math.cos(phi), math.sin(phi))
    return c0 + 2.0 * (c1 * z + c2 * z * z).real


@njit(cache=True)
def _best_phase(c0, c1, c2, phi_ref, roots_buf, qbuf):
    k0 = -4.0 * c2.imag
    k1 = 4.0 * c2.imag
    k2 = -8.0 * c2.real
    k3 = -2.0 * c1.imag
    k4 = -2.0 * c1.real
    qbuf[0] = k0 + k3
    qbuf[1] = 2.0 * (k2 + k4)
    qbuf[2] = 2.0 * (2.0 * k1 - k0)
    qbuf[3] = 2.0 * (k4 - k2)
    qbuf[4] = k0 - k3
    v_ref = _trig_value(c0, c1, c2, phi_ref)
    best_phi = math.pi
    best_v = _trig_value(c0, c1, c2, math.pi)
    n = real_roots(qbuf, roots_buf)
    for i in range(n):
        phi = 2.0 * math.atan(roots_buf[i])
        v = _trig_value(c0, c1, c2, phi)
        if v < best_v:
            best_v = v
            best_phi = phi
    tol = _TIE_RTOL * (abs(c0) + 4.0 * abs(c1) + 4.0 * abs(c2))
    if best_v < v_ref - tol:
        return best_phi
    return phi_ref


@njit(cache=True)
def _entry_objective(A, B, C, act, nt, z, p, half):
    zc = z.conjugate()
    s = 0.0
    for i in range(nt):
        if act[i]:
            s += _pow_abs2(_abs2(C[i] + A[i] * z + B[i] * zc), p, half)
    return s


@njit(cache=True)
def entry_sweep(ph, x, R, w, regime, p, h, eps, L):
    """Update every entry once in cyclic order; mutates ``ph``, ``x`` and ``R`` in place.

    Returns the number of entries whose value changed.
    """
    M, N = x.shape
    K = 2 * N - 1
    nb = 2 * M - 1
    nt = nb * K
    A = np.zeros(nt, dtype=np.complex128)
    B = np.zeros(nt, dtype=np.complex128)
    C = np.zeros(nt, dtype=np.complex128)
    R0 = np.zeros(nt, dtype=np.complex128)
    act = np.zeros(nt, dtype=np.bool_)
    taus = np.zeros(nb)
    accs = np.zeros(nb)
    tps = np.zeros(nb)
    V = np.zeros(nt)
    roots_buf = np.zeros(4)
    qbuf = np.zeros(5)
    two_pi = 2.0 * math.pi
    half = int(0.5 * p) if 0.5 * p == int(0.5 * p) and p <= 256.0 else 0
    changed = 0
    for t in range(M):
        for d in range(N):
            xd = x[t, d]
            xdc = xd.conjugate()
            # block 0: auto; blocks 1..M-1 forward cross; M..2M-2 reverse cross
            for idx in range(K):
                k = idx - (N - 1)
                i = idx
                wk = w[idx]
                if k == 0 or wk == 0.0:
                    act[i] = False
                    A[i] = 0.0
                    B[i] = 0.0
                    C[i] = 0.0
                    R0[i] = 0.0
                else:
                    act[i] = True
                    a = 0j
                    b = 0j
                    if 0 <= d + k < N:
                        a = wk * x[t, d + k].conjugate()
                    if 0 <= d - k < N:
                        b = wk * x[t, d - k]
                    r0 = wk * R[t, t, idx]
                    A[i] = a
                    B[i] = b
                    C[i] = r0 - a * xd - b * xdc
                    R0[i] = r0
            j = 0
            for l in range(M):
                if l == t:
                    continue
                j += 1
                for idx in range(K):
                    k = idx - (N - 1)
                    wk = w[idx]
                    i_f = j * K + idx
                    i_r = (j + M - 1) * K + idx
                    if wk == 0.0:
                        act[i_f] = False
                        act[i_r] = False
                        A[i_f] = 0.0
                        C[i_f] = 0.0
                        R0[i_f] = 0.0
                        A[i_r] = 0.0
                        C[i_r] = 0.0
                        R0[i_r] = 0.0
                        continue
                    act[i_f] = True
                    act[i_r] = True
                    a = 0j
                    if 0 <= d + k < N:
                        a = wk * x[l, d + k].conjugate()
                    r0 = wk * R[t, l, idx]
                    A[i_f] = a
                    C[i_f] = r0 - a * xd
                    R0[i_f] = r0
                    a = 0j
                    if 0 <= d - k < N:
                        a = wk * x[l, d - k].conjugate()
                    r0 = wk * R[l, t, idx].conjugate()
                    A[i_r] = a
                    C[i_r] = r0 - a * xd
                    R0[i_r] = r0

            # common rescaling keeps |r|**p finite for large p
            s = 0.0
            for i in range(nt):
                if act[i]:
                    m = _abs2(R0[i])
                    if m > s:
                        s = m
            s = math.sqrt(s) if s > 0.0 else 1.0
            inv = 1.0 / s
            for i in range(nt):
                A[i] *= inv
                B[i] *= inv
                C[i] *= inv
                R0[i] *= inv

            phi_old = ph[t, d]
            if regime == DISCRETE:
                step = two_pi / L
                cur = int(round(phi_old / step)) % L
                best_l = cur
                best_v = 0.0
                vals = np.empty(L)
                vmax = 0.0
                for lp in range(L):
                    ang = -step * lp
                    zz = complex(math.cos(ang), math.sin(ang))
                    zz2 = zz * zz
                    v = 0.0
                    for i in range(nt):
                        if act[i]:
                            v += _pow_abs2(_abs2(A[i] + C[i] * zz + B[i] * zz2), p, half)
                    vals[lp] = v
                    if v > vmax:
                        vmax = v
                best_v = vals[0]
                for lp in range(1, L):
                    if vals[lp] < best_v:
                        best_v = vals[lp]
                tol = _TIE_RTOL * max(abs(best_v), vmax)
                if vals[cur] > best_v + tol:
                    for lp in range(L):
                        if vals[lp] <= best_v + tol:
                            best_l = lp
                            break
                if best_l == cur:
                    continue
                phi_new = step * best_l
                if phi_new > math.pi:
                    phi_new -= two_pi
            else:
                c0 = 0.0
                c1 = 0j
                c2 = 0j
                if regime == PGE2 and p == 2.0:
                    # the quadratic majorizer is exact at p = 2
                    for i in range(nt):
                        if act[i]:
                            a = A[i]
                            b = B[i]
                            c = C[i]
                            c0 += _abs2(c) + _abs2(a) + _abs2(b)
                            c1 += a * c.conjugate() + c * b.conjugate()
                            c2 += a * b.conjugate()
                elif regime == LOWP:
                    for i in range(nt):
                        if act[i]:
                            g = gamma_scalar(h, eps, p, abs(R0[i]) * s)
                            a = A[i]
                            b = B[i]
                            c = C[i]
                            c0 += g * (_abs2(c) + _abs2(a) + _abs2(b))
                            c1 += g * (a * c.conjugate() + c * b.conjugate())
                            c2 += g * a * b.conjugate()
                else:
                    # one power per lag: u**p = (|r0|/peak)**p / acc within each block
                    f_old = 0.0
                    for blk in range(nb):
                        peak = 0.0
                        for i in range(blk * K, (blk + 1) * K):
                            if act[i] and _abs2(R0[i]) > peak:
                                peak = _abs2(R0[i])
                        peak = math.sqrt(peak)
                        if peak == 0.0:
                            taus[blk] = 0.0
                            continue
                        inv_pk2 = 1.0 / (peak * peak)
                        acc = 0.0
                        for i in range(blk * K, (blk + 1) * K):
                            if act[i]:
                                v = _pow_abs2(_abs2(R0[i]) * inv_pk2, p, half)
                                V[i] = v
                                acc += v
                        taus[blk] = peak * acc ** (1.0 / p)
                        accs[blk] = acc
                        tps[blk] = peak**p * acc
                        f_old += tps[blk]
                    for i in range(nt):
                        if not act[i]:
                            continue
                        blk = i // K
                        tau = taus[blk]
                        if tau == 0.0:
                            continue
                        r0 = R0[i]
                        mag = abs(r0)
                        u = mag / tau
                        up = V[i] / accs[blk]
                        if u >= 1.0:
                            u = 1.0
                            up = 1.0
                        eh = _eta_from_pow(u, up, p)
                        tp = tps[blk]
                        eta = tp / (tau * tau) * eh
                        upm1 = up / u if u > 0.0 else 0.0
                        psi = tp / tau * (p * upm1 - 2.0 * eh * u)
                        nu = tp * (eh * u * u - (p - 1.0) * up)
                        psi_p = psi / max(mag, _PSI_GUARD)
                        a = A[i]
                        b = B[i]
                        c = C[i]
                        c0 += eta * (_abs2(c) + _abs2(a) + _abs2(b)) + nu
                        c0 += psi_p * (c.conjugate() * r0).real
                        c1 += eta * (a * c.conjugate() + c * b.conjugate())
                        c1 += 0.5 * psi_p * (a * r0.conjugate() + b.conjugate() * r0)
                        c2 += eta * a * b.conjugate()
                phi_new = _best_phase(c0, c1, c2, phi_old, roots_buf, qbuf)
                if phi_new == phi_old:
                    continue
                if regime == PGE2 and p != 2.0:
                    z_new = complex(math.cos(phi_new), math.sin(phi_new))
                    f_new = _entry_objective(A, B, C, act, nt, z_new, p, half)
                    if f_new > f_old:
                        continue

            x_new = complex(math.cos(phi_new), math.sin(phi_new))
            delta = x_new - xd
            dc = delta.conjugate()
            # incremental correlation update
            for idx in range(K):
                k = idx - (N - 1)
                if k == 0:
                    continue
                if 0 <= d + k < N:
                    R[t, t, idx] += delta * x[t, d + k].conjugate()
                if 0 <= d - k < N:
                    R[t, t, idx] += x[t, d - k] * dc
            for l in range(M):
                if l == t:
                    continue
                for idx in range(K):
                    k = idx - (N - 1)
                    if 0 <= d + k < N:
                        R[t, l, idx] += delta * x[l, d + k].conjugate()
                    if 0 <= d - k < N:
                        R[l, t, idx] += x[l, d - k] * dc
            x[t, d] = x_new
            ph[t, d] = phi_new
            changed += 1
    return changed
