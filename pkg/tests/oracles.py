"""Slow but obviously correct reference computations used by the tests."""

import numpy as np


def direct_correlation(x_m, x_l):
    """r(k) = sum_n x_m[n] conj(x_l[n+k]) by explicit double loop, k = -N+1 .. N-1."""
    N = len(x_m)
    out = np.zeros(2 * N - 1, dtype=complex)
    for k in range(-N + 1, N):
        s = 0j
        for n in range(N):
            if 0 <= n + k < N:
                s += x_m[n] * np.conj(x_l[n + k])
        out[k + N - 1] = s
    return out


def direct_lp(x, w, p):
    """Weighted lp sidelobe objective by explicit loops over (m, l, k)."""
    M, N = x.shape
    total = 0.0
    for m in range(M):
        for l in range(M):
            r = direct_correlation(x[m], x[l])
            for k in range(-N + 1, N):
                if m == l and k == 0:
                    continue
                total += abs(w[k + N - 1] * r[k + N - 1]) ** p
    return total


def central_difference(fun, phases, t, step=1e-6):
    """Central finite-difference gradient of ``fun(phases)`` along row ``t``."""
    phases = np.array(phases, dtype=float)
    g = np.zeros(phases.shape[1])
    for n in range(phases.shape[1]):
        up = phases.copy()
        dn = phases.copy()
        up[t, n] += step
        dn[t, n] -= step
        g[n] = (fun(up) - fun(dn)) / (2 * step)
    return g


def grid_argmin(fun, n=200_000):
    """Minimum of a periodic function of phi over an n-point grid on [-pi, pi)."""
    phi = -np.pi + 2 * np.pi * np.arange(n) / n
    v = fun(phi)
    i = int(np.argmin(v))
    return phi[i], v[i]


def bracketed_real_roots(q, n=400_000):
    """Real roots of sum q[k] z**k located by sign changes on a tan-spaced grid, refined by bisection."""
    # phi in (-pi, pi) covers the whole real z axis through z = tan(phi/2)
    phi = np.linspace(-np.pi, np.pi, n + 2)[1:-1]
    z = np.tan(phi / 2)
    poly = np.polynomial.polynomial.Polynomial(q)
    # dividing by (1 + z^2)^2 keeps values bounded without moving roots
    v = poly(z) / (1 + z**2) ** 2
    idx = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
    roots = []
    for i in idx:
        lo, hi = z[i], z[i + 1]
        flo = poly(lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = poly(mid)
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    exact = np.flatnonzero(v == 0)
    roots.extend(z[exact])
    return np.sort(np.array(roots))
