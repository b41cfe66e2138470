"""Local approximation coefficients for the weighted lp objective.

Three families live here:

* the quadratic majorizer of ``|r|**p`` for ``p >= 2`` (``eta``, ``psi``, ``nu``
  with the per-pair bound ``tau``),
* the epsilon-smoothed approximations ``g_h`` of ``|r|**p`` for small ``p``
  together with the curvature ``gamma`` of their quadratic majorizer,
* the pure-quadratic coefficients (``nu_bar``, ``sigma``) used on the gradient
  path, which share value and slope with ``|r|**p`` at the expansion point.

All functions broadcast over numpy arrays of magnitudes.
"""

import math

import numpy as np

from ._validation import check_p, check_positive, check_smooth_kind
from .correlation import correlation_array
from .waveform import as_waveform, as_weights, sidelobe_mask

DEFAULT_EPSILON = 0.05
GRADIENT_GUARD = 1e-8
TAU_SINGULAR_RTOL = 1e-12


def tau(abs_weighted_corr, p):
    """p-norm of a vector of weighted correlation magnitudes."""
    p = check_p(p)
    a = np.abs(np.asarray(abs_weighted_corr, dtype=float)).ravel()
    if a.size == 0:
        raise ValueError("tau needs a non-empty vector")
    peak = a.max()
    if peak == 0.0:
        return 0.0
    # scaled to keep large p from overflowing
    return float(peak * np.sum((a / peak) ** p) ** (1.0 / p))


def eta_unit(u, p):
    """Majorizer curvature for ``tau = 1`` at ``u = |r|/tau`` in ``[0, 1]``.

    Equals ``(1 + (p-1) u**p - p u**(p-1)) / (1-u)**2``, the second-order
    Taylor remainder of ``x**p`` between ``u`` and 1.  Close to ``u = 1`` the
    closed form cancels, so the remainder series is summed instead.
    """
    u = np.asarray(u, dtype=float)
    gap = 1.0 - u
    out = np.empty_like(u)
    near = p * gap < 0.5
    far = ~near
    if np.any(far):
        uf, gf = u[far], gap[far]
        out[far] = (1.0 + (p - 1) * uf**p - p * uf ** (p - 1)) / gf**2
    if np.any(near):
        un, gn = u[near], gap[near]
        # sum_j f^(j)(u) gap^(j-2) / j!  for f(x) = x**p
        term = 0.5 * p * (p - 1) * un ** (p - 2)
        acc = term.copy()
        ratio = gn / un
        for j in range(3, 60):
            term = term * (p - j + 1) / j * ratio
            acc += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(acc)):
                break
        out[near] = acc
    return out


def majorizer_coeffs_pge2(abs_r, tau, p):
    """Coefficients ``(eta, psi, nu)`` of ``eta*x**2 + psi*x + nu >= x**p`` on ``[0, tau]``.

    The quadratic touches ``x**p`` with equal slope at ``x = abs_r`` and meets
    it again at ``x = tau``.  Where ``abs_r`` is within ``1e-12 * tau`` of
    ``tau`` the 0/0 curvature is replaced by its limit ``p(p-1) x**(p-2) / 2``;
    ``tau == 0`` yields all-zero coefficients.
    """
    p = check_p(p)
    if p < 2:
        raise ValueError(f"the quadratic majorizer needs p >= 2, got {p}")
    r = np.asarray(abs_r, dtype=float)
    t = np.broadcast_to(np.asarray(tau, dtype=float), r.shape)
    if np.any(r < 0) or np.any(r > t * (1 + 1e-12)):
        raise ValueError("majorizer expansion point must satisfy 0 <= |r| <= tau")
    zero = t == 0
    ts = np.where(zero, 1.0, t)
    u = np.minimum(r / ts, 1.0)
    singular = 1.0 - u <= TAU_SINGULAR_RTOL
    eta_hat = np.where(singular, 0.5 * p * (p - 1) * u ** (p - 2), eta_unit(np.where(singular, 0.0, u), p))
    if p == 2:
        eta_hat = np.ones_like(u)
    eta = np.where(zero, 0.0, ts ** (p - 2) * eta_hat)
    psi = np.where(zero, 0.0, ts ** (p - 1) * (p * u ** (p - 1) - 2.0 * eta_hat * u))
    nu = np.where(zero, 0.0, ts**p * (eta_hat * u**2 - (p - 1) * u**p))
    if eta.ndim == 0:
        return float(eta), float(psi), float(nu)
    return eta, psi, nu


def majorizer_value(x, abs_r, tau, p):
    """Evaluate the ``p >= 2`` quadratic majorizer built at ``abs_r`` at magnitudes ``x``."""
    eta, psi, nu = majorizer_coeffs_pge2(abs_r, tau, p)
    x = np.asarray(x, dtype=float)
    return eta * x**2 + psi * x + nu


def smooth_g(h, eps, p, abs_r):
    """Epsilon-smoothed approximation ``g_h`` of ``|r|**p``.

    Inside ``|r| <= eps`` each family is a quadratic cap; outside it follows
    the power (h=1), log (h=2) or exponential (h=3) shape, shifted so the two
    branches join continuously at ``eps``.
    """
    h = check_smooth_kind(h, p)
    eps = check_positive(eps, "eps")
    r = np.abs(np.asarray(abs_r, dtype=float))
    inside = r <= eps
    ro = np.where(inside, eps, r)
    if h == 1:
        g_in = 0.5 * p * eps ** (p - 2) * r**2
        g_out = ro**p - (1.0 - 0.5 * p) * eps**p
    elif h == 2:
        lnp = math.log((p + 1.0) / p)
        g_in = r**2 / (2.0 * eps * (p + eps) * lnp)
        g_out = (np.log((p + ro) / p) - math.log((p + eps) / p) + eps / (2.0 * (p + eps))) / lnp
    else:
        g_in = math.exp(-eps / p) / (2.0 * p * eps) * r**2
        g_out = -np.exp(-ro / p) + (1.0 + eps / (2.0 * p)) * math.exp(-eps / p)
    out = np.where(inside, g_in, g_out)
    return float(out) if out.ndim == 0 else out


def gamma_coeff(h, eps, p, abs_r):
    """Curvature ``gamma`` of the quadratic majorizer ``gamma*|r|**2 + mu`` of ``g_h``."""
    h = check_smooth_kind(h, p)
    eps = check_positive(eps, "eps")
    r = np.abs(np.asarray(abs_r, dtype=float))
    ro = np.maximum(r, eps)
    if h == 1:
        out = 0.5 * p * ro ** (p - 2)
    elif h == 2:
        out = 0.5 / (math.log((p + 1.0) / p) * ro * (ro + p))
    else:
        out = np.exp(-ro / p) / (2.0 * p * ro)
    return float(out) if out.ndim == 0 else out


def mu_coeff(h, eps, p, abs_r):
    """Offset ``mu = g_h(|r|) - gamma |r|**2`` making the quadratic touch ``g_h``."""
    r = np.abs(np.asarray(abs_r, dtype=float))
    return smooth_g(h, eps, p, r) - gamma_coeff(h, eps, p, r) * r**2


def gradient_coeffs(abs_r, p, eps_guard=GRADIENT_GUARD):
    """Quadratic ``nu_bar*|r|**2 + sigma`` sharing value and slope with ``|r|**p`` at ``abs_r``.

    ``nu_bar = (p/2) max(|r|, eps_guard)**(p-2)`` and ``sigma = (1 - p/2) |r|**p``.
    """
    p = check_p(p)
    r = np.abs(np.asarray(abs_r, dtype=float))
    nu_bar = 0.5 * p * np.maximum(r, eps_guard) ** (p - 2)
    sigma = (1.0 - 0.5 * p) * r**p
    if nu_bar.ndim == 0:
        return float(nu_bar), float(sigma)
    return nu_bar, sigma


def smooth_objective(X, w=None, p=0.5, h=1, eps=DEFAULT_EPSILON):
    """``sum g_h(|w_k r_{m,l}(k)|)`` over the sidelobe region."""
    X = as_waveform(X)
    w = as_weights(w, X.N)
    a = np.abs(correlation_array(X.x) * w.w)[sidelobe_mask(X.M, X.N)]
    return float(np.sum(smooth_g(h, eps, p, a)))
