"""Objective values, sidelobe metrics and their theoretical lower bounds.

Every function here is pure.  Decibel values use ``10 * log10`` throughout.
"""

import math

import numpy as np

from ._validation import check_p, check_positive
from .correlation import correlation_array
from .waveform import as_waveform, as_weights, sidelobe_mask

SPARSITY_ATOL = 1e-9


def _weighted_sidelobes(X, w):
    X = as_waveform(X)
    w = as_weights(w, X.N)
    r = correlation_array(X.x)
    return X, np.abs(r * w.w[None, None, :]), sidelobe_mask(X.M, X.N)


def lp_objective(X, w=None, p=2.0, include_mainlobes=False):
    """Weighted lp objective ``sum |w_k r_{m,l}(k)|**p`` over all pairs and lags.

    The auto-correlation zero lags (mainlobes) are left out unless
    ``include_mainlobes`` is set; cross-correlation zero lags always count.
    """
    p = check_p(p)
    X, a, mask = _weighted_sidelobes(X, w)
    if not include_mainlobes:
        a = a[mask]
    return float(np.sum(a**p))


def psl(X, w=None):
    """Peak weighted sidelobe magnitude over all auto and cross lags."""
    X, a, mask = _weighted_sidelobes(X, w)
    return float(np.max(a[mask]))


def isl(X, w=None):
    X, a, mask = _weighted_sidelobes(X, w)
    return float(np.sum(a[mask] ** 2))


def islr_db(X, w=None):
    """``10 log10(ISL / N**2)``; returns ``-inf`` when every sidelobe is zero."""
    X = as_waveform(X)
    total = isl(X, w)
    if total == 0.0:
        return -math.inf
    return 10.0 * math.log10(total / X.N**2)


def sparsity(X, threshold=1.0):
    """Fraction of all ``M**2 (2N-1)`` correlation lags with magnitude below ``threshold``.

    Mainlobes stay in the denominator, so a unimodular set can never reach 1.
    Magnitudes within ``SPARSITY_ATOL`` below the threshold count as on it:
    the end lags have magnitude exactly 1, which FFT rounding would otherwise
    scatter to either side of the default threshold.
    """
    threshold = check_positive(threshold, "threshold")
    X = as_waveform(X)
    a = np.abs(correlation_array(X.x))
    return float(np.count_nonzero(a < threshold - SPARSITY_ATOL)) / a.size


def welch_psl_bound(M, N):
    """Welch lower bound on PSL, normalized by N: ``sqrt((M-1)/(2MN-M-1))``."""
    if M < 1 or N < 2:
        raise ValueError(f"need M >= 1 and N >= 2, got M={M}, N={N}")
    den = 2 * M * N - M - 1
    if den <= 0:
        raise ValueError(f"Welch bound undefined for M={M}, N={N}")
    return math.sqrt((M - 1) / den)


def islr_lower_bound_db(M):
    """ISLR lower bound ``10 log10(M (M-1))`` of unimodular sets with M >= 2 sequences."""
    if M < 2:
        raise ValueError(f"ISLR lower bound needs M >= 2, got {M}")
    return 10.0 * math.log10(M * (M - 1))


def db(value):
    return -math.inf if value <= 0 else 10.0 * math.log10(value)


def metrics_report(X, w=None, threshold=1.0):
    """All reported metrics of a set, in absolute and N-normalized units."""
    X = as_waveform(X)
    w = as_weights(w, X.N)
    peak = psl(X, w)
    report = {
        "M": X.M,
        "N": X.N,
        "psl": peak,
        "psl_normalized": peak / X.N,
        "psl_db": db(peak),
        "psl_normalized_db": db(peak / X.N),
        "isl": isl(X, w),
        "islr_db": islr_db(X, w),
        "sparsity": sparsity(X, threshold),
        "sparsity_threshold": float(threshold),
        "welch_psl_bound_normalized": welch_psl_bound(X.M, X.N),
        "welch_psl_bound": X.N * welch_psl_bound(X.M, X.N),
        "welch_psl_bound_db": db(X.N * welch_psl_bound(X.M, X.N)),
        "islr_lower_bound_db": islr_lower_bound_db(X.M) if X.M >= 2 else None,
    }
    return report
