"""FFT-based aperiodic auto- and cross-correlations."""

import numpy as np

from ._validation import check_complex_vector
from .waveform import CorrelationSet, as_waveform


def fft_length(N):
    """Smallest power of two holding a linear correlation of two length-N sequences."""
    n = 1
    while n < 2 * N - 1:
        n <<= 1
    return n


def _lag_index(N, nfft):
    # r(k) sits at circular index -k of ifft(X_m * conj(X_l))
    k = np.arange(-N + 1, N)
    return np.mod(-k, nfft)


def cross_correlation(x_m, x_l):
    """Aperiodic cross-correlation ``r(k) = sum_n x_m[n] * conj(x_l[n + k])``.

    Returns the ``2N-1`` lags ``k = -N+1 .. N-1`` in order.  Negative lags
    satisfy ``r_{m,l}(-k) = conj(r_{l,m}(k))``.
    """
    x_m = check_complex_vector(x_m, "x_m")
    x_l = check_complex_vector(x_l, "x_l")
    if x_m.shape != x_l.shape:
        raise ValueError(f"length mismatch: {x_m.size} vs {x_l.size}")
    N = x_m.size
    if N < 2:
        raise ValueError(f"sequences need length N >= 2, got {N}")
    nfft = fft_length(N)
    spec = np.fft.fft(x_m, nfft) * np.conj(np.fft.fft(x_l, nfft))
    return np.fft.ifft(spec)[_lag_index(N, nfft)]


def correlation_array(x):
    """All pairwise correlations of the rows of a complex (M, N) matrix.

    Returns a complex array of shape (M, M, 2N-1).
    """
    x = np.asarray(x, dtype=complex)
    M, N = x.shape
    nfft = fft_length(N)
    F = np.fft.fft(x, nfft, axis=1)
    P = np.fft.ifft(F[:, None, :] * np.conj(F[None, :, :]), axis=2)
    return P[:, :, _lag_index(N, nfft)]


def row_correlations(x, t):
    """Correlations ``r_{t,l}`` of row ``t`` against every row, shape (M, 2N-1)."""
    x = np.asarray(x, dtype=complex)
    M, N = x.shape
    nfft = fft_length(N)
    F = np.fft.fft(x, nfft, axis=1)
    P = np.fft.ifft(F[t][None, :] * np.conj(F), axis=1)
    return P[:, _lag_index(N, nfft)]


def correlation_set(X):
    """Every auto- and cross-correlation of a waveform set as a CorrelationSet."""
    X = as_waveform(X)
    return CorrelationSet(correlation_array(X.x))
