"""Input validation helpers shared by the public functions and the estimator."""

import math
import numbers

import numpy as np

PI = math.pi
TWO_PI = 2.0 * math.pi


def wrap_phase(phi):
    """Wrap radians into ``(-pi, pi]``."""
    phi = np.asarray(phi, dtype=float)
    out = phi - TWO_PI * np.ceil((phi - PI) / TWO_PI)
    # rounding can leave exactly -pi or a hair above pi
    out = np.where(out <= -PI, out + TWO_PI, out)
    out = np.where(out > PI, out - TWO_PI, out)
    return out


def check_phase_matrix(phases, min_rows=1, min_cols=2):
    arr = np.array(phases, dtype=float, copy=True)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected an (M, N) phase matrix, got {arr.ndim} dimensions")
    M, N = arr.shape
    if M < min_rows or N < min_cols:
        raise ValueError(f"need M >= {min_rows} and N >= {min_cols}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        m, n = np.argwhere(~np.isfinite(arr))[0]
        raise ValueError(f"non-finite phase at row {m}, column {n}")
    return arr


def check_complex_vector(x, name):
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    return x.astype(complex, copy=False)


def check_p(p, low_only=False):
    if not isinstance(p, numbers.Real) or not np.isfinite(p) or p <= 0:
        raise ValueError(f"p must be a finite real > 0, got {p!r}")
    return float(p)


def check_smooth_kind(h, p):
    if h not in (1, 2, 3):
        raise ValueError(f"smooth approximation kind must be 1, 2 or 3, got {h!r}")
    check_p(p)
    if h == 1 and p > 1:
        raise ValueError(f"power smooth approximation (h=1) requires 0 < p <= 1, got {p}")
    return int(h)


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not value > 0 or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real > 0, got {value!r}")
    return float(value)
