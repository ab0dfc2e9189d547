"""NumPy implementations of the batch kernels.

Function-for-function mirror of the compiled extension in ``_speedups.pyx``;
the package picks one of the two at import time (see ``__init__``).  All
inputs are converted to contiguous float64.
"""

import numpy as np

IMPLEMENTATION = "python"


def _as2d(lam):
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    if lam.ndim != 2:
        raise ValueError("expected a (samples, n) array")
    return lam


def sigma12(lam):
    """First and second elementary symmetric functions, batched row-wise."""
    lam = _as2d(lam)
    s1 = lam.sum(axis=1)
    s2 = 0.5 * (s1 * s1 - (lam * lam).sum(axis=1))
    return s1, s2


def quotient_value_grad(lam):
    """Value and eigenvalue gradient of sigma2/sigma1, batched.

    Uses the all-positive-terms gradient form
    f_i = ((|lam|^2 - lam_i^2) + (sigma1 - lam_i)^2) / (2 sigma1^2),
    which stays accurate near the cone boundary.  Rows must have sigma1 > 0;
    the caller is responsible for that guard.
    """
    lam = _as2d(lam)
    s1 = lam.sum(axis=1)
    sq = lam * lam
    sqsum = sq.sum(axis=1)
    s2 = 0.5 * (s1 * s1 - sqsum)
    s1c = s1[:, None]
    rest = s1c - lam
    grad = 0.5 * ((sqsum[:, None] - sq) + rest * rest) / (s1c * s1c)
    return s2 / s1, grad


def sigma2_value_grad(lam):
    """Value and eigenvalue gradient of sigma2, batched."""
    lam = _as2d(lam)
    s1 = lam.sum(axis=1)
    s2 = 0.5 * (s1 * s1 - (lam * lam).sum(axis=1))
    return s2, s1[:, None] - lam


def eigvals_sym2(a11, a12, a22):
    """Eigenvalues of symmetric 2x2 matrices, descending, batched."""
    a11 = np.ascontiguousarray(a11, dtype=np.float64)
    a12 = np.ascontiguousarray(a12, dtype=np.float64)
    a22 = np.ascontiguousarray(a22, dtype=np.float64)
    mean = 0.5 * (a11 + a22)
    half = 0.5 * (a11 - a22)
    disc = np.sqrt(half * half + a12 * a12)
    return np.stack([mean + disc, mean - disc], axis=-1)


def eigvals_sym3(a11, a12, a13, a22, a23, a33):
    """Eigenvalues of symmetric 3x3 matrices, descending, batched.

    Trigonometric closed form; the acos argument is clamped so roundoff
    near coincident eigenvalues cannot produce NaN.
    """
    a11 = np.ascontiguousarray(a11, dtype=np.float64)
    a12 = np.ascontiguousarray(a12, dtype=np.float64)
    a13 = np.ascontiguousarray(a13, dtype=np.float64)
    a22 = np.ascontiguousarray(a22, dtype=np.float64)
    a23 = np.ascontiguousarray(a23, dtype=np.float64)
    a33 = np.ascontiguousarray(a33, dtype=np.float64)

    q = (a11 + a22 + a33) / 3.0
    d1 = a11 - q
    d2 = a22 - q
    d3 = a33 - q
    p1 = a12 * a12 + a13 * a13 + a23 * a23
    p2 = d1 * d1 + d2 * d2 + d3 * d3 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    # scalar matrices: p == 0, every eigenvalue equals q
    safe = p > 0.0
    pinv = np.where(safe, 1.0 / np.where(safe, p, 1.0), 0.0)
    b11 = d1 * pinv
    b22 = d2 * pinv
    b33 = d3 * pinv
    b12 = a12 * pinv
    b13 = a13 * pinv
    b23 = a23 * pinv
    detb = (
        b11 * (b22 * b33 - b23 * b23)
        - b12 * (b12 * b33 - b23 * b13)
        + b13 * (b12 * b23 - b22 * b13)
    )
    r = np.clip(0.5 * detb, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    e1 = q + 2.0 * p * np.cos(phi)
    e3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    return np.stack([e1, e2, e3], axis=-1)


def hessian_fields_2d(u, h):
    """Central second differences of a 2-d grid array at interior points.

    Returns (uxx, uyy, uxy), each shaped (n0-2, n1-2).
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    hh = h * h
    c = u[1:-1, 1:-1]
    uxx = (u[2:, 1:-1] - 2.0 * c + u[:-2, 1:-1]) / hh
    uyy = (u[1:-1, 2:] - 2.0 * c + u[1:-1, :-2]) / hh
    uxy = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4.0 * hh)
    return uxx, uyy, uxy


def hessian_fields_3d(u, h):
    """Central second differences of a 3-d grid array at interior points.

    Returns (uxx, uyy, uzz, uxy, uxz, uyz), each shaped (n0-2, n1-2, n2-2).
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    hh = h * h
    c = u[1:-1, 1:-1, 1:-1]
    uxx = (u[2:, 1:-1, 1:-1] - 2.0 * c + u[:-2, 1:-1, 1:-1]) / hh
    uyy = (u[1:-1, 2:, 1:-1] - 2.0 * c + u[1:-1, :-2, 1:-1]) / hh
    uzz = (u[1:-1, 1:-1, 2:] - 2.0 * c + u[1:-1, 1:-1, :-2]) / hh
    uxy = (
        u[2:, 2:, 1:-1] - u[2:, :-2, 1:-1] - u[:-2, 2:, 1:-1] + u[:-2, :-2, 1:-1]
    ) / (4.0 * hh)
    uxz = (
        u[2:, 1:-1, 2:] - u[2:, 1:-1, :-2] - u[:-2, 1:-1, 2:] + u[:-2, 1:-1, :-2]
    ) / (4.0 * hh)
    uyz = (
        u[1:-1, 2:, 2:] - u[1:-1, 2:, :-2] - u[1:-1, :-2, 2:] + u[1:-1, :-2, :-2]
    ) / (4.0 * hh)
    return uxx, uyy, uzz, uxy, uxz, uyz
