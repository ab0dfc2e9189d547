"""Analytic benchmark fields: quadratics and Gaussian-perturbed quadratics.

Every field carries closed-form value, gradient, and Hessian callables so
manufactured problems and discretization-error studies never rely on the
finite differences they are meant to test.  All fields here keep their
Hessians strictly inside the k=2 cone on their boxes; the Gaussian bumps
are sized so the spectral perturbation amp/width^2 stays well below the
smallest eigenvalue of the quadratic part.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .grid import Box
from .symmetric import OperatorKind


@dataclass(frozen=True)
class SmoothField:
    """A smooth function with analytic derivatives.

    ``value(*coords)`` maps meshgrid coordinate arrays to values;
    ``gradient`` returns a tuple of d arrays; ``hessian`` returns component
    arrays ordered like the derivative kernels, (uxx, uyy, uxy) in 2-d and
    (uxx, uyy, uzz, uxy, uxz, uyz) in 3-d.
    """

    name: str
    dim: int
    value: Callable
    gradient: Callable
    hessian: Callable


def _hessian_order(dim: int):
    if dim == 2:
        return [(0, 0), (1, 1), (0, 1)]
    return [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]


def quadratic_field(name: str, matrix, linear=None, dim: int | None = None) -> SmoothField:
    """u(x) = x^T A x / 2 + c . x with A symmetric."""
    a = np.asarray(matrix, dtype=np.float64)
    d = a.shape[0] if dim is None else dim
    if a.shape != (d, d) or not np.allclose(a, a.T, atol=1e-14):
        raise DomainError("quadratic part must be a symmetric d x d matrix")
    c = np.zeros(d) if linear is None else np.asarray(linear, dtype=np.float64)

    def value(*coords):
        out = np.zeros_like(coords[0])
        for i in range(d):
            out += c[i] * coords[i]
            for j in range(d):
                out += 0.5 * a[i, j] * coords[i] * coords[j]
        return out

    def gradient(*coords):
        return tuple(
            c[i] + sum(a[i, j] * coords[j] for j in range(d)) for i in range(d)
        )

    def hessian(*coords):
        ones = np.ones_like(coords[0])
        return tuple(a[i, j] * ones for i, j in _hessian_order(d))

    return SmoothField(name=name, dim=d, value=value, gradient=gradient, hessian=hessian)


def gaussian_bump_field(
    name: str,
    matrix,
    amp: float,
    width: float,
    center,
    linear=None,
) -> SmoothField:
    """Quadratic base plus amp * exp(-|x - center|^2 / (2 width^2))."""
    base = quadratic_field(name, matrix, linear=linear)
    d = base.dim
    ctr = np.asarray(center, dtype=np.float64)
    if ctr.shape != (d,):
        raise DomainError("center dimension mismatch")
    if width <= 0:
        raise DomainError("width must be positive")
    s2 = float(width) ** 2

    def bump(*coords):
        r2 = sum((coords[i] - ctr[i]) ** 2 for i in range(d))
        return amp * np.exp(-r2 / (2.0 * s2))

    def value(*coords):
        return base.value(*coords) + bump(*coords)

    def gradient(*coords):
        g = bump(*coords)
        bg = base.gradient(*coords)
        return tuple(bg[i] - g * (coords[i] - ctr[i]) / s2 for i in range(d))

    def hessian(*coords):
        g = bump(*coords)
        bh = base.hessian(*coords)
        out = []
        for k, (i, j) in enumerate(_hessian_order(d)):
            xi = coords[i] - ctr[i]
            xj = coords[j] - ctr[j]
            term = g * (xi * xj / (s2 * s2) - (1.0 / s2 if i == j else 0.0))
            out.append(bh[k] + term)
        return tuple(out)

    return SmoothField(name=name, dim=d, value=value, gradient=gradient, hessian=hessian)


_UNIT2 = Box(lo=(-1.0, -1.0), hi=(1.0, 1.0))
_UNIT3 = Box(lo=(-1.0, -1.0, -1.0), hi=(1.0, 1.0, 1.0))


def _build_preset(name: str) -> tuple[SmoothField, Box]:
    if name == "quadratic2d":
        return quadratic_field(name, [[1.0, 0.2], [0.2, 0.8]], linear=[0.1, -0.05]), _UNIT2
    if name == "quadratic3d":
        a = [[1.0, 0.1, 0.0], [0.1, 0.9, 0.15], [0.0, 0.15, 1.2]]
        return quadratic_field(name, a, linear=[0.0, 0.05, -0.1]), _UNIT3
    if name == "aniso3d":
        return quadratic_field(name, np.diag([2.0, 0.7, 0.25])), _UNIT3
    if name == "bump2d":
        field = gaussian_bump_field(
            name,
            [[1.1, 0.15], [0.15, 0.9]],
            amp=0.02,
            width=0.25,
            center=(0.1, -0.05),
        )
        return field, _UNIT2
    if name == "bump3d":
        a = [[1.2, 0.1, 0.0], [0.1, 1.0, 0.1], [0.0, 0.1, 0.8]]
        field = gaussian_bump_field(name, a, amp=0.02, width=0.3, center=(0.0, 0.1, 0.0))
        return field, _UNIT3
    if name == "saddle2d":
        # deliberately outside the cone: negative laplacian everywhere
        return quadratic_field(name, [[1.0, 0.0], [0.0, -1.5]]), _UNIT2
    raise DomainError(f"unknown preset {name!r}")


PRESET_NAMES = ("quadratic2d", "quadratic3d", "aniso3d", "bump2d", "bump3d", "saddle2d")
CONE_PRESET_NAMES = PRESET_NAMES[:-1]


def preset(name: str) -> tuple[SmoothField, Box]:
    return _build_preset(name)


# Doubling study family: convex-plus-bump fields on a wide planar box.
# Bump centers range from inside the unit ball to the annulus between the
# radius-1 and radius-2 balls so the two sup-Laplacians separate.
_DOUBLING_BOX = Box(lo=(-4.0, -4.0), hi=(4.0, 4.0))
_DOUBLING_PARAMS = [
    # a11, a22, a12, amp, width, cx, cy
    (2.5, 2.0, 0.10, 0.30, 0.55, 1.5, 0.0),
    (2.2, 1.8, -0.15, 0.25, 0.60, 0.0, 0.0),
    (1.8, 1.5, 0.00, 0.20, 0.50, 0.8, 0.8),
    (2.0, 2.0, 0.20, 0.00, 0.50, 0.0, 0.0),
    (1.5, 1.1, 0.05, 0.15, 0.45, -1.2, 0.9),
    (2.8, 1.6, -0.10, 0.30, 0.65, 2.2, -1.0),
    (1.2, 1.0, 0.08, 0.10, 0.40, 0.5, -0.5),
    (2.0, 1.4, 0.12, 0.22, 0.55, -1.8, -1.8),
    (2.4, 1.9, 0.00, 0.28, 0.60, 1.0, 1.2),
    (1.6, 1.3, -0.05, 0.12, 0.45, 0.0, 1.5),
    (2.1, 1.7, 0.15, 0.18, 0.50, -0.7, 0.3),
    (1.9, 2.3, -0.12, 0.26, 0.58, 1.4, -0.6),
]


def doubling_family() -> list[tuple[str, SmoothField, OperatorKind, Box]]:
    """Twelve planar fields for the doubling-ratio study, 8 quotient + 4 sigma2."""
    out = []
    for k, (a11, a22, a12, amp, width, cx, cy) in enumerate(_DOUBLING_PARAMS):
        name = f"doubling{k:02d}"
        matrix = [[a11, a12], [a12, a22]]
        if amp == 0.0:
            field = quadratic_field(name, matrix)
        else:
            field = gaussian_bump_field(name, matrix, amp=amp, width=width, center=(cx, cy))
        kind = OperatorKind.QUOTIENT if k < 8 else OperatorKind.SIGMA2
        out.append((name, field, kind, _DOUBLING_BOX))
    return out
