"""Uniform tensor grids and finite-difference fields in 2 and 3 dimensions.

All derivative fields live on interior nodes and use the standard central
second-order stencils; the mixed derivatives use the four-corner cross
stencil with weight 1/(4 h^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError

# uniform spacing means uniform: per-axis steps may differ only at rounding
_SPACING_RTOL = 1e-12
_MIN_POINTS = 5


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, the computational domain."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(x) for x in np.atleast_1d(np.asarray(self.lo, dtype=np.float64)))
        hi = tuple(float(x) for x in np.atleast_1d(np.asarray(self.hi, dtype=np.float64)))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise DomainError("lo and hi must have the same dimension")
        if len(lo) not in (2, 3):
            raise DomainError("only dimensions 2 and 3 are supported")
        if not all(a < b for a, b in zip(lo, hi)):
            raise DomainError("need lo < hi on every axis")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def extents(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))


def _axes(box: Box, shape) -> tuple[np.ndarray, ...]:
    return tuple(
        np.linspace(a, b, m) for a, b, m in zip(box.lo, box.hi, shape)
    )


class GridFunction:
    """Nodal values of a scalar function on a uniform grid over a Box.

    The grid includes boundary nodes.  Spacing must agree across axes (the
    derivative kernels assume a single h), which constrains shape given the
    box extents.
    """

    __slots__ = ("box", "values", "h")

    def __init__(self, box: Box, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim != box.dim:
            raise DomainError(f"values must be {box.dim}-d for this box")
        if any(m < _MIN_POINTS for m in values.shape):
            raise DomainError(f"need at least {_MIN_POINTS} points per axis")
        if not np.all(np.isfinite(values)):
            raise DomainError("grid values must be finite")
        steps = [ext / (m - 1) for ext, m in zip(box.extents(), values.shape)]
        h = steps[0]
        if max(abs(s - h) for s in steps) > _SPACING_RTOL * h:
            raise DomainError(
                f"anisotropic spacing {steps}: shape must make all axes share h"
            )
        self.box = box
        self.values = values
        self.h = h

    @classmethod
    def from_callable(cls, box: Box, shape, fn) -> "GridFunction":
        mesh = np.meshgrid(*_axes(box, shape), indexing="ij")
        return cls(box, fn(*mesh))

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def axes(self) -> tuple[np.ndarray, ...]:
        return _axes(self.box, self.shape)

    def mesh(self, interior: bool = False):
        axes = self.axes()
        if interior:
            axes = tuple(a[1:-1] for a in axes)
        return np.meshgrid(*axes, indexing="ij")

    def interior(self) -> np.ndarray:
        sl = tuple(slice(1, -1) for _ in range(self.dim))
        return self.values[sl]

    def gradient_interior(self) -> tuple[np.ndarray, ...]:
        """Central first differences on interior nodes."""
        u, h = self.values, self.h
        out = []
        for ax in range(self.dim):
            hi = [slice(1, -1)] * self.dim
            lo = [slice(1, -1)] * self.dim
            hi[ax] = slice(2, None)
            lo[ax] = slice(None, -2)
            out.append((u[tuple(hi)] - u[tuple(lo)]) / (2.0 * h))
        return tuple(out)

    def hessian_interior(self) -> tuple[np.ndarray, ...]:
        """Second-derivative fields on interior nodes.

        Order matches the kernels: (uxx, uyy, uxy) in 2-d and
        (uxx, uyy, uzz, uxy, uxz, uyz) in 3-d.
        """
        if self.dim == 2:
            return _kernels.hessian_fields_2d(self.values, self.h)
        return _kernels.hessian_fields_3d(self.values, self.h)

    def laplacian_interior(self) -> np.ndarray:
        comps = self.hessian_interior()
        return sum(comps[: self.dim])

    def sigma_interior(self) -> tuple[np.ndarray, np.ndarray]:
        """(sigma1, sigma2) of the interior Hessian, eigenvalue free."""
        return hessian_sigmas(self.dim, self.hessian_interior())

    def eigenvalues_interior(self) -> np.ndarray:
        """Interior Hessian eigenvalues, descending along the last axis."""
        c = self.hessian_interior()
        if self.dim == 2:
            return _kernels.eigvals_sym2(c[0], c[2], c[1])
        return _kernels.eigvals_sym3(c[0], c[3], c[4], c[1], c[5], c[2])

    def hessian_at(self, idx) -> np.ndarray:
        """Full symmetric Hessian matrix at one interior multi-index.

        ``idx`` counts interior nodes, i.e. (0, ...) is the first node off
        the boundary.
        """
        comps = self.hessian_interior()
        vals = [float(c[tuple(idx)]) for c in comps]
        d = self.dim
        m = np.zeros((d, d))
        for ax in range(d):
            m[ax, ax] = vals[ax]
        if d == 2:
            m[0, 1] = m[1, 0] = vals[2]
        else:
            m[0, 1] = m[1, 0] = vals[3]
            m[0, 2] = m[2, 0] = vals[4]
            m[1, 2] = m[2, 1] = vals[5]
        return m


def hessian_sigmas(dim: int, comps) -> tuple[np.ndarray, np.ndarray]:
    """sigma1 and sigma2 of a symmetric matrix field given its components."""
    if dim == 2:
        uxx, uyy, uxy = comps
        return uxx + uyy, uxx * uyy - uxy * uxy
    uxx, uyy, uzz, uxy, uxz, uyz = comps
    s1 = uxx + uyy + uzz
    s2 = uxx * uyy + uxx * uzz + uyy * uzz - uxy * uxy - uxz * uxz - uyz * uyz
    return s1, s2
