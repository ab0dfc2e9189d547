"""Damped Newton solver for sigma2-type equations on uniform grids.

Solves F(D^2 u) = psi(x, u) with Dirichlet data, where F is either the
ratio sigma2/sigma1 or sigma2 itself.  The linearization sum F^{ij} D_ij v
- psi_u v is assembled sparsely from the current Hessian field; each step
is backtracked until the iterate both stays inside the k=2 cone and
decreases the residual.  Non-convergence is reported, not raised.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.fft import dstn, idstn
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import LinearOperator, bicgstab, splu

from .errors import DomainError, LinearSolveError
from .grid import Box, GridFunction, hessian_sigmas
from .presets import SmoothField, preset
from .symmetric import OperatorKind


@dataclass(frozen=True)
class ProblemSpec:
    """Dirichlet problem for one of the two operators.

    ``psi(coords, u)`` and ``psi_u(coords, u)`` take the tuple of interior
    meshgrid coordinate arrays plus the interior solution values;
    ``boundary(*coords)`` evaluates the Dirichlet data.
    """

    kind: OperatorKind
    box: Box
    shape: tuple[int, ...]
    psi: Callable
    psi_u: Callable
    boundary: Callable

    def __post_init__(self):
        if len(self.shape) != self.box.dim:
            raise DomainError("shape dimension must match the box")
        if any(m < 5 for m in self.shape):
            raise DomainError("need at least 5 grid points per axis")


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 30
    residual_tol: float = 1e-10
    min_step: float = 1.0 / 1024.0
    armijo: float = 0.25
    linear_rtol: float = 1e-10
    linear_maxiter: int = 400


@dataclass(frozen=True)
class SolveReport:
    converged: bool
    iterations: int
    residual_norm: float
    message: str
    history: tuple[float, ...] = field(default_factory=tuple)


def _interior_slices(dim):
    return tuple(slice(1, -1) for _ in range(dim))


def _operator_value(kind: OperatorKind, s1, s2):
    if kind is OperatorKind.QUOTIENT:
        return s2 / s1
    return s2


def _operator_coeffs(kind: OperatorKind, comps, s1, s2):
    """Matrix derivative components F^{ij}, same ordering as ``comps``."""
    dim = 2 if len(comps) == 3 else 3
    if dim == 2:
        uxx, uyy, uxy = comps
        d11, d22, d12 = uyy, uxx, -uxy
        diag = (d11, d22)
        off = (d12,)
    else:
        uxx, uyy, uzz, uxy, uxz, uyz = comps
        diag = (uyy + uzz, uxx + uzz, uxx + uyy)
        off = (-uxy, -uxz, -uyz)
    if kind is OperatorKind.SIGMA2:
        return diag + off
    corr = s2 / (s1 * s1)
    diag = tuple(d / s1 - corr for d in diag)
    off = tuple(o / s1 for o in off)
    return diag + off


class _Discretization:
    """Cached mesh data for one ProblemSpec."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        axes = tuple(
            np.linspace(a, b, m) for a, b, m in zip(spec.box.lo, spec.box.hi, spec.shape)
        )
        steps = [ax[1] - ax[0] for ax in axes]
        if max(steps) - min(steps) > 1e-12 * steps[0]:
            raise DomainError("shape and box give unequal spacings across axes")
        self.h = steps[0]
        self.mesh = np.meshgrid(*axes, indexing="ij")
        self.interior_mesh = tuple(m[_interior_slices(spec.box.dim)] for m in self.mesh)
        self.dim = spec.box.dim
        self.interior_shape = tuple(m - 2 for m in spec.shape)

    def boundary_frame(self) -> np.ndarray:
        vals = np.asarray(self.spec.boundary(*self.mesh), dtype=np.float64)
        return vals

    def hessian(self, u: np.ndarray):
        gf = GridFunction(self.spec.box, u)
        return gf.hessian_interior()

    def state(self, u: np.ndarray):
        """(residual, sigma1, sigma2, comps, admissible) at interior nodes."""
        comps = self.hessian(u)
        s1, s2 = hessian_sigmas(self.dim, comps)
        ui = u[_interior_slices(self.dim)]
        admissible = bool(np.all(s1 > 0.0) and np.all(s2 > 0.0))
        if not admissible:
            return None, s1, s2, comps, False
        psi = np.asarray(self.spec.psi(self.interior_mesh, ui), dtype=np.float64)
        if not np.all(psi > 0.0):
            return None, s1, s2, comps, False
        r = _operator_value(self.spec.kind, s1, s2) - psi
        return r, s1, s2, comps, True


def _flat_index(interior_shape):
    if len(interior_shape) == 2:
        mi, mj = interior_shape
        idx = np.arange(mi * mj).reshape(mi, mj)
    else:
        mi, mj, mk = interior_shape
        idx = np.arange(mi * mj * mk).reshape(mi, mj, mk)
    return idx


_OFFSETS_2D = [
    # (di, dj, which coefficient, sign)
    ((1, 0), 0, 1.0),
    ((-1, 0), 0, 1.0),
    ((0, 1), 1, 1.0),
    ((0, -1), 1, 1.0),
    ((1, 1), 2, 0.5),
    ((-1, -1), 2, 0.5),
    ((1, -1), 2, -0.5),
    ((-1, 1), 2, -0.5),
]

_OFFSETS_3D = [
    ((1, 0, 0), 0, 1.0),
    ((-1, 0, 0), 0, 1.0),
    ((0, 1, 0), 1, 1.0),
    ((0, -1, 0), 1, 1.0),
    ((0, 0, 1), 2, 1.0),
    ((0, 0, -1), 2, 1.0),
    ((1, 1, 0), 3, 0.5),
    ((-1, -1, 0), 3, 0.5),
    ((1, -1, 0), 3, -0.5),
    ((-1, 1, 0), 3, -0.5),
    ((1, 0, 1), 4, 0.5),
    ((-1, 0, -1), 4, 0.5),
    ((1, 0, -1), 4, -0.5),
    ((-1, 0, 1), 4, -0.5),
    ((0, 1, 1), 5, 0.5),
    ((0, -1, -1), 5, 0.5),
    ((0, 1, -1), 5, -0.5),
    ((0, -1, 1), 5, -0.5),
]


def _assemble_jacobian(disc: _Discretization, coeffs, psi_u_vals):
    """Sparse linearization over interior unknowns (Dirichlet rows dropped)."""
    ishape = disc.interior_shape
    h2 = disc.h * disc.h
    idx = _flat_index(ishape)
    nuk = idx.size
    dim = disc.dim
    offsets = _OFFSETS_2D if dim == 2 else _OFFSETS_3D

    rows = [idx.ravel()]
    cols = [idx.ravel()]
    center = -2.0 * sum(coeffs[:dim]) / h2 - psi_u_vals
    vals = [np.asarray(center, dtype=np.float64).ravel()]

    grids = np.meshgrid(*[np.arange(m) for m in ishape], indexing="ij")
    for off, ci, w in offsets:
        mask = np.ones(ishape, dtype=bool)
        shifted = []
        for ax, d in enumerate(off):
            g = grids[ax] + d
            mask &= (g >= 0) & (g < ishape[ax])
            shifted.append(g)
        coef = np.broadcast_to(w * coeffs[ci] / h2, ishape)[mask]
        tgt = idx[tuple(s[mask] for s in shifted)]
        rows.append(idx[mask])
        cols.append(tgt)
        vals.append(coef)

    mat = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nuk, nuk),
    )
    return mat.tocsc()


def _sine_preconditioner(disc: _Discretization, coeffs, psi_u_vals) -> LinearOperator:
    """Inverse of the averaged constant-coefficient part of the Jacobian.

    a_bar * Laplacian - c_bar diagonalizes in the discrete sine basis on a
    Dirichlet grid, so one application costs a forward and inverse DST.
    The variable-coefficient and mixed-derivative parts are left to the
    Krylov iteration.
    """
    ishape = disc.interior_shape
    h2 = disc.h * disc.h
    a_bar = float(np.mean(sum(coeffs[: disc.dim]))) / disc.dim
    c_bar = float(np.mean(psi_u_vals))
    denom = np.zeros(ishape)
    for ax, m in enumerate(ishape):
        k = np.arange(1, m + 1)
        lam = -4.0 * np.sin(0.5 * np.pi * k / (m + 1)) ** 2 / h2
        shape = [1] * disc.dim
        shape[ax] = m
        denom = denom + lam.reshape(shape)
    denom = a_bar * denom - c_bar

    def apply(r):
        spectral = dstn(r.reshape(ishape), type=1, norm="ortho")
        return idstn(spectral / denom, type=1, norm="ortho").ravel()

    n = int(np.prod(ishape))
    return LinearOperator((n, n), matvec=apply)


def _linear_solve(mat, rhs, disc: _Discretization, coeffs, psi_u_vals, config: SolverConfig):
    if disc.dim == 2:
        try:
            return splu(mat).solve(rhs)
        except RuntimeError as exc:
            raise LinearSolveError(f"direct factorization failed: {exc}") from exc
    precond = _sine_preconditioner(disc, coeffs, psi_u_vals)
    x, info = bicgstab(
        mat,
        rhs,
        rtol=config.linear_rtol,
        atol=0.0,
        maxiter=config.linear_maxiter,
        M=precond,
    )
    if info != 0:
        raise LinearSolveError(f"iterative linear solve did not converge (info={info})")
    return x


def quadratic_fit_guess(disc: _Discretization) -> np.ndarray:
    """Initial iterate: boundary data plus a fitted admissible quadratic.

    Fits u ~ x^T Q x / 2 + c.x + c0 to the boundary nodes by least squares,
    pushes Q into the cone with an isotropic shift when necessary, and
    fills the interior with the (shifted) quadratic while keeping the exact
    boundary values on the frame.
    """
    spec = disc.spec
    dim = disc.dim
    vals = disc.boundary_frame()
    mask = np.zeros(spec.shape, dtype=bool)
    for ax in range(dim):
        sl = [slice(None)] * dim
        sl[ax] = 0
        mask[tuple(sl)] = True
        sl[ax] = -1
        mask[tuple(sl)] = True
    coords = [m[mask] for m in disc.mesh]
    b = vals[mask]

    cols = [np.ones_like(b)]
    cols += [c for c in coords]
    for i in range(dim):
        for j in range(i, dim):
            cols.append(coords[i] * coords[j] * (0.5 if i == j else 1.0))
    a = np.stack(cols, axis=1)
    sol, _, _, _ = np.linalg.lstsq(a, b, rcond=None)

    q = np.zeros((dim, dim))
    k = 1 + dim
    for i in range(dim):
        for j in range(i, dim):
            q[i, j] = q[j, i] = sol[k]
            k += 1

    # push the quadratic's Hessian inside the cone if the data demands it
    lam = np.linalg.eigvalsh(q)
    scale = 1.0 + float(np.abs(lam).max())
    shift = 0.0
    for _ in range(60):
        lam_s = lam + shift
        s1 = lam_s.sum()
        s2 = 0.5 * (s1 * s1 - (lam_s * lam_s).sum())
        if s1 > 1e-6 * scale and s2 > 1e-6 * scale * scale:
            break
        shift = max(2.0 * shift, 1e-3 * scale)
    else:
        raise LinearSolveError("could not shift fitted quadratic into the cone")

    c0, cvec = sol[0], sol[1 : 1 + dim]
    u0 = np.full(spec.shape, c0)
    for i in range(dim):
        u0 += cvec[i] * disc.mesh[i]
        for j in range(dim):
            qij = q[i, j] + (shift if i == j else 0.0)
            u0 += 0.5 * qij * disc.mesh[i] * disc.mesh[j]
    u0[mask] = b
    return u0


def newton_solve(
    spec: ProblemSpec, config: SolverConfig | None = None, u0: np.ndarray | None = None
) -> tuple[GridFunction, SolveReport]:
    """Damped Newton iteration; returns the iterate and a SolveReport.

    ``iterations`` counts accepted Newton steps, so a start at the solution
    reports zero.  Failure to converge comes back in the report, never as
    an exception; exceptions mark invalid problem data.
    """
    config = config or SolverConfig()
    disc = _Discretization(spec)
    dim = disc.dim
    isl = _interior_slices(dim)

    psi_probe = np.asarray(
        spec.psi(disc.interior_mesh, disc.boundary_frame()[isl]), dtype=np.float64
    )
    if not np.all(np.isfinite(psi_probe)):
        raise DomainError("psi returned non-finite values")
    if np.any(psi_probe <= 0.0):
        raise DomainError("psi must be strictly positive for cone solutions")
    scale = 1.0 + float(np.abs(psi_probe).max())
    tol = config.residual_tol * scale

    u = quadratic_fit_guess(disc) if u0 is None else np.array(u0, dtype=np.float64)
    if u.shape != spec.shape:
        raise DomainError("initial guess shape mismatch")

    r, s1, s2, comps, ok = disc.state(u)
    if not ok:
        return GridFunction(spec.box, u), SolveReport(
            converged=False,
            iterations=0,
            residual_norm=math.inf,
            message="initial iterate leaves the admissible cone",
        )
    rn = float(np.abs(r).max())
    history = [rn]
    iterations = 0
    message = "max_iter exceeded"
    converged = False

    for _ in range(config.max_iter):
        if rn <= tol:
            converged = True
            message = "converged"
            break
        coeffs = _operator_coeffs(spec.kind, comps, s1, s2)
        ui = u[isl]
        psi_u_vals = np.broadcast_to(
            np.asarray(spec.psi_u(disc.interior_mesh, ui), dtype=np.float64),
            disc.interior_shape,
        )
        jac = _assemble_jacobian(disc, coeffs, psi_u_vals)
        try:
            step = _linear_solve(jac, -r.ravel(), disc, coeffs, psi_u_vals, config)
        except LinearSolveError as exc:
            message = str(exc)
            break
        step = step.reshape(disc.interior_shape)

        alpha = 1.0
        accepted = False
        while alpha >= config.min_step:
            u_try = u.copy()
            u_try[isl] = ui + alpha * step
            r_try, s1_t, s2_t, comps_t, ok = disc.state(u_try)
            if ok:
                rn_try = float(np.abs(r_try).max())
                if rn_try <= (1.0 - config.armijo * alpha) * rn:
                    u, r, s1, s2, comps = u_try, r_try, s1_t, s2_t, comps_t
                    rn = rn_try
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            message = "line search stalled inside the cone"
            break
        iterations += 1
        history.append(rn)
    else:
        if rn <= tol:
            converged = True
            message = "converged"

    return GridFunction(spec.box, u), SolveReport(
        converged=converged,
        iterations=iterations,
        residual_norm=rn,
        message=message,
        history=tuple(history),
    )


def manufacture(
    field: SmoothField,
    box: Box,
    shape,
    kind: OperatorKind = OperatorKind.QUOTIENT,
    u_coeff: float = 0.5,
) -> tuple[ProblemSpec, GridFunction]:
    """Manufactured problem whose exact solution is ``field``.

    psi(x, u) = F(D^2 field)(x) + u_coeff * (u - field(x)), so the field
    solves the problem exactly and psi_u = u_coeff (nonnegative keeps the
    solution unique).
    """
    if u_coeff < 0:
        raise DomainError("u_coeff must be nonnegative")
    if field.dim != box.dim:
        raise DomainError("field and box dimensions differ")
    shape = tuple(int(m) for m in shape)

    def psi(coords, u):
        comps = field.hessian(*coords)
        s1, s2 = hessian_sigmas(field.dim, comps)
        base = _operator_value(kind, s1, s2)
        return base + u_coeff * (u - field.value(*coords))

    def psi_u(coords, u):
        return np.full(np.shape(u), float(u_coeff))

    spec = ProblemSpec(
        kind=kind, box=box, shape=shape, psi=psi, psi_u=psi_u, boundary=field.value
    )
    exact = GridFunction.from_callable(box, shape, field.value)
    return spec, exact


def convergence_study(
    field: SmoothField,
    box: Box,
    shapes,
    kind: OperatorKind = OperatorKind.QUOTIENT,
    config: SolverConfig | None = None,
) -> list[dict]:
    """Solve a manufactured problem on a refinement ladder.

    Returns one row per grid with the max-norm error against the exact
    field and the observed order between consecutive grids.
    """
    rows = []
    prev = None
    for shape in shapes:
        spec, exact = manufacture(field, box, shape, kind)
        gf, report = newton_solve(spec, config)
        err = float(np.abs(gf.values - exact.values).max())
        order = math.nan
        if prev is not None and err > 0:
            order = math.log2(prev / err)
        rows.append(
            {
                "shape": shape,
                "h": gf.h,
                "error": err,
                "order": order,
                "iterations": report.iterations,
                "converged": report.converged,
                "residual_norm": report.residual_norm,
            }
        )
        prev = err
    return rows


# ---------------------------------------------------------------------------
# config and result serialization (INI for structured text, CSV for fields)

_CONFIG_FIELDS = {
    "max_iter": int,
    "residual_tol": float,
    "min_step": float,
    "armijo": float,
    "linear_rtol": float,
    "linear_maxiter": int,
}


def load_config(fp) -> SolverConfig:
    """Read a [solver] section; unknown keys are an error."""
    parser = configparser.ConfigParser()
    parser.read_file(fp)
    if not parser.has_section("solver"):
        raise DomainError("config needs a [solver] section")
    cfg = SolverConfig()
    updates = {}
    for key, raw in parser.items("solver"):
        if key not in _CONFIG_FIELDS:
            raise DomainError(f"unknown solver config key: {key}")
        try:
            updates[key] = _CONFIG_FIELDS[key](raw)
        except ValueError as exc:
            raise DomainError(f"bad value for {key}: {raw}") from exc
    return replace(cfg, **updates)


def save_report(report: SolveReport, fp, extra: dict | None = None) -> None:
    parser = configparser.ConfigParser()
    parser["report"] = {
        "converged": str(report.converged).lower(),
        "iterations": str(report.iterations),
        "residual_norm": repr(report.residual_norm),
        "message": report.message,
        "history": " ".join(repr(x) for x in report.history),
    }
    if extra:
        parser["problem"] = {k: str(v) for k, v in extra.items()}
    parser.write(fp)


def save_field_csv(gf: GridFunction, fp) -> None:
    """Node table: coordinates then value, C-order rows."""
    writer = csv.writer(fp, lineterminator="\n")
    names = ["x", "y", "z"][: gf.dim]
    writer.writerow(names + ["u"])
    mesh = gf.mesh()
    flat = [m.ravel() for m in mesh] + [gf.values.ravel()]
    for row in zip(*flat):
        writer.writerow([repr(float(x)) for x in row])
