"""Measurement harness for doubling-type quantities on grid solutions.

Evaluates, on a solved (or analytic) grid function: sup-Laplacians over
nested balls, the dynamic semi-convexity margin, the weighted test
function

    W = rho^alpha * exp(a (x . grad u - u) + b |grad u|^2 / 2) * L,
    rho = r3^2 - |x|^2,

and eigenframe diagnostics at W's discrete maximizer.  The log factor L
is log(max(lap u / M1, gamma)) by default; the "max_of_logs" variant uses
max(log(lap u / M1), gamma) instead, which floors the factor at gamma
rather than log(gamma).  The two coincide where lap u is large and differ
near the floor; both are kept because the estimates exist in both
conventions.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConeViolationError, DomainError, HessquotError
from .grid import GridFunction
from .inequalities import semiconvexity_constant
from .symmetric import OperatorKind, cone_contains, quotient_eval

VARIANTS = ("log_of_max", "max_of_logs")


@dataclass(frozen=True)
class TestFunctionParams:
    """Weights of the test function and the nested-ball geometry.

    The useful regime keeps a^2 << b << a << 1 <= alpha; that ordering is
    reported by ``ordering_flags`` but deliberately not enforced, so
    experiments outside the regime stay possible.
    """

    alpha: float = 2.0
    a: float = 0.1
    b: float = 0.02
    gamma: float = 2.0
    m1: float | None = None
    radii: tuple[float, float, float] = (1.0, 2.0, 3.0)
    variant: str = "log_of_max"

    def __post_init__(self):
        if not (self.alpha > 0 and self.a > 0 and self.b > 0):
            raise DomainError("alpha, a, b must be positive")
        if self.gamma < 2.0:
            raise DomainError("gamma must be at least 2")
        if self.m1 is not None and not self.m1 > 0:
            raise DomainError("m1 must be positive when given")
        r = tuple(float(x) for x in self.radii)
        object.__setattr__(self, "radii", r)
        if len(r) != 3 or not (0 < r[0] < r[1] < r[2]):
            raise DomainError("radii must be three increasing positive values")
        if self.variant not in VARIANTS:
            raise DomainError(f"variant must be one of {VARIANTS}")

    def ordering_flags(self) -> dict[str, bool]:
        return {
            "a_sq_below_b": self.a * self.a < self.b,
            "b_below_a": self.b < self.a,
            "a_below_one": self.a < 1.0,
            "alpha_at_least_one": self.alpha >= 1.0,
        }


@dataclass(frozen=True)
class ScanDiagnostics:
    """Eigenframe quantities at the test-function maximizer."""

    lam: np.ndarray
    grad: np.ndarray
    op_grad: np.ndarray | None
    a_vec: np.ndarray
    b_vec: np.ndarray | None
    critical_residual: float
    log_factor_active: bool
    ordering_flags: dict


@dataclass(frozen=True)
class ScanResult:
    w_max: float
    max_index: tuple[int, ...]
    max_point: tuple[float, ...]
    m1: float
    diagnostics: ScanDiagnostics


@dataclass(frozen=True)
class DoublingReport:
    m1: float
    m2: float
    ratio: float
    dyn_margin: float
    semiconvex_modulus: float
    max_index: tuple[int, ...]
    max_point: tuple[float, ...]
    w_max: float
    flagged: bool
    diagnostics: ScanDiagnostics


def _radius_field(gf: GridFunction, interior: bool):
    mesh = gf.mesh(interior=interior)
    return np.sqrt(sum(m * m for m in mesh)), mesh


def sup_laplacian(gf: GridFunction, radius: float) -> float:
    """Max of the discrete Laplacian over interior nodes with |x| <= radius."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    reach = min(min(-a, b) for a, b in zip(gf.box.lo, gf.box.hi))
    if radius > reach - gf.h:
        raise DomainError(
            f"ball of radius {radius} does not fit inside the grid interior"
        )
    r, _ = _radius_field(gf, interior=True)
    mask = r <= radius
    if not mask.any():
        raise DomainError("no interior nodes inside the requested ball")
    return float(gf.laplacian_interior()[mask].max())


def dynamic_condition_margin(gf: GridFunction, n: int | None = None) -> float:
    """min over interior nodes of lam_min/(lap u) + c_n; needs lap u > 0."""
    if n is not None and n != gf.dim:
        raise DomainError(f"n={n} disagrees with the grid dimension {gf.dim}")
    lap = gf.laplacian_interior()
    if not np.all(lap > 0.0):
        raise ConeViolationError("laplacian must be positive at interior nodes")
    lam_min = gf.eigenvalues_interior()[..., -1]
    return float((lam_min / lap).min()) + semiconvexity_constant(gf.dim)


# ---------------------------------------------------------------------------
# closed-form eigenframes (2x2 rotation, 3x3 row cross products)

_EIG_DEGENERATE_RTOL = 1e-7


def _eigenframe(mat: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Columns: unit eigenvectors matching the descending eigenvalues."""
    d = mat.shape[0]
    scale = float(np.abs(mat).max()) + 1.0
    if d == 2:
        if abs(mat[0, 1]) < 1e-14 * scale:
            frame = np.eye(2)
            if mat[0, 0] < mat[1, 1]:
                frame = frame[:, ::-1]
            return frame
        theta = 0.5 * math.atan2(2.0 * mat[0, 1], mat[0, 0] - mat[1, 1])
        c, s = math.cos(theta), math.sin(theta)
        frame = np.array([[c, -s], [s, c]])
        d0 = frame[:, 0] @ mat @ frame[:, 0]
        d1 = frame[:, 1] @ mat @ frame[:, 1]
        if d0 < d1:
            frame = frame[:, ::-1]
        return frame

    gap_ok = (lam[0] - lam[1]) > _EIG_DEGENERATE_RTOL * scale and (
        lam[1] - lam[2]
    ) > _EIG_DEGENERATE_RTOL * scale
    if gap_ok:
        cols = []
        for li in (lam[0], lam[2]):
            shifted = mat - li * np.eye(3)
            crosses = [
                np.cross(shifted[i], shifted[j]) for i, j in ((0, 1), (0, 2), (1, 2))
            ]
            norms = [np.linalg.norm(c) for c in crosses]
            k = int(np.argmax(norms))
            if norms[k] < 1e-12 * scale * scale:
                gap_ok = False
                break
            cols.append(crosses[k] / norms[k])
        if gap_ok:
            v1, v3 = cols
            v2 = np.cross(v3, v1)
            return np.stack([v1, v2 / np.linalg.norm(v2), v3], axis=1)
    # repeated eigenvalues: any orthonormal frame of the eigenspace works,
    # fall back to the library solver
    w, v = np.linalg.eigh(mat)
    return v[:, ::-1]


def _log_factor(ratio: np.ndarray, gamma: float, variant: str) -> np.ndarray:
    if variant == "log_of_max":
        return np.log(np.maximum(ratio, gamma))
    return np.maximum(np.log(ratio), gamma)


def test_function_scan(
    gf: GridFunction,
    params: TestFunctionParams | None = None,
    kind: OperatorKind = OperatorKind.QUOTIENT,
    psi=None,
    psi_u: float = 0.0,
) -> ScanResult:
    """Evaluate W over the interior of the big ball and locate its maximum.

    ``psi`` may be a callable over coordinate arrays; by default the
    operator value of the grid function itself plays the source role, which
    makes the scanned field an exact solution of its own equation.  The
    critical-equation residual max_i |(lap u)_i / (U lap u) + A_i| is
    reported at the maximizer (NaN when the log floor is active there or
    the maximizer sits too close to the boundary to difference).
    """
    params = params or TestFunctionParams()
    r, mesh_i = _radius_field(gf, interior=True)
    r3 = params.radii[2]
    region = r < r3
    if not region.any():
        raise DomainError("grid has no interior nodes inside the scan ball")

    lap = gf.laplacian_interior()
    if np.any(lap[region] <= 0.0):
        raise ConeViolationError("laplacian must be positive inside the scan ball")

    m1 = params.m1 if params.m1 is not None else sup_laplacian(gf, params.radii[0])
    grads = gf.gradient_interior()
    ui = gf.interior()
    drift = sum(m * g for m, g in zip(mesh_i, grads)) - ui
    grad_sq = sum(g * g for g in grads)
    rho = r3 * r3 - r * r

    # exponent only on the scanned ball: outside it rho <= 0 and the drift
    # can overflow exp for fast-growing fields
    lf = _log_factor(lap[region] / m1, params.gamma, params.variant)
    w = np.full(lap.shape, -np.inf)
    w[region] = (
        rho[region] ** params.alpha
        * np.exp(params.a * drift[region] + params.b * grad_sq[region] / 2.0)
        * lf
    )
    flat = int(np.argmax(w))
    idx_i = np.unravel_index(flat, w.shape)
    w_max = float(w[idx_i])
    max_index = tuple(int(k) + 1 for k in idx_i)
    point = tuple(float(m[idx_i]) for m in mesh_i)

    diagnostics = _max_point_diagnostics(
        gf, params, kind, psi, psi_u, idx_i, point, lap, grads, m1
    )
    return ScanResult(
        w_max=w_max,
        max_index=max_index,
        max_point=point,
        m1=float(m1),
        diagnostics=diagnostics,
    )


def _interior_gradient_at(field: np.ndarray, idx, h: float):
    """Central difference of an interior-node field at one of its nodes."""
    dim = field.ndim
    for ax in range(dim):
        if not 1 <= idx[ax] <= field.shape[ax] - 2:
            return None
    out = np.zeros(dim)
    for ax in range(dim):
        up = list(idx)
        dn = list(idx)
        up[ax] += 1
        dn[ax] -= 1
        out[ax] = (field[tuple(up)] - field[tuple(dn)]) / (2.0 * h)
    return out


def _max_point_diagnostics(gf, params, kind, psi, psi_u, idx_i, point, lap, grads, m1):
    hess = gf.hessian_at(idx_i)
    lam = np.sort(np.linalg.eigvalsh(hess))[::-1]
    frame = _eigenframe(hess, lam)
    grad_vec = np.array([g[idx_i] for g in grads])
    x_vec = np.asarray(point)

    rho = params.radii[2] ** 2 - float(x_vec @ x_vec)
    rho_grad = -2.0 * x_vec
    a_vec = (
        params.alpha * (frame.T @ rho_grad) / rho
        + params.a * (frame.T @ x_vec) * lam
        + params.b * (frame.T @ grad_vec) * lam
    )

    op_grad = None
    if cone_contains(lam, 2):
        op_grad = quotient_eval(lam, kind).grad

    b_vec = None
    if psi is not None:
        psi_full = np.asarray(psi(*gf.mesh()), dtype=np.float64)
        isl = tuple(slice(1, -1) for _ in range(gf.dim))
        psi_grad = _interior_gradient_at(psi_full[isl], idx_i, gf.h)
    else:
        psi_grad = None  # operator-valued source: handled below
    if psi_grad is not None:
        b_vec = frame.T @ psi_grad + float(psi_u) * (frame.T @ grad_vec)

    lap_here = float(lap[idx_i])
    ratio = lap_here / m1
    if params.variant == "log_of_max":
        active = ratio > params.gamma
    else:
        active = ratio > 0 and math.log(max(ratio, 1e-300)) > params.gamma
    critical = math.nan
    if active:
        lap_grad = _interior_gradient_at(lap, idx_i, gf.h)
        if lap_grad is not None:
            u_val = math.log(ratio)
            resid = (frame.T @ lap_grad) / (u_val * lap_here) + a_vec
            critical = float(np.abs(resid).max())

    return ScanDiagnostics(
        lam=lam,
        grad=grad_vec,
        op_grad=op_grad,
        a_vec=a_vec,
        b_vec=b_vec,
        critical_residual=critical,
        log_factor_active=bool(active),
        ordering_flags=params.ordering_flags(),
    )


def doubling_report(
    gf: GridFunction,
    params: TestFunctionParams | None = None,
    n: int | None = None,
    kind: OperatorKind = OperatorKind.QUOTIENT,
    psi=None,
    psi_u: float = 0.0,
) -> DoublingReport:
    """Nested-ball sup-Laplacians, margins, and the W-maximizer diagnostics."""
    params = params or TestFunctionParams()
    if n is not None and n != gf.dim:
        raise DomainError(f"n={n} disagrees with the grid dimension {gf.dim}")
    lap = gf.laplacian_interior()
    if not np.all(lap > 0.0):
        raise ConeViolationError("laplacian must be positive at interior nodes")

    m1 = sup_laplacian(gf, params.radii[0])
    m2 = sup_laplacian(gf, params.radii[1])
    lam_min = gf.eigenvalues_interior()[..., -1]
    dyn_margin = float((lam_min / lap).min()) + semiconvexity_constant(gf.dim)
    scan_params = params if params.m1 is not None else _with_m1(params, m1)
    scan = test_function_scan(gf, scan_params, kind=kind, psi=psi, psi_u=psi_u)
    return DoublingReport(
        m1=m1,
        m2=m2,
        ratio=m2 / (1.0 + m1),
        dyn_margin=dyn_margin,
        semiconvex_modulus=float(lam_min.min()),
        max_index=scan.max_index,
        max_point=scan.max_point,
        w_max=scan.w_max,
        flagged=dyn_margin < 0.0,
        diagnostics=scan.diagnostics,
    )


def _with_m1(params: TestFunctionParams, m1: float) -> TestFunctionParams:
    return TestFunctionParams(
        alpha=params.alpha,
        a=params.a,
        b=params.b,
        gamma=params.gamma,
        m1=m1,
        radii=params.radii,
        variant=params.variant,
    )


# ---------------------------------------------------------------------------
# the committed doubling study

BASELINE_RTOL = 0.05


def doubling_study(
    shape=(41, 41), params: TestFunctionParams | None = None, solver_config=None
) -> list[tuple[str, OperatorKind, DoublingReport]]:
    """Solve the fixed planar family and report each instance.

    Every instance is solved from its manufactured Dirichlet problem (the
    source carries no u-dependence here), so the study exercises solver and
    harness together; sampling the analytic fields directly would bypass
    the solve.
    """
    from .presets import doubling_family
    from .solver import manufacture, newton_solve

    rows = []
    for name, fld, kind, box in doubling_family():
        spec, _ = manufacture(fld, box, shape, kind, u_coeff=0.0)
        gf, rep = newton_solve(spec, solver_config)
        if not rep.converged:
            raise HessquotError(f"doubling instance {name} failed to solve: {rep.message}")

        def psi(*coords, _f=fld, _k=kind):
            from .grid import hessian_sigmas

            s1, s2 = hessian_sigmas(_f.dim, _f.hessian(*coords))
            return s2 / s1 if _k is OperatorKind.QUOTIENT else s2

        report = doubling_report(gf, params, kind=kind, psi=psi)
        rows.append((name, kind, report))
    return rows


def doubling_to_csv(rows, fp) -> None:
    """CSV columns: instance_id, M1, M2, ratio, dyn_margin,
    semiconvex_modulus, max_point, W_max."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(
        [
            "instance_id",
            "M1",
            "M2",
            "ratio",
            "dyn_margin",
            "semiconvex_modulus",
            "max_point",
            "W_max",
        ]
    )
    for name, kind, r in rows:
        writer.writerow(
            [
                name,
                repr(r.m1),
                repr(r.m2),
                repr(r.ratio),
                repr(r.dyn_margin),
                repr(r.semiconvex_modulus),
                " ".join(str(i) for i in r.max_index),
                repr(r.w_max),
            ]
        )


def report_to_ini(name: str, kind: OperatorKind, report: DoublingReport, fp) -> None:
    parser = configparser.ConfigParser()
    parser["doubling"] = {
        "instance_id": name,
        "kind": kind.value,
        "m1": repr(report.m1),
        "m2": repr(report.m2),
        "ratio": repr(report.ratio),
        "dyn_margin": repr(report.dyn_margin),
        "semiconvex_modulus": repr(report.semiconvex_modulus),
        "max_point": " ".join(repr(x) for x in report.max_point),
        "w_max": repr(report.w_max),
        "flagged": str(report.flagged).lower(),
    }
    parser.write(fp)


def load_baseline(fp=None) -> dict[str, dict]:
    """Committed regression baseline for the doubling family."""
    if fp is None:
        from importlib.resources import files

        text = files("hessquot.data").joinpath("doubling_baseline.csv").read_text()
    else:
        text = fp.read()
    out = {}
    for row in csv.DictReader(text.splitlines()):
        out[row["instance_id"]] = {
            "kind": row["kind"],
            "ratio": float(row["ratio"]),
            "dyn_margin": float(row["dyn_margin"]),
            "flagged": row["flagged"] == "true",
        }
    return out


def compare_to_baseline(rows, baseline: dict | None = None, rtol: float = BASELINE_RTOL):
    """Per-instance comparison of fresh ratios against the baseline.

    A row passes when its ratio sits within ``rtol`` of the recorded one
    and the flag state matches.
    """
    baseline = baseline if baseline is not None else load_baseline()
    out = []
    for name, kind, r in rows:
        base = baseline.get(name)
        if base is None:
            out.append({"instance_id": name, "within": False, "reason": "missing"})
            continue
        rel = abs(r.ratio - base["ratio"]) / abs(base["ratio"])
        ok = rel <= rtol and (r.flagged == base["flagged"]) and kind.value == base["kind"]
        out.append(
            {
                "instance_id": name,
                "ratio": r.ratio,
                "baseline_ratio": base["ratio"],
                "rel_diff": rel,
                "flagged": r.flagged,
                "within": ok,
            }
        )
    return out
