"""Constrained minimizer for the weighted quadratic behind the gain ratio.

Minimizes q(t) = 3 sum_{j != i} t_j^2 + t_i^2 over vectors t meeting two
linear constraints: a weighted sum sum f_j t_j = B and a plain sum
sum t_j = G.  The closed-form solution, a dense KKT solve, and random
feasible sampling provide three independent routes to the same minimum.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConstraintsError, DomainError, LinearSolveError

# closed form vs KKT agreement level used by batch reports
BATCH_RTOL = 1e-8
# constraint residuals after either solve should sit at rounding level
RESIDUAL_RTOL = 1e-10
DEGENERATE_GAP_RTOL = 1e-10


@dataclass(frozen=True)
class ConstraintData:
    """One minimization instance.

    ``fvec`` holds the constraint weights (gradient components in the
    intended use), ``index`` selects the lightly weighted coordinate,
    ``grad_rhs`` is the weighted-sum right-hand side and ``sum_rhs`` the
    plain-sum right-hand side.
    """

    fvec: np.ndarray
    index: int
    grad_rhs: float
    sum_rhs: float

    def __post_init__(self):
        # unlike eigenvalue spectra, the weights keep their caller order:
        # the index refers to a specific component
        v = np.array(self.fvec, dtype=np.float64).reshape(-1)
        if v.size < 2:
            raise DomainError("need at least two constraint weights")
        if not np.all(np.isfinite(v)):
            raise DomainError("constraint weights must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "fvec", v)
        if not 0 <= self.index < v.size:
            raise DomainError(f"index {self.index} out of range for n={v.size}")
        if not (math.isfinite(self.grad_rhs) and math.isfinite(self.sum_rhs)):
            raise DomainError("right-hand sides must be finite")


@dataclass(frozen=True)
class LagrangeSolution:
    t: np.ndarray
    index: int
    mult_grad: float
    mult_sum: float
    quad_sum: float
    lin_sum: float
    cs_gap: float
    min_value: float


def objective(t, index: int) -> float:
    """q(t) = 3 sum_{j != i} t_j^2 + t_i^2 (vectorized over leading axes)."""
    t = np.asarray(t, dtype=np.float64)
    sq = t * t
    total = 3.0 * sq.sum(axis=-1) - 2.0 * sq[..., index]
    return float(total) if total.ndim == 0 else total


def _sums(data: ConstraintData):
    f = data.fvec
    fi = f[data.index]
    quad_sum = float((f * f).sum() + 2.0 * fi * fi)
    lin_sum = float(f.sum() + 2.0 * fi)
    cs_gap = (f.size + 2.0) * quad_sum - lin_sum * lin_sum
    if cs_gap < DEGENERATE_GAP_RTOL * (1.0 + quad_sum):
        raise DegenerateConstraintsError(
            "constraint weights are (numerically) constant: KKT system singular"
        )
    return quad_sum, lin_sum, cs_gap


def closed_form_minimize(data: ConstraintData) -> LagrangeSolution:
    """Minimizer from the explicit two-multiplier elimination."""
    f = data.fvec
    n = f.size
    i = data.index
    b, g = data.grad_rhs, data.sum_rhs
    quad_sum, lin_sum, cs_gap = _sums(data)

    mult_grad = (6.0 * (n + 2.0) * b - 6.0 * lin_sum * g) / cs_gap
    mult_sum = (6.0 * quad_sum * g - 6.0 * lin_sum * b) / cs_gap

    t = (((n + 2.0) * f - lin_sum) * b + (lin_sum * f - quad_sum) * (-g)) / cs_gap
    t[i] *= 3.0

    min_value = (
        3.0 * quad_sum * g * g + 3.0 * (n + 2.0) * b * b - 6.0 * lin_sum * g * b
    ) / cs_gap
    return LagrangeSolution(
        t=t,
        index=i,
        mult_grad=float(mult_grad),
        mult_sum=float(mult_sum),
        quad_sum=quad_sum,
        lin_sum=lin_sum,
        cs_gap=float(cs_gap),
        min_value=float(min_value),
    )


def kkt_oracle(data: ConstraintData) -> LagrangeSolution:
    """Same minimizer through a dense solve of the full KKT system.

    Unknowns are (t_1..t_n, mu1, mu2); stationarity rows read
    2 w_j t_j - mu1 f_j - mu2 = 0 with w_j = 3 off the light index and 1
    on it, followed by the two constraint rows.
    """
    f = data.fvec
    n = f.size
    i = data.index
    quad_sum, lin_sum, cs_gap = _sums(data)

    a = np.zeros((n + 2, n + 2))
    rhs = np.zeros(n + 2)
    for j in range(n):
        a[j, j] = 2.0 * (1.0 if j == i else 3.0)
        a[j, n] = -f[j]
        a[j, n + 1] = -1.0
    a[n, :n] = f
    a[n + 1, :n] = 1.0
    rhs[n] = data.grad_rhs
    rhs[n + 1] = data.sum_rhs
    try:
        sol = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise LinearSolveError(f"KKT system solve failed: {exc}") from exc

    t = sol[:n]
    return LagrangeSolution(
        t=t,
        index=i,
        mult_grad=float(sol[n]),
        mult_sum=float(sol[n + 1]),
        quad_sum=quad_sum,
        lin_sum=lin_sum,
        cs_gap=float(cs_gap),
        min_value=objective(t, i),
    )


def constraint_residual(data: ConstraintData, t) -> float:
    """Max absolute violation of the two constraints, scale free."""
    t = np.asarray(t, dtype=np.float64)
    scale = 1.0 + abs(data.grad_rhs) + abs(data.sum_rhs) + float(np.abs(t).max())
    r1 = abs(float(data.fvec @ t) - data.grad_rhs)
    r2 = abs(float(t.sum()) - data.sum_rhs)
    return max(r1, r2) / scale


def cross_term_margin(sol: LagrangeSolution, data: ConstraintData) -> tuple[float, float]:
    """Distance of the minimum from its cross-term-free main part.

    Returns (|min - main|, bound) where main drops the mixed B*G term and
    bound = 6 |S G B| / cs_gap; the two coincide identically, so the pair
    doubles as an exactness check.
    """
    b, g = data.grad_rhs, data.sum_rhs
    n = data.fvec.size
    main = (3.0 * sol.quad_sum * g * g + 3.0 * (n + 2.0) * b * b) / sol.cs_gap
    bound = 6.0 * abs(sol.lin_sum * g * b) / sol.cs_gap
    return abs(sol.min_value - main), bound


def feasible_sample_check(data: ConstraintData, trials: int = 100, seed: int = 0) -> float:
    """Min over random feasible points of q(t) - q(t*), ideally >= 0.

    Draws ``trials`` points from the feasible affine subspace (particular
    solution plus null-space directions at varied scales) and returns the
    smallest objective gap against the closed-form minimum.  ``trials = 0``
    returns +inf.  Needs n >= 3 for the subspace to have positive dimension.
    """
    if trials < 0:
        raise DomainError("trials must be nonnegative")
    if trials == 0:
        return math.inf
    f = data.fvec
    n = f.size
    if n < 3:
        raise DomainError("feasible sampling needs n >= 3 (no free directions below)")
    sol = closed_form_minimize(data)

    a = np.vstack([f, np.ones(n)])
    rhs = np.array([data.grad_rhs, data.sum_rhs])
    particular, _, rank, _ = np.linalg.lstsq(a, rhs, rcond=None)
    if rank < 2:
        raise DegenerateConstraintsError("constraint rows are linearly dependent")
    _, _, vt = np.linalg.svd(a)
    null_basis = vt[2:]  # (n-2, n), orthonormal rows

    rng = np.random.default_rng(seed)
    coeff = rng.standard_normal((trials, n - 2))
    coeff *= 10.0 ** rng.uniform(-2.0, 2.0, size=(trials, 1))
    pts = particular[None, :] + coeff @ null_basis
    gaps = objective(pts, data.index) - sol.min_value
    return float(gaps.min())


def random_instances(count: int, n: int, seed: int = 0) -> list[ConstraintData]:
    """Well-conditioned random instances with cone-derived weight vectors."""
    from . import _kernels
    from .symmetric import sample_gamma2_array

    if n < 2:
        raise DomainError("need n >= 2")
    out: list[ConstraintData] = []
    rng = np.random.default_rng(seed)
    batch = max(2 * count, 16)
    attempt = 0
    while len(out) < count:
        lam = sample_gamma2_array(n, seed + 7919 * attempt, batch)
        _, grads = _kernels.quotient_value_grad(lam)
        rhs = rng.standard_normal((batch, 2)) * 10.0 ** rng.uniform(-1.0, 1.0, size=(batch, 1))
        for k in range(batch):
            if len(out) >= count:
                break
            f = grads[k]
            i = (len(out) + attempt) % n
            fi = f[i]
            quad = float((f * f).sum() + 2.0 * fi * fi)
            lin = float(f.sum() + 2.0 * fi)
            gap = (n + 2.0) * quad - lin * lin
            # skip near-degenerate weight vectors; they get their own tests
            if gap < 1e-6 * (1.0 + quad):
                continue
            out.append(
                ConstraintData(
                    fvec=f.copy(), index=i, grad_rhs=float(rhs[k, 0]), sum_rhs=float(rhs[k, 1])
                )
            )
        attempt += 1
        if attempt > 64:
            raise ArithmeticError("sampler kept producing degenerate weight vectors")
    return out


def parse_instances(text: str) -> list[ConstraintData]:
    """Parse instance lines ``n f_1 .. f_n index B G`` (1-based index).

    Blank lines and ``#`` comments are skipped.
    """
    out = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            n = int(tokens[0])
        except (ValueError, IndexError):
            raise DomainError(f"line {ln}: leading dimension missing or not an integer")
        if n < 2 or len(tokens) != n + 4:
            raise DomainError(f"line {ln}: expected {n + 4} fields for n={n}, got {len(tokens)}")
        try:
            fvec = np.array([float(x) for x in tokens[1 : n + 1]])
            index = int(tokens[n + 1])
            b = float(tokens[n + 2])
            g = float(tokens[n + 3])
        except ValueError as exc:
            raise DomainError(f"line {ln}: {exc}") from exc
        if not 1 <= index <= n:
            raise DomainError(f"line {ln}: index {index} outside 1..{n}")
        out.append(ConstraintData(fvec=fvec, index=index - 1, grad_rhs=b, sum_rhs=g))
    return out


def run_batch(instances: list[ConstraintData], fp=None) -> list[dict]:
    """Closed form vs KKT on every instance; optionally write rows as CSV.

    Columns: instance_id, qmin_closed, qmin_kkt, max_t_diff,
    constraint_residual, pass.
    """
    rows = []
    for k, data in enumerate(instances):
        closed = closed_form_minimize(data)
        kkt = kkt_oracle(data)
        t_scale = 1.0 + float(np.abs(closed.t).max())
        max_t_diff = float(np.abs(closed.t - kkt.t).max())
        resid = max(constraint_residual(data, closed.t), constraint_residual(data, kkt.t))
        ok = (
            abs(closed.min_value - kkt.min_value) <= BATCH_RTOL * (1.0 + abs(closed.min_value))
            and max_t_diff <= BATCH_RTOL * t_scale
            and resid <= RESIDUAL_RTOL
        )
        rows.append(
            {
                "instance_id": k,
                "qmin_closed": closed.min_value,
                "qmin_kkt": kkt.min_value,
                "max_t_diff": max_t_diff,
                "constraint_residual": resid,
                "pass": ok,
            }
        )
    if fp is not None:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(
            ["instance_id", "qmin_closed", "qmin_kkt", "max_t_diff", "constraint_residual", "pass"]
        )
        for r in rows:
            writer.writerow(
                [
                    r["instance_id"],
                    repr(r["qmin_closed"]),
                    repr(r["qmin_kkt"]),
                    repr(r["max_t_diff"]),
                    repr(r["constraint_residual"]),
                    str(r["pass"]).lower(),
                ]
            )
    return rows
