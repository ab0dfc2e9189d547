"""Numerical verification of the gradient and concavity inequalities.

Margins are reported raw (signed); a check passes when its minimum margin
stays above minus the check's declared tolerance.  The suite draws its
spectra from the deterministic cone sampler and evaluates every check
vectorized, in fixed-size chunks, so results are identical for any worker
count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConeViolationError, DegenerateSpectrumError, DomainError
from .symmetric import (
    COINCIDENCE_RTOL,
    OperatorKind,
    _quotient_pair_diff,
    _sigma2_pair_diff,
    _values,
    cone_contains,
    quotient_eval,
    sample_gamma2_array,
)

# pass/fail slack for proven inequalities
INEQ_TOL = 1e-12
# identity checks (closed forms and expansions) run at this relative level
IDENT_TOL = 1e-10
# pure-arithmetic identity in n
THRESHOLD_IDENT_TOL = 1e-14
# degeneracy threshold: below this the gain ratio is undefined
DEGENERATE_GAP_RTOL = 1e-10
# working non-degeneracy filter for expansion agreement: near the 1e-10
# degeneracy edge the expansion divides by the gap and double precision
# cannot reach 1e-10 relative agreement, so agreement checks require a gap
# three orders safer than the error-raising threshold
EXPANSION_GAP_RTOL = 1e-6

_CHUNK = 16384


def semiconvexity_constant(n: int) -> float:
    """Dimensional threshold c_n = (sqrt(3n^2+1) - n + 1) / (2n).

    The dynamic semi-convexity condition compares lam_min/laplacian against
    -c_n; c_4 equals 1/2 exactly.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise DomainError("need integer n >= 2")
    return (math.sqrt(3.0 * n * n + 1.0) - n + 1.0) / (2.0 * n)


def _require_cone(lam) -> np.ndarray:
    v = _values(lam)
    if not cone_contains(v, 2):
        raise ConeViolationError("spectrum is outside the k=2 cone")
    return v


def grad_floor_margin(lam) -> float:
    """Margin of grad_1 * lam_1^2 >= (2/n^2) f^2 for the quotient operator.

    grad_1 is the smallest gradient component (the one paired with the top
    eigenvalue).
    """
    v = _require_cone(lam)
    ev = quotient_eval(v, OperatorKind.QUOTIENT)
    n = v.size
    return float(ev.grad[0] * v[0] * v[0] - (2.0 / (n * n)) * ev.f * ev.f)


def tail_trace_bound_margin(lam) -> float:
    """Margin of (sigma1 - lam_1) * lam_1 >= (2/n) sigma2 (the intermediate
    bound behind the gradient floor)."""
    v = _require_cone(lam)
    n = v.size
    s1 = float(v.sum())
    s2 = 0.5 * (s1 * s1 - float((v * v).sum()))
    return (s1 - v[0]) * v[0] - (2.0 / n) * s2


def grad_bounds_margins(lam) -> np.ndarray:
    """Component bounds on the quotient gradient, as signed margins.

    Layout: [upper bound margin for grad_1,
             lower bound margins for grad_2..grad_n,
             upper bound margins for grad_2..grad_n];
    all three families subtract the ratio f/sigma1 from their constants.
    """
    v = _require_cone(lam)
    ev = quotient_eval(v, OperatorKind.QUOTIENT)
    n = v.size
    ratio = ev.f / ev.sigma1
    head_upper = ((n - 1.0) / n - ratio) - ev.grad[0]
    tail_lower = ev.grad[1:] - ((1.0 - 1.0 / math.sqrt(2.0)) - ratio)
    tail_upper = (2.0 * (n - 1.0) / n - ratio) - ev.grad[1:]
    return np.concatenate([[head_upper], tail_lower, tail_upper])


def concavity_quadratic(fi, n: int, kind: OperatorKind = OperatorKind.QUOTIENT):
    """(n-1) + (2n+2) fi - 2n fi^2, the quadratic controlling concavity.

    For the quotient operator ``fi`` is a gradient component; for sigma2
    pass the component normalized by the laplacian (fi / trace).  Both
    normalizations reduce to the same quadratic, whose positive root is
    1 + c_n.
    """
    if kind not in (OperatorKind.QUOTIENT, OperatorKind.SIGMA2):
        raise DomainError(f"unknown operator kind: {kind!r}")
    fi = np.asarray(fi, dtype=np.float64)
    out = (n - 1.0) + (2.0 * n + 2.0) * fi - 2.0 * n * fi * fi
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConcavityGain:
    """Gain ratio 3R / ((n+2)R - S^2) built from one gradient vector.

    ``quad_sum`` is R = sum grad^2 + 2 grad_i^2, ``lin_sum`` is
    S = sum grad + 2 grad_i, and ``cs_gap`` is the Cauchy-Schwarz gap
    (n+2) R - S^2 over the n+2 weighted entries, nonnegative with equality
    only at constant gradients.  ``gain_expansion`` re-assembles gain - 1
    from the factored trace/value closed forms and must agree with
    ``gain - 1``.
    """

    kind: OperatorKind
    index: int
    quad_sum: float
    lin_sum: float
    cs_gap: float
    gain: float
    gain_expansion: float
    psi: float


def _gain_pieces(grad: np.ndarray, index: int):
    gi = grad[index]
    quad_sum = float((grad * grad).sum() + 2.0 * gi * gi)
    lin_sum = float(grad.sum() + 2.0 * gi)
    n = grad.size
    cs_gap = (n + 2.0) * quad_sum - lin_sum * lin_sum
    return quad_sum, lin_sum, cs_gap


def _expansion_quotient(n, du, psi, gi, cs_gap):
    # gain - 1 factored through the trace/value closed forms; the
    # denominator is cs_gap * du^2 by construction
    num = (
        du * du * ((n - 1.0) + (2.0 * n + 2.0) * gi - 2.0 * n * gi * gi)
        - 4.0 * n * psi * du * gi
        + 2.0 * n * psi * du
        + n * psi * psi / gi
        - 2.0 * n * psi * psi
    )
    den = cs_gap * du * du
    return gi * (1.0 + num / den)


def _expansion_sigma2(n, du, psi, gi, cs_gap):
    num = (
        (n - 1.0) * du
        + 2.0 * (n + 1.0) * gi
        - 2.0 * n * gi * gi / du
        + 2.0 * (n - 1.0) * psi / gi
        + 2.0 * (n + 2.0) * psi / du
    )
    den = cs_gap / du
    return (gi / du) * (1.0 + num / den)


def _closed_sums_quotient(n, du, psi, gi):
    r = ((n - 1.0) * du * du + 2.0 * du * du * gi * gi - 2.0 * n * du * psi + n * psi * psi) / (
        du * du
    )
    s = ((n - 1.0) * du - n * psi + 2.0 * du * gi) / du
    return r, s


def _closed_sums_sigma2(n, du, psi, gi):
    return (n - 1.0) * du * du - 2.0 * psi + 2.0 * gi * gi, (n - 1.0) * du + 2.0 * gi


def concavity_gain(lam, index: int, kind: OperatorKind = OperatorKind.QUOTIENT) -> ConcavityGain:
    v = _require_cone(lam)
    n = v.size
    if not 0 <= index < n:
        raise DomainError(f"index {index} out of range for n={n}")
    ev = quotient_eval(v, kind)
    du = ev.sigma1
    psi = ev.f  # the operator's own value plays the source role
    quad_sum, lin_sum, cs_gap = _gain_pieces(ev.grad, index)
    if cs_gap < DEGENERATE_GAP_RTOL * (1.0 + quad_sum):
        raise DegenerateSpectrumError(
            "gradient spread too small: gain ratio undefined near isotropic spectra"
        )
    gain = 3.0 * quad_sum / cs_gap

    if kind is OperatorKind.QUOTIENT:
        r_closed, s_closed = _closed_sums_quotient(n, du, psi, ev.grad[index])
        expansion = _expansion_quotient(n, du, psi, ev.grad[index], cs_gap)
    else:
        r_closed, s_closed = _closed_sums_sigma2(n, du, psi, ev.grad[index])
        expansion = _expansion_sigma2(n, du, psi, ev.grad[index], cs_gap)

    # the direct sums and the trace/value closed forms are the same numbers
    if abs(r_closed - quad_sum) > 1e-9 * (1.0 + abs(quad_sum)) or abs(
        s_closed - lin_sum
    ) > 1e-9 * (1.0 + abs(lin_sum)):
        raise ArithmeticError("closed-form sums disagree with direct sums")

    return ConcavityGain(
        kind=kind,
        index=index,
        quad_sum=quad_sum,
        lin_sum=lin_sum,
        cs_gap=float(cs_gap),
        gain=float(gain),
        gain_expansion=float(expansion),
        psi=float(psi),
    )


# ---------------------------------------------------------------------------
# vectorized suite


@dataclass(frozen=True)
class CheckReport:
    name: str
    n: int
    samples: int
    min_margin: float
    passed: bool
    worst_input: np.ndarray | None
    tol: float


def _pair_indices(n: int):
    return [(p, q) for p in range(n) for q in range(p + 1, n)]


def _divided_diff_margins(lam, s1, kind: OperatorKind) -> np.ndarray:
    """Per-row margin -max_pq |identity error| of the divided differences."""
    m, n = lam.shape
    err = np.zeros(m)
    coincid = COINCIDENCE_RTOL * (1.0 + np.abs(lam).max(axis=1))
    for p, q in _pair_indices(n):
        lp = lam[:, p]
        lq = lam[:, q]
        gap = lq - lp
        valid = np.abs(gap) >= coincid
        if not valid.any():
            continue
        if kind is OperatorKind.QUOTIENT:
            dd = _quotient_pair_diff(lp, lq, s1) / np.where(valid, gap, 1.0)
            e = np.abs(dd * s1 - 1.0)
        else:
            dd = _sigma2_pair_diff(lp, lq, s1) / np.where(valid, gap, 1.0)
            e = np.abs(dd - 1.0)
        err = np.maximum(err, np.where(valid, e, 0.0))
    return -err


def _chunk_margins(lam: np.ndarray, n: int) -> dict[str, tuple[float, np.ndarray]]:
    """All suite margins for one chunk: name -> (tol, per-row margins)."""
    s1, s2 = _kernels.sigma12(lam)
    f, grad = _kernels.quotient_value_grad(lam)
    f2, grad2 = _kernels.sigma2_value_grad(lam)
    ratio = f / s1
    cn = semiconvexity_constant(n)
    out: dict[str, tuple[float, np.ndarray]] = {}

    out["grad_floor"] = (INEQ_TOL, grad[:, 0] * lam[:, 0] ** 2 - (2.0 / (n * n)) * f * f)
    out["tail_trace_bound"] = (INEQ_TOL, (s1 - lam[:, 0]) * lam[:, 0] - (2.0 / n) * s2)
    out["grad_head_upper"] = (INEQ_TOL, ((n - 1.0) / n - ratio) - grad[:, 0])
    out["grad_tail_lower"] = (
        INEQ_TOL,
        grad[:, 1] - ((1.0 - 1.0 / math.sqrt(2.0)) - ratio),
    )
    out["grad_tail_upper"] = (INEQ_TOL, (2.0 * (n - 1.0) / n - ratio) - grad[:, -1])

    for label, g in (("quotient", grad), ("sigma2", grad2)):
        quad = (g * g).sum(axis=1)[:, None] + 2.0 * g * g
        lin = g.sum(axis=1)[:, None] + 2.0 * g
        gap = (n + 2.0) * quad - lin * lin
        if label == "quotient":
            out["cs_gap_nonneg"] = (INEQ_TOL, (gap / (1.0 + quad)).min(axis=1))
        du = s1[:, None]
        psi = (f if label == "quotient" else f2)[:, None]
        r_closed, s_closed = (
            _closed_sums_quotient(n, du, psi, g)
            if label == "quotient"
            else _closed_sums_sigma2(n, du, psi, g)
        )
        rel_sum = np.maximum(
            np.abs(r_closed - quad) / (1.0 + np.abs(quad)),
            np.abs(s_closed - lin) / (1.0 + np.abs(lin)),
        )
        out[f"sum_closed_forms_{label}"] = (IDENT_TOL, -rel_sum.max(axis=1))

        nondeg = gap >= EXPANSION_GAP_RTOL * (1.0 + quad)
        direct = 3.0 * quad / gap - 1.0
        expansion = (
            _expansion_quotient(n, du, psi, g, gap)
            if label == "quotient"
            else _expansion_sigma2(n, du, psi, g, gap)
        )
        rel = np.abs(expansion - direct) / (1.0 + np.abs(direct))
        rel = np.where(nondeg, rel, 0.0)
        out[f"gain_expansion_{label}"] = (IDENT_TOL, -rel.max(axis=1))

    dyn_ok = lam[:, -1] >= -cn * s1
    thresh = (1.0 + cn - ratio) - grad[:, -1]
    out["grad_threshold"] = (INEQ_TOL, np.where(dyn_ok, thresh, np.inf))
    quad_margin = ((n - 1.0) + (2.0 * n + 2.0) * grad - 2.0 * n * grad * grad).min(axis=1)
    out["concavity_quadratic"] = (INEQ_TOL, np.where(dyn_ok, quad_margin, np.inf))

    out["divided_diff_quotient"] = (
        INEQ_TOL,
        _divided_diff_margins(lam, s1, OperatorKind.QUOTIENT),
    )
    out["divided_diff_sigma2"] = (
        INEQ_TOL,
        _divided_diff_margins(lam, s1, OperatorKind.SIGMA2),
    )
    return out


def _suite_seed(seed: int, n: int) -> int:
    return int(np.random.SeedSequence(entropy=[int(seed), int(n)]).generate_state(1, np.uint64)[0])


def run_suite(
    n_list=(2, 3, 4, 5, 6),
    samples: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> list[CheckReport]:
    """Run every margin check over ``samples`` cone draws for each n.

    Deterministic for fixed (n_list, samples, seed) regardless of
    ``workers``: sampling happens centrally and the chunk size is fixed,
    so the reduction order never changes.
    """
    if samples < 1:
        raise DomainError("samples must be positive")
    reports: list[CheckReport] = []
    for n in n_list:
        lam_all = sample_gamma2_array(n, _suite_seed(seed, n), samples)
        chunks = [lam_all[i : i + _CHUNK] for i in range(0, samples, _CHUNK)]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda c: _chunk_margins(c, n), chunks))
        else:
            results = [_chunk_margins(c, n) for c in chunks]

        names = list(results[0].keys())
        for name in names:
            tol = results[0][name][0]
            best = math.inf
            worst_row = None
            for offset, res in enumerate(results):
                margins = res[name][1]
                j = int(np.argmin(margins))
                if margins[j] < best:
                    best = float(margins[j])
                    worst_row = lam_all[offset * _CHUNK + j].copy()
            reports.append(
                CheckReport(
                    name=name,
                    n=n,
                    samples=samples,
                    min_margin=best,
                    passed=best >= -tol,
                    worst_input=worst_row if math.isfinite(best) else None,
                    tol=tol,
                )
            )

        ident = abs(
            (1.0 + semiconvexity_constant(n))
            - (n + 1.0 + math.sqrt(3.0 * n * n + 1.0)) / (2.0 * n)
        )
        reports.append(
            CheckReport(
                name="threshold_identity",
                n=n,
                samples=0,
                min_margin=-ident,
                passed=ident <= THRESHOLD_IDENT_TOL,
                worst_input=None,
                tol=THRESHOLD_IDENT_TOL,
            )
        )
    return reports


def reports_to_csv(reports: list[CheckReport], fp) -> None:
    """Write reports as CSV (name,n,samples,min_margin,passed,worst_input)."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["name", "n", "samples", "min_margin", "passed", "worst_input"])
    for r in reports:
        worst = "" if r.worst_input is None else " ".join(repr(float(x)) for x in r.worst_input)
        writer.writerow([r.name, r.n, r.samples, repr(r.min_margin), str(r.passed).lower(), worst])
