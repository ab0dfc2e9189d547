"""Elementary symmetric calculus for sigma2-type operators.

Everything downstream (inequality suite, constrained minimizer, solver,
doubling harness) works with eigenvalue vectors through this module: the
elementary symmetric functions sigma_k, the Garding cone tests, the two
operators of interest (sigma2/sigma1 and sigma2) with their first and
second eigenvalue derivatives, the matrix-argument derivative used by the
solver's linearization, and a deterministic cone sampler.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConeViolationError, DomainError


class OperatorKind(enum.Enum):
    QUOTIENT = "quotient"  # sigma2(lam) / sigma1(lam)
    SIGMA2 = "sigma2"


# threshold below which an eigenvalue pair counts as coincident when
# forming divided differences (scaled by 1 + |lam|_inf)
COINCIDENCE_RTOL = 1e-9
# internal sanity tolerance for the mutual agreement of the three
# equivalent gradient formulas (scaled by 1 + |grad|_inf)
_GRAD_AGREE_TOL = 1e-10
# relative floor used by the near-boundary sampler stratum
BOUNDARY_SIGMA2_FLOOR = 1e-8


@dataclass(frozen=True)
class Spectrum:
    """An eigenvalue vector, stored sorted in descending order.

    Construction sorts whatever ordering the caller supplies; callers that
    need the original eigenvector pairing must track it themselves.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size < 2:
            raise DomainError("a spectrum needs at least two eigenvalues")
        if not np.all(np.isfinite(v)):
            raise DomainError("eigenvalues must be finite")
        v = np.sort(v)[::-1].copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


def _values(lam) -> np.ndarray:
    if isinstance(lam, Spectrum):
        return lam.values
    return Spectrum(np.asarray(lam)).values


def _esp_coeffs(values: np.ndarray, k: int) -> np.ndarray:
    """sigma_0..sigma_k of ``values`` via the (1 + lam_i t) product recurrence."""
    e = np.zeros(k + 1)
    e[0] = 1.0
    upto = 0
    for v in values:
        upto = min(upto + 1, k)
        # e[j] <- e[j] + v * e[j-1]; RHS uses pre-update values, so the
        # vectorized form is the textbook one-pass recurrence
        e[1 : upto + 1] = e[1 : upto + 1] + v * e[0:upto]
    return e


def elementary_symmetric(lam, k: int) -> float:
    """sigma_k of the spectrum; sigma_0 is defined as 1."""
    v = _values(lam)
    if not isinstance(k, (int, np.integer)):
        raise DomainError("order k must be an integer")
    if k < 0 or k > v.size:
        raise DomainError(f"order k={k} out of range for n={v.size}")
    return float(_esp_coeffs(v, int(k))[int(k)])


def sigma_without(lam, k: int, omit) -> float:
    """sigma_k of the spectrum with the listed entries removed.

    ``omit`` is a 0-based index or an iterable of distinct 0-based indices
    into the *sorted descending* value vector.
    """
    v = _values(lam)
    if isinstance(omit, (int, np.integer)):
        omit = (int(omit),)
    idx = sorted({int(i) for i in omit})
    if any(i < 0 or i >= v.size for i in idx):
        raise DomainError(f"omitted index out of range for n={v.size}")
    keep = np.delete(v, idx)
    if not isinstance(k, (int, np.integer)) or k < 0 or k > keep.size:
        raise DomainError(f"order k={k} out of range with {keep.size} entries left")
    return float(_esp_coeffs(keep, int(k))[int(k)])


def cone_contains(lam, k: int) -> bool:
    """Strict Garding cone test: sigma_j > 0 for every j = 1..k."""
    v = _values(lam)
    if not isinstance(k, (int, np.integer)) or k < 1 or k > v.size:
        raise DomainError(f"cone order k={k} out of range for n={v.size}")
    e = _esp_coeffs(v, int(k))
    return bool(np.all(e[1:] > 0.0))


# ---------------------------------------------------------------------------
# compensated helpers for divided differences
#
# The naive difference grad_p - grad_q cancels to noise once the eigenvalue
# gap falls below ~1e-3 * scale, so the defining formula is evaluated in
# double-double arithmetic instead.  No step below uses the closed-form
# identity the divided differences are later checked against.

_SPLIT = 134217729.0  # 2**27 + 1, Dekker splitting constant for float64


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _two_prod(a, b):
    p = a * b
    ta = _SPLIT * a
    ah = ta - (ta - a)
    al = a - ah
    tb = _SPLIT * b
    bh = tb - (tb - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _quotient_pair_diff(lp, lq, s1):
    """grad_p - grad_q for the quotient operator, accurate to a few ulps.

    Evaluates N = lq^2 - lp^2 + (s1-lp)^2 - (s1-lq)^2 with exact error
    tracking, then returns N / (2 s1^2).
    """
    dp, ep = _two_sum(s1, -lp)
    dq, eq = _two_sum(s1, -lq)
    a_hi, a_lo = _two_prod(lq, lq)
    b_hi, b_lo = _two_prod(lp, lp)
    c_hi, c_lo = _two_prod(dp, dp)
    d_hi, d_lo = _two_prod(dq, dq)
    s_ab, e_ab = _two_sum(a_hi, -b_hi)
    s_cd, e_cd = _two_sum(c_hi, -d_hi)
    s_all, e_all = _two_sum(s_ab, s_cd)
    lo = e_ab + e_cd + e_all + (a_lo - b_lo) + (c_lo - d_lo)
    lo = lo + 2.0 * (dp * ep - dq * eq)
    return (s_all + lo) / (2.0 * s1 * s1)


def _sigma2_pair_diff(lp, lq, s1):
    """grad_p - grad_q for the sigma2 operator ((s1-lp) - (s1-lq)), compensated."""
    dp, ep = _two_sum(s1, -lp)
    dq, eq = _two_sum(s1, -lq)
    hi, e_hi = _two_sum(dp, -dq)
    return hi + (e_hi + ep - eq)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuotientEval:
    """Value and derivatives of one operator at one spectrum.

    ``grad``/``hess`` are with respect to the (sorted) eigenvalues;
    ``divided_diff`` carries (grad_p - grad_q)/(lam_q - lam_p) with analytic
    values filled in at coincident pairs (including the diagonal).
    """

    kind: OperatorKind
    f: float
    grad: np.ndarray
    divided_diff: np.ndarray
    hess: np.ndarray
    sigma1: float
    sigma2: float
    sigma1_without: np.ndarray
    sigma2_without: np.ndarray


def quotient_eval(lam, kind: OperatorKind = OperatorKind.QUOTIENT) -> QuotientEval:
    v = _values(lam)
    n = v.size
    s1 = float(v.sum())
    sq = v * v
    s2 = 0.5 * (s1 * s1 - float(sq.sum()))
    s1w = s1 - v
    s2w = s2 - v * s1w

    if kind is OperatorKind.QUOTIENT:
        if s1 <= 0.0:
            raise ConeViolationError("quotient operator needs sigma1 > 0")
        f = s2 / s1
        ss = s1 * s1
        grad_a = (s1 * s1w - s2) / ss
        grad_b = (s1w * s1w - s2w) / ss
        grad_c = 0.5 * ((float(sq.sum()) - sq) + s1w * s1w) / ss
        scale = _GRAD_AGREE_TOL * (1.0 + float(np.abs(grad_c).max()))
        if (
            float(np.abs(grad_a - grad_c).max()) > scale
            or float(np.abs(grad_b - grad_c).max()) > scale
        ):
            raise ArithmeticError("equivalent gradient formulas disagree")
        grad = grad_c
        dd_value = 1.0 / s1
        pair_diff = _quotient_pair_diff
        # d2f/dlam_p dlam_q = (lam_p + lam_q - s1)/s1^2 + 2 s2/s1^3,
        # minus an extra 1/s1 on the diagonal
        hess = (v[:, None] + v[None, :] - s1) / ss + 2.0 * s2 / (ss * s1)
        hess = hess - np.eye(n) / s1
    elif kind is OperatorKind.SIGMA2:
        f = s2
        grad = s1w.copy()
        dd_value = 1.0
        pair_diff = _sigma2_pair_diff
        hess = np.ones((n, n)) - np.eye(n)
    else:
        raise DomainError(f"unknown operator kind: {kind!r}")

    coincid = COINCIDENCE_RTOL * (1.0 + float(np.abs(v).max()))
    dd = np.full((n, n), dd_value)
    for p in range(n):
        for q in range(p + 1, n):
            gap = v[q] - v[p]
            if abs(gap) >= coincid:
                dd[p, q] = dd[q, p] = pair_diff(v[p], v[q], s1) / gap

    return QuotientEval(
        kind=kind,
        f=float(f),
        grad=grad,
        divided_diff=dd,
        hess=hess,
        sigma1=s1,
        sigma2=float(s2),
        sigma1_without=s1w,
        sigma2_without=s2w,
    )


def matrix_derivative(M, kind: OperatorKind = OperatorKind.QUOTIENT) -> np.ndarray:
    """dF/dM for F = sigma2/sigma1 or sigma2 of a symmetric matrix argument.

    Uses d(sigma2)/dM = trace(M) I - M and the quotient rule; sigma2 of the
    matrix is computed from the trace invariants.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError("matrix_derivative expects a square matrix")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-10 * (1.0 + np.abs(M).max())):
        raise DomainError("matrix_derivative expects a symmetric matrix")
    n = M.shape[0]
    tr = float(np.trace(M))
    d_sigma2 = tr * np.eye(n) - M
    if kind is OperatorKind.SIGMA2:
        return d_sigma2
    if kind is not OperatorKind.QUOTIENT:
        raise DomainError(f"unknown operator kind: {kind!r}")
    if tr <= 0.0:
        raise ConeViolationError("quotient operator needs trace(M) > 0")
    s2 = 0.5 * (tr * tr - float((M * M).sum()))
    return d_sigma2 / tr - (s2 / (tr * tr)) * np.eye(n)


# ---------------------------------------------------------------------------
# deterministic Gamma_2 sampler


def sample_gamma2_array(n: int, seed: int, count: int) -> np.ndarray:
    """Batch sampler for the k=2 Garding cone, shape (count, n), rows sorted
    descending.

    Strata cycle with the sample index: well-interior all-positive rows,
    mixed-sign rows with 1..n-2 negative entries, and near-boundary rows
    where sigma2 is pushed to a small fraction of its all-positive value.
    For n = 2 the cone forces both eigenvalues positive, so the mixed and
    near-boundary strata become ratio-spread positive pairs.  Deterministic
    for fixed (n, seed, count).
    """
    if n < 2:
        raise DomainError("need n >= 2")
    if count < 0:
        raise DomainError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    # draw every random block up-front, in fixed order, so the stream layout
    # never depends on which strata end up used
    pos = np.abs(rng.standard_normal((count, n))) + 0.1
    frac = rng.uniform(0.2, 0.95, count)
    eps = 10.0 ** rng.uniform(-4.0, -2.0, count)
    weights = np.abs(rng.standard_normal((count, max(n - 2, 1)))) + 0.05
    ratio = 10.0 ** rng.uniform(-3.0, 0.0, count)
    ratio_nb = 10.0 ** rng.uniform(-6.0, -4.0, count)
    scale = 10.0 ** rng.uniform(-1.0, 1.0, count)

    lam = pos.copy()
    stratum = np.arange(count) % 3
    if n == 2:
        m1 = stratum == 1
        m2 = stratum == 2
        lam[m1, 1] = lam[m1, 0] * ratio[m1]
        lam[m2, 1] = lam[m2, 0] * ratio_nb[m2]
    else:
        neg_counts = 1 + (np.arange(count) // 3) % max(n - 2, 1)
        for idx in np.flatnonzero(stratum > 0):
            k = int(neg_counts[idx]) if n >= 4 else 1
            head = lam[idx, : n - k]
            s1p = head.sum()
            s2p = 0.5 * (s1p * s1p - (head * head).sum())
            # total negative mass -u * s2p/s1p keeps sigma2 >= (1-u) * s2p
            u = frac[idx] if stratum[idx] == 1 else 1.0 - eps[idx]
            mass = u * s2p / s1p
            w = weights[idx, :k]
            lam[idx, n - k :] = -mass * w / w.sum()

    lam *= scale[:, None]
    lam = -np.sort(-lam, axis=1)

    s1, s2 = _kernels.sigma12(lam)
    if not (np.all(s1 > 0.0) and np.all(s2 > BOUNDARY_SIGMA2_FLOOR * s1 * s1)):
        raise ArithmeticError("sampler produced a row outside its cone contract")
    return lam


def sample_gamma2(n: int, seed: int, count: int) -> list[Spectrum]:
    """Deterministic list of ``count`` spectra strictly inside the k=2 cone."""
    arr = sample_gamma2_array(n, seed, count)
    return [Spectrum(row) for row in arr]
