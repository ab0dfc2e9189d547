"""Tests for the inequality margins, the gain ratio, and the check suite."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessquot import (
    ConeViolationError,
    DegenerateSpectrumError,
    DomainError,
    OperatorKind,
    concavity_gain,
    concavity_quadratic,
    grad_bounds_margins,
    grad_floor_margin,
    reports_to_csv,
    run_suite,
    sample_gamma2_array,
    semiconvexity_constant,
    tail_trace_bound_margin,
)
from hessquot.inequalities import CheckReport

EXPECTED_CHECKS = {
    "grad_floor",
    "tail_trace_bound",
    "grad_head_upper",
    "grad_tail_lower",
    "grad_tail_upper",
    "cs_gap_nonneg",
    "sum_closed_forms_quotient",
    "gain_expansion_quotient",
    "sum_closed_forms_sigma2",
    "gain_expansion_sigma2",
    "grad_threshold",
    "concavity_quadratic",
    "divided_diff_quotient",
    "divided_diff_sigma2",
    "threshold_identity",
}


class TestMarginFunctions:
    def test_grad_floor_worked(self):
        assert grad_floor_margin([2.0, 1.0, 1.0]) == pytest.approx(29.0 / 72.0, rel=1e-14)

    def test_grad_floor_isotropic(self):
        assert grad_floor_margin([1.0, 1.0, 1.0]) == pytest.approx(1.0 / 9.0, rel=1e-14)

    def test_tail_trace_worked(self):
        assert tail_trace_bound_margin([2.0, 1.0, 1.0]) == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_tail_trace_equality_isotropic(self):
        # the intermediate trace bound is tight on constant spectra
        assert abs(tail_trace_bound_margin([1.0, 1.0, 1.0])) < 1e-15

    def test_tail_trace_equality_n2(self):
        # for n = 2 the bound degenerates to an identity
        assert abs(tail_trace_bound_margin([3.0, 0.5])) < 1e-14

    def test_grad_bounds_worked(self):
        out = grad_bounds_margins([2.0, 1.0, 1.0])
        tail_lo = 7.0 / 16.0 - (1.0 - 1.0 / math.sqrt(2.0) - 0.3125)
        expect = [1.0 / 6.0, tail_lo, tail_lo, 7.0 / 12.0, 7.0 / 12.0]
        assert out == pytest.approx(expect, rel=1e-12)
        assert out[1] == pytest.approx(0.45710678118654746, rel=1e-12)

    def test_cone_required(self):
        for bad in ([1.0, -2.0], [-1.0, -1.0], [1.0, 0.0, 0.0]):
            with pytest.raises(ConeViolationError):
                grad_floor_margin(bad)
            with pytest.raises(ConeViolationError):
                tail_trace_bound_margin(bad)
            with pytest.raises(ConeViolationError):
                grad_bounds_margins(bad)

    def test_margins_positive_on_sample(self):
        lam = sample_gamma2_array(4, seed=5, count=200)
        for row in lam:
            assert grad_floor_margin(row) > -1e-12
            assert tail_trace_bound_margin(row) > -1e-12
            assert grad_bounds_margins(row).min() > -1e-12


class TestSemiconvexityConstant:
    def test_frozen_values(self):
        assert semiconvexity_constant(2) == pytest.approx((math.sqrt(13.0) - 1.0) / 4.0, rel=0)
        assert semiconvexity_constant(3) == pytest.approx((math.sqrt(7.0) - 1.0) / 3.0, rel=1e-15)
        # n = 4 is the exact rational case
        assert semiconvexity_constant(4) == 0.5

    def test_identity_small_n(self):
        for n in range(2, 17):
            cn = semiconvexity_constant(n)
            alt = (n + 1.0 + math.sqrt(3.0 * n * n + 1.0)) / (2.0 * n)
            assert abs((1.0 + cn) - alt) <= 1e-14

    def test_monotone_decreasing(self):
        vals = [semiconvexity_constant(n) for n in range(2, 30)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_rejects_bad_n(self):
        with pytest.raises(DomainError):
            semiconvexity_constant(1)
        with pytest.raises(DomainError):
            semiconvexity_constant(2.0)


class TestConcavityQuadratic:
    def test_root_at_threshold(self):
        for n in range(2, 17):
            cn = semiconvexity_constant(n)
            assert abs(concavity_quadratic(1.0 + cn, n)) <= 1e-10

    def test_sign_change(self):
        cn = semiconvexity_constant(3)
        assert concavity_quadratic(1.0 + cn - 0.1, 3) > 0.0
        assert concavity_quadratic(1.0 + cn + 0.1, 3) < 0.0

    def test_vectorized(self):
        out = concavity_quadratic(np.array([0.0, 1.0]), 3)
        assert out.shape == (2,)
        assert out[0] == pytest.approx(2.0)
        assert out[1] == pytest.approx(2.0 + 8.0 - 6.0)

    def test_kind_agnostic_values(self):
        # both operators share the quadratic once normalized
        a = concavity_quadratic(0.7, 4, OperatorKind.QUOTIENT)
        b = concavity_quadratic(0.7, 4, OperatorKind.SIGMA2)
        assert a == b

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            concavity_quadratic(0.5, 3, "nope")

    @given(st.integers(min_value=2, max_value=12), st.floats(min_value=0.0, max_value=1.0))
    def test_positive_below_threshold(self, n, frac):
        # concave quadratic with one negative root: positive on [0, 1+c_n)
        fi = frac * (1.0 + semiconvexity_constant(n)) * (1.0 - 1e-9)
        assert concavity_quadratic(fi, n) > -1e-12


def brute_gain(grad, index):
    """Gain ratio recomputed from the raw weighted vector."""
    entries = list(grad) + [grad[index], grad[index]]
    r = sum(x * x for x in entries)
    s = sum(entries)
    gap = len(entries) * r - s * s
    return r, s, gap, 3.0 * r / gap


class TestConcavityGain:
    def test_worked_quotient(self):
        g = concavity_gain([2.0, 1.0, 1.0], 0, OperatorKind.QUOTIENT)
        assert g.quad_sum == pytest.approx(125.0 / 256.0, rel=1e-14)
        assert g.lin_sum == pytest.approx(23.0 / 16.0, rel=1e-14)
        assert g.cs_gap == pytest.approx(0.375, rel=1e-13)
        assert g.gain == pytest.approx(3.90625, rel=1e-12)
        assert g.gain_expansion == pytest.approx(g.gain - 1.0, rel=1e-12)
        assert g.psi == pytest.approx(1.25, rel=1e-15)
        assert g.index == 0 and g.kind is OperatorKind.QUOTIENT

    def test_worked_sigma2(self):
        g = concavity_gain([2.0, 1.0, 1.0], 0, OperatorKind.SIGMA2)
        assert g.quad_sum == pytest.approx(30.0, rel=1e-14)
        assert g.lin_sum == pytest.approx(12.0, rel=1e-14)
        assert g.cs_gap == pytest.approx(6.0, rel=1e-13)
        assert g.gain == pytest.approx(15.0, rel=1e-12)
        assert g.gain_expansion == pytest.approx(14.0, rel=1e-12)
        assert g.psi == pytest.approx(5.0, rel=1e-15)

    def test_matches_brute_force(self):
        from hessquot import quotient_eval

        lam = sample_gamma2_array(5, seed=13, count=60)
        for row in lam:
            for kind in OperatorKind:
                ev = quotient_eval(row, kind)
                for i in range(5):
                    r, s, gap, gain = brute_gain(ev.grad, i)
                    if gap < 1e-10 * (1.0 + r):
                        continue
                    g = concavity_gain(row, i, kind)
                    assert g.quad_sum == pytest.approx(r, rel=1e-13)
                    assert g.lin_sum == pytest.approx(s, rel=1e-13)
                    assert g.gain == pytest.approx(gain, rel=1e-11)

    def test_expansion_agreement_random(self):
        for n in (2, 3, 4, 6):
            lam = sample_gamma2_array(n, seed=100 + n, count=150)
            for row in lam:
                for kind in OperatorKind:
                    for i in range(n):
                        try:
                            g = concavity_gain(row, i, kind)
                        except DegenerateSpectrumError:
                            continue
                        if g.cs_gap < 1e-6 * (1.0 + g.quad_sum):
                            continue
                        rel = abs(g.gain_expansion - (g.gain - 1.0)) / (1.0 + abs(g.gain - 1.0))
                        assert rel <= 1e-10

    def test_degenerate_isotropic(self):
        with pytest.raises(DegenerateSpectrumError):
            concavity_gain([1.0, 1.0, 1.0], 0)
        with pytest.raises(DegenerateSpectrumError):
            concavity_gain([5.0, 5.0, 5.0, 5.0], 2, OperatorKind.SIGMA2)

    def test_index_validation(self):
        with pytest.raises(DomainError):
            concavity_gain([2.0, 1.0, 1.0], 3)
        with pytest.raises(DomainError):
            concavity_gain([2.0, 1.0, 1.0], -1)

    def test_gain_at_least_one(self):
        # Cauchy-Schwarz forces (n+2) R >= S^2, and 3R > gap needs checking:
        # the suite's gain is bounded below by 3/(n+2) generically, and by 1
        # exactly when the expansion margin holds; sample and confirm > 1
        for n in (2, 3, 5):
            lam = sample_gamma2_array(n, seed=77 + n, count=100)
            for row in lam:
                try:
                    g = concavity_gain(row, n - 1, OperatorKind.QUOTIENT)
                except DegenerateSpectrumError:
                    continue
                assert g.gain > 1.0

    @given(st.floats(min_value=0.1, max_value=10.0))
    @settings(max_examples=40, deadline=None)
    def test_gain_scale_invariant(self, a):
        base = np.array([3.0, 1.5, 0.6])
        g0 = concavity_gain(base, 1, OperatorKind.QUOTIENT)
        g1 = concavity_gain(a * base, 1, OperatorKind.QUOTIENT)
        assert g1.gain == pytest.approx(g0.gain, rel=1e-10)
        # sigma2 gradients scale linearly but the ratio is scale free too
        h0 = concavity_gain(base, 1, OperatorKind.SIGMA2)
        h1 = concavity_gain(a * base, 1, OperatorKind.SIGMA2)
        assert h1.gain == pytest.approx(h0.gain, rel=1e-10)


class TestRunSuite:
    def test_small_suite_passes(self):
        reports = run_suite(n_list=(2, 3, 4), samples=1500, seed=3)
        assert {r.name for r in reports} == EXPECTED_CHECKS
        assert len(reports) == len(EXPECTED_CHECKS) * 3
        for r in reports:
            assert isinstance(r, CheckReport)
            assert r.passed, f"{r.name} n={r.n} margin={r.min_margin}"
            assert r.min_margin >= -r.tol

    def test_worst_input_in_cone(self):
        from hessquot import cone_contains

        reports = run_suite(n_list=(3,), samples=800, seed=6)
        for r in reports:
            if r.worst_input is not None:
                assert r.worst_input.shape == (3,)
                assert cone_contains(r.worst_input, 2)

    def test_identity_rows_have_no_input(self):
        reports = run_suite(n_list=(2,), samples=64, seed=0)
        ident = [r for r in reports if r.name == "threshold_identity"]
        assert len(ident) == 1
        assert ident[0].worst_input is None and ident[0].samples == 0

    def test_deterministic_and_worker_independent(self):
        def render(reports):
            buf = io.StringIO()
            reports_to_csv(reports, buf)
            return buf.getvalue()

        a = render(run_suite(n_list=(2, 4), samples=2000, seed=11, workers=1))
        b = render(run_suite(n_list=(2, 4), samples=2000, seed=11, workers=1))
        c = render(run_suite(n_list=(2, 4), samples=2000, seed=11, workers=3))
        assert a == b == c

    def test_seed_changes_output(self):
        r1 = run_suite(n_list=(3,), samples=500, seed=1)
        r2 = run_suite(n_list=(3,), samples=500, seed=2)
        m1 = [r.min_margin for r in r1 if r.samples]
        m2 = [r.min_margin for r in r2 if r.samples]
        assert m1 != m2

    def test_rejects_bad_samples(self):
        with pytest.raises(DomainError):
            run_suite(n_list=(2,), samples=0, seed=0)

    def test_csv_format(self):
        reports = run_suite(n_list=(2,), samples=100, seed=0)
        buf = io.StringIO()
        reports_to_csv(reports, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "name,n,samples,min_margin,passed,worst_input"
        assert len(lines) == 1 + len(reports)
        for line in lines[1:]:
            fields = line.split(",")
            assert fields[4] in ("true", "false")
            # margins round trip exactly through repr
            assert float(fields[3]) == float(fields[3])
