"""Tests for the damped Newton solver and manufactured problems."""

import io

import numpy as np
import pytest

from hessquot import DomainError, OperatorKind
from hessquot.grid import Box, GridFunction
from hessquot.presets import preset
from hessquot.solver import (
    ProblemSpec,
    SolveReport,
    SolverConfig,
    _assemble_jacobian,
    _Discretization,
    _operator_coeffs,
    convergence_study,
    load_config,
    manufacture,
    newton_solve,
    save_field_csv,
    save_report,
)


def _solve_preset(name, shape, kind=OperatorKind.QUOTIENT, **cfg):
    fld, box = preset(name)
    spec, exact = manufacture(fld, box, shape, kind)
    gf, report = newton_solve(spec, SolverConfig(**cfg) if cfg else None)
    return gf, report, exact


class TestQuadraticRecovery:
    @pytest.mark.parametrize("kind", list(OperatorKind))
    def test_2d(self, kind):
        gf, report, exact = _solve_preset("quadratic2d", (33, 33), kind)
        assert report.converged and report.iterations <= 3
        assert np.abs(gf.values - exact.values).max() <= 1e-10

    @pytest.mark.parametrize("kind", list(OperatorKind))
    def test_3d(self, kind):
        gf, report, exact = _solve_preset("quadratic3d", (17, 17, 17), kind)
        assert report.converged and report.iterations <= 3
        assert np.abs(gf.values - exact.values).max() <= 1e-10

    def test_anisotropic(self):
        gf, report, exact = _solve_preset("aniso3d", (17, 17, 17))
        assert report.converged
        assert np.abs(gf.values - exact.values).max() <= 1e-10


class TestJacobian:
    @pytest.mark.parametrize(
        "name,shape,kind",
        [
            ("bump2d", (21, 21), OperatorKind.QUOTIENT),
            ("bump2d", (21, 21), OperatorKind.SIGMA2),
            ("bump3d", (11, 11, 11), OperatorKind.QUOTIENT),
        ],
    )
    def test_directional_derivative(self, name, shape, kind):
        fld, box = preset(name)
        spec, exact = manufacture(fld, box, shape, kind)
        disc = _Discretization(spec)
        rng = np.random.default_rng(3)
        u = exact.values + 1e-3 * rng.standard_normal(exact.values.shape)
        isl = tuple(slice(1, -1) for _ in range(box.dim))
        mask = np.ones(spec.shape, dtype=bool)
        mask[isl] = False
        u[mask] = exact.values[mask]

        r0, s1, s2, comps, ok = disc.state(u)
        assert ok
        coeffs = _operator_coeffs(kind, comps, s1, s2)
        jac = _assemble_jacobian(disc, coeffs, np.full(disc.interior_shape, 0.5))
        v = rng.standard_normal(disc.interior_shape)
        eps = 1e-6
        up, um = u.copy(), u.copy()
        up[isl] = u[isl] + eps * v
        um[isl] = u[isl] - eps * v
        fd = (disc.state(up)[0] - disc.state(um)[0]) / (2.0 * eps)
        an = (jac @ v.ravel()).reshape(disc.interior_shape)
        rel = np.abs(fd - an).max() / (1.0 + np.abs(an).max())
        assert rel <= 1e-4


class TestManufacturedConvergence:
    @pytest.mark.parametrize("kind", list(OperatorKind))
    def test_orders_2d(self, kind):
        fld, box = preset("bump2d")
        rows = convergence_study(fld, box, [(17, 17), (33, 33), (65, 65)], kind)
        assert all(r["converged"] for r in rows)
        assert 1.8 <= rows[-1]["order"] <= 2.2

    def test_orders_3d(self):
        fld, box = preset("bump3d")
        rows = convergence_study(fld, box, [(9, 9, 9), (17, 17, 17), (33, 33, 33)])
        assert all(r["converged"] for r in rows)
        assert 1.8 <= rows[-1]["order"] <= 2.2

    def test_errors_decrease(self):
        fld, box = preset("bump2d")
        rows = convergence_study(fld, box, [(17, 17), (33, 33)], OperatorKind.SIGMA2)
        assert rows[1]["error"] < rows[0]["error"]


class TestFailureModes:
    def test_psi_nonpositive_rejected(self):
        box = Box(lo=(-1.0, -1.0), hi=(1.0, 1.0))
        spec = ProblemSpec(
            kind=OperatorKind.QUOTIENT,
            box=box,
            shape=(9, 9),
            psi=lambda coords, u: np.full(np.shape(u), -1.0),
            psi_u=lambda coords, u: np.zeros(np.shape(u)),
            boundary=lambda x, y: 0.5 * (x * x + y * y),
        )
        with pytest.raises(DomainError):
            newton_solve(spec)

    def test_max_iter_reports_failure(self):
        fld, box = preset("bump2d")
        spec, _ = manufacture(fld, box, (33, 33))
        gf, report = newton_solve(spec, SolverConfig(max_iter=1))
        assert not report.converged
        assert report.iterations == 1
        assert "max_iter" in report.message
        assert isinstance(gf, GridFunction)

    def test_bad_initial_guess_reports_cone_exit(self):
        fld, box = preset("quadratic2d")
        spec, exact = manufacture(fld, box, (17, 17))
        x, y = np.meshgrid(*[np.linspace(-1, 1, 17)] * 2, indexing="ij")
        u0 = 5.0 * (x * x - y * y)  # saddle: sigma2 < 0 everywhere
        u0[0, :], u0[-1, :] = exact.values[0, :], exact.values[-1, :]
        u0[:, 0], u0[:, -1] = exact.values[:, 0], exact.values[:, -1]
        gf, report = newton_solve(spec, u0=u0)
        assert not report.converged
        assert "cone" in report.message

    def test_initial_guess_shape_mismatch(self):
        fld, box = preset("quadratic2d")
        spec, _ = manufacture(fld, box, (17, 17))
        with pytest.raises(DomainError):
            newton_solve(spec, u0=np.zeros((9, 9)))

    def test_manufacture_validation(self):
        fld, box = preset("quadratic2d")
        with pytest.raises(DomainError):
            manufacture(fld, box, (17, 17), u_coeff=-1.0)
        fld3, box3 = preset("quadratic3d")
        with pytest.raises(DomainError):
            manufacture(fld3, box, (17, 17))

    def test_problem_spec_validation(self):
        box = Box(lo=(-1.0, -1.0), hi=(1.0, 1.0))
        with pytest.raises(DomainError):
            ProblemSpec(
                kind=OperatorKind.QUOTIENT,
                box=box,
                shape=(9, 9, 9),
                psi=None,
                psi_u=None,
                boundary=None,
            )
        with pytest.raises(DomainError):
            ProblemSpec(
                kind=OperatorKind.QUOTIENT,
                box=box,
                shape=(4, 4),
                psi=None,
                psi_u=None,
                boundary=None,
            )


class TestSolveDeterminism:
    def test_repeat_solves_identical(self):
        a, _, _ = _solve_preset("bump2d", (33, 33))
        b, _, _ = _solve_preset("bump2d", (33, 33))
        assert np.array_equal(a.values, b.values)


class TestConfigIO:
    def test_load_config(self):
        cfg = load_config(io.StringIO("[solver]\nmax_iter = 12\nresidual_tol = 1e-8\n"))
        assert cfg.max_iter == 12
        assert cfg.residual_tol == 1e-8
        assert cfg.armijo == SolverConfig().armijo

    def test_unknown_key_rejected(self):
        with pytest.raises(DomainError):
            load_config(io.StringIO("[solver]\nspeed = warp\n"))

    def test_bad_value_rejected(self):
        with pytest.raises(DomainError):
            load_config(io.StringIO("[solver]\nmax_iter = soon\n"))

    def test_missing_section_rejected(self):
        with pytest.raises(DomainError):
            load_config(io.StringIO("[other]\nmax_iter = 3\n"))

    def test_save_report_roundtrip(self):
        import configparser

        report = SolveReport(
            converged=True,
            iterations=4,
            residual_norm=3.2e-12,
            message="converged",
            history=(1.0, 0.1, 3.2e-12),
        )
        buf = io.StringIO()
        save_report(report, buf, extra={"preset": "bump2d"})
        parser = configparser.ConfigParser()
        parser.read_string(buf.getvalue())
        assert parser["report"]["converged"] == "true"
        assert int(parser["report"]["iterations"]) == 4
        assert float(parser["report"]["residual_norm"]) == 3.2e-12
        assert parser["problem"]["preset"] == "bump2d"

    def test_save_field_csv(self):
        box = Box(lo=(0.0, 0.0), hi=(1.0, 1.0))
        gf = GridFunction.from_callable(box, (5, 5), lambda x, y: x + 2.0 * y)
        buf = io.StringIO()
        save_field_csv(gf, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "x,y,u"
        assert len(lines) == 1 + 25
        x, y, u = (float(t) for t in lines[1].split(","))
        assert (x, y, u) == (0.0, 0.0, 0.0)
        x, y, u = (float(t) for t in lines[-1].split(","))
        assert (x, y, u) == (1.0, 1.0, 3.0)
