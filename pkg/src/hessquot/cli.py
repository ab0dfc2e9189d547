"""Command-line front end for batch verification runs.

Four subcommands: ``verify`` (sampled inequality suite), ``minimize``
(constrained-minimizer cross-checks), ``solve`` (manufactured Dirichlet
problems on the analytic presets), and ``doubling`` (nested-ball ratio
study against the committed baseline).  All tabular output is CSV with
repr-formatted floats, so identical configuration and seed reproduce the
bytes exactly; reports use INI-style structured text.

Exit status: 0 when every check passed, 1 on a failed check or a library
error (the error name goes to standard error), 2 for usage problems.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass

from .errors import HessquotError
from .grid import Box, GridFunction
from .harness import (
    TestFunctionParams,
    compare_to_baseline,
    doubling_report,
    doubling_study,
    doubling_to_csv,
    report_to_ini,
)
from .inequalities import reports_to_csv, run_suite
from .lagrange import parse_instances, random_instances, run_batch
from .presets import preset
from .solver import load_config, manufacture, newton_solve
from .symmetric import OperatorKind

_DEFAULTS = {
    "verify": {"samples": 100_000, "dims": (2, 3, 4, 5, 6), "seed": 0},
    "minimize": {"count": 100, "dims": (3,), "seed": 0},
    "solve": {"grid": 33, "kind": "quotient"},
    "doubling": {"grid": 41, "kind": "quotient"},
}

# keys accepted in the [run] section of --config files
_CONFIG_KEYS = {
    "samples": int,
    "dims": str,
    "seed": int,
    "out": str,
    "preset": str,
    "grid": int,
    "kind": str,
    "instances": str,
    "count": int,
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int = 0
    samples: int | None = None
    dims: tuple[int, ...] = ()
    out: str | None = None
    preset: str | None = None
    grid: int | None = None
    kind: str | None = None
    instances: str | None = None
    count: int | None = None
    solver_config: object = None


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}")
    if not dims:
        raise argparse.ArgumentTypeError("empty dimension list")
    return dims


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hessquot",
        description="verification suites and solver runs for sigma2-type operators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="CSV or report output path")
    common.add_argument("--config", default=None, help="INI file with [run]/[solver] sections")

    p = sub.add_parser("verify", parents=[common], help="sampled inequality suite")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--dims", type=_parse_dims, default=None, help="comma list, e.g. 2,3,4")

    p = sub.add_parser("minimize", parents=[common], help="constrained minimizer checks")
    p.add_argument("--dims", type=_parse_dims, default=None)
    p.add_argument("--count", type=int, default=None, help="random instances per dimension")
    p.add_argument("--instances", default=None, help="text file of explicit instances")

    p = sub.add_parser("solve", parents=[common], help="manufactured Dirichlet solve")
    p.add_argument("--preset", default=None)
    p.add_argument("--grid", type=int, default=None, help="points per axis")
    p.add_argument("--kind", choices=("quotient", "sigma2"), default=None)

    p = sub.add_parser("doubling", parents=[common], help="nested-ball ratio study")
    p.add_argument("--preset", default=None, help="single-field report instead of the family")
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--kind", choices=("quotient", "sigma2"), default=None)

    return parser


def _read_run_section(path: str, parser: argparse.ArgumentParser) -> dict:
    cfg = configparser.ConfigParser()
    read = cfg.read(path)
    if not read:
        parser.error(f"config file not found: {path}")
    for section in cfg.sections():
        if section not in ("run", "solver"):
            parser.error(f"unknown config section [{section}]")
    out = {}
    if cfg.has_section("run"):
        for key, raw in cfg.items("run"):
            if key not in _CONFIG_KEYS:
                parser.error(f"unknown config key {key!r}")
            try:
                out[key] = _CONFIG_KEYS[key](raw)
            except ValueError:
                parser.error(f"bad config value for {key!r}: {raw!r}")
        if "dims" in out:
            try:
                out["dims"] = _parse_dims(out["dims"])
            except argparse.ArgumentTypeError as exc:
                parser.error(str(exc))
        if "kind" in out and out["kind"] not in ("quotient", "sigma2"):
            parser.error(f"bad config value for 'kind': {out['kind']!r}")
    return out


def parse_config(argv) -> RunConfig:
    """Flags override config-file values, which override the defaults."""
    parser = build_parser()
    ns = parser.parse_args(argv)

    merged = dict(_DEFAULTS[ns.command])
    solver_config = None
    if ns.config is not None:
        merged.update(_read_run_section(ns.config, parser))
        probe = configparser.ConfigParser()
        probe.read(ns.config)
        if probe.has_section("solver"):
            with open(ns.config) as fp:
                solver_config = load_config(fp)
    for key in _CONFIG_KEYS:
        flag = getattr(ns, key, None)
        if flag is not None:
            merged[key] = flag

    return RunConfig(
        command=ns.command,
        seed=merged.get("seed", 0),
        samples=merged.get("samples"),
        dims=tuple(merged.get("dims", ())),
        out=merged.get("out"),
        preset=merged.get("preset"),
        grid=merged.get("grid"),
        kind=merged.get("kind"),
        instances=merged.get("instances"),
        count=merged.get("count"),
        solver_config=solver_config,
    )


def _open_out(path):
    return open(path, "w", newline="")


def _run_verify(cfg: RunConfig) -> int:
    reports = run_suite(n_list=cfg.dims, samples=cfg.samples, seed=cfg.seed)
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        print(
            f"{status} {rep.name} n={rep.n} samples={rep.samples} "
            f"min_margin={rep.min_margin:.6e}"
        )
    if cfg.out:
        with _open_out(cfg.out) as fp:
            reports_to_csv(reports, fp)
    return 0 if all(r.passed for r in reports) else 1


def _run_minimize(cfg: RunConfig) -> int:
    if cfg.instances:
        with open(cfg.instances) as fp:
            instances = parse_instances(fp.read())
    else:
        instances = []
        for n in cfg.dims:
            instances.extend(random_instances(cfg.count, n, cfg.seed))
    if cfg.out:
        with _open_out(cfg.out) as fp:
            rows = run_batch(instances, fp)
    else:
        rows = run_batch(instances)
    for row in rows:
        status = "PASS" if row["pass"] else "FAIL"
        print(
            f"{status} instance {row['instance_id']} qmin={row['qmin_closed']:.6e} "
            f"kkt_diff={abs(row['qmin_closed'] - row['qmin_kkt']):.2e}"
        )
    return 0 if all(row["pass"] for row in rows) else 1


def _run_solve(cfg: RunConfig) -> int:
    if not cfg.preset:
        print("solve requires --preset", file=sys.stderr)
        return 2
    field, box = preset(cfg.preset)
    kind = OperatorKind(cfg.kind)
    shape = (cfg.grid,) * field.dim
    spec, exact = manufacture(field, box, shape, kind)
    gf, report = newton_solve(spec, cfg.solver_config)
    err = float(abs(gf.values - exact.values).max())
    status = "PASS" if report.converged else "FAIL"
    print(
        f"{status} solve preset={cfg.preset} kind={kind.value} grid={cfg.grid} "
        f"iterations={report.iterations} final_residual={report.residual_norm:.3e} "
        f"sup_error={err:.3e}"
    )
    if cfg.out:
        with _open_out(cfg.out) as fp:
            from .solver import save_field_csv

            save_field_csv(gf, fp)
    return 0 if report.converged else 1


def _run_doubling(cfg: RunConfig) -> int:
    if cfg.preset:
        field, _ = preset(cfg.preset)
        wide = Box((-4.0,) * field.dim, (4.0,) * field.dim)
        gf = GridFunction.from_callable(wide, (cfg.grid,) * field.dim, field.value)
        rep = doubling_report(gf, TestFunctionParams(), kind=OperatorKind(cfg.kind))
        status = "FLAGGED" if rep.flagged else "PASS"
        print(
            f"{status} {cfg.preset} ratio={rep.ratio:.6f} dyn_margin={rep.dyn_margin:.6f} "
            f"semiconvex_modulus={rep.semiconvex_modulus:.6f} w_max={rep.w_max:.6g}"
        )
        if cfg.out:
            with _open_out(cfg.out) as fp:
                report_to_ini(cfg.preset, OperatorKind(cfg.kind), rep, fp)
        return 1 if rep.flagged else 0

    rows = doubling_study(shape=(cfg.grid, cfg.grid))
    outcomes = compare_to_baseline(rows)
    by_id = {(name): rep for name, _, rep in rows}
    ok = True
    for outcome in outcomes:
        rep = by_id[outcome["instance_id"]]
        status = "PASS" if outcome["within"] else "FAIL"
        flag = " FLAGGED" if rep.flagged else ""
        ok = ok and outcome["within"]
        print(
            f"{status} {outcome['instance_id']} ratio={rep.ratio:.6f} "
            f"baseline={outcome.get('baseline_ratio', float('nan')):.6f} "
            f"dyn_margin={rep.dyn_margin:.6f}{flag}"
        )
    if cfg.out:
        with _open_out(cfg.out) as fp:
            doubling_to_csv(rows, fp)
    return 0 if ok else 1


_RUNNERS = {
    "verify": _run_verify,
    "minimize": _run_minimize,
    "solve": _run_solve,
    "doubling": _run_doubling,
}


def run(cfg: RunConfig) -> int:
    try:
        return _RUNNERS[cfg.command](cfg)
    except HessquotError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    cfg = parse_config(argv if argv is not None else sys.argv[1:])
    return run(cfg)
