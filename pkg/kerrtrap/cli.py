"""Command line interface.

::

    kerrtrap design --preset paper-sec3
    kerrtrap run --config scenario.toml --format json --format plot-data
    kerrtrap sweep --config scenario.toml --sweep axes.toml --workers 4
    kerrtrap validate --config scenario.toml --strict-constraints
    kerrtrap oracle-check

Exit codes: 0 on success, 2 on configuration errors, 3 on constraint
failures with ``--strict-constraints``, 4 on numerical failures.
"""

import argparse
import logging
import sys
from dataclasses import replace

from giving import given

from .checks import oracle_checks
from .emit import emit, emit_sweep
from .runner import (
    EXIT_CONFIG,
    EXIT_CONSTRAINTS,
    EXIT_NUMERICAL,
    EXIT_OK,
    exit_code_for,
    run,
    sweep,
)
from .scenario import (
    DEFAULT_PRESET,
    load_scenario,
    parse_sweep,
    scenario_from_dict,
)
from .utils import ConfigError, NumericalError
from .version import version

logger = logging.getLogger(__name__)


def _parser():
    parser = argparse.ArgumentParser(
        prog="kerrtrap",
        description="Cross-phase modulation of trapped and slow polaritons.",
    )
    parser.add_argument("--version", action="version", version=version)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", default=None, help="Parameter preset.")
    common.add_argument("--config", default=None, help="TOML scenario file.")
    common.add_argument(
        "--out-dir",
        default=None,
        help="Output directory (default: $KERRTRAP_OUT_DIR or kerrtrap-out).",
    )
    common.add_argument(
        "--format",
        action="append",
        choices=["json", "csv", "plot-data"],
        help="Output format; may be repeated.",
    )
    common.add_argument(
        "--strict-constraints",
        action="store_true",
        help="Exit with code 3 when a validity constraint fails.",
    )
    common.add_argument("--nz", type=int, default=None, help="Grid cells.")
    common.add_argument("--dt", type=float, default=None, help="Time step.")
    common.add_argument(
        "--lax", action="store_true", help="Warn about unknown keys."
    )
    common.add_argument(
        "-v", "--verbose", action="store_true", help="Log progress events."
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser(
        "design", parents=[common], help="Derived rates and constraints."
    )
    sub.add_parser("run", parents=[common], help="Run a scenario.")
    sw = sub.add_parser("sweep", parents=[common], help="Parameter sweep.")
    sw.add_argument("--sweep", required=True, help="TOML sweep file.")
    sw.add_argument("--workers", type=int, default=None)
    sub.add_parser(
        "validate", parents=[common], help="Check a scenario without running."
    )
    sub.add_parser(
        "oracle-check", parents=[common], help="Check the integrators."
    )
    return parser


def _scenario(args, mode=None):
    if args.config:
        scenario = load_scenario(args.config, preset=args.preset, lax=args.lax)
    else:
        scenario = scenario_from_dict({}, preset=args.preset or DEFAULT_PRESET)
    if mode is not None:
        scenario = scenario.replace(mode=mode)
    quantum = scenario.mode == "quantum"
    if args.nz is not None:
        if quantum:
            q = replace(scenario.quantum, n_cells=args.nz)
            scenario = scenario.replace(quantum=q)
        else:
            grid = replace(scenario.grid, n_cells=args.nz)
            scenario = scenario.replace(grid=grid)
    if args.dt is not None:
        if quantum:
            q = replace(scenario.quantum, dt=args.dt)
            scenario = scenario.replace(quantum=q)
        else:
            integrator = replace(scenario.integrator, dt=args.dt)
            scenario = scenario.replace(integrator=integrator)
    return scenario


def _summary(report):
    print(f"mode: {report.scenario.mode}")
    for name, value in report.observables.items():
        print(f"{name}: {value!r}")
    for c in report.constraints:
        status = "ok" if c.passed else ("warn" if c.advisory else "FAIL")
        print(f"  [{status}] {c.name}: {c.description} (margin {c.margin})")


def _formats(args, scenario):
    return args.format or list(scenario.outputs.formats)


def cmd_design(args):
    scenario = _scenario(args, mode="design-only")
    report = run(scenario)
    _summary(report)
    if args.out_dir or args.format:
        for path in emit(report, _formats(args, scenario), args.out_dir):
            print(f"wrote {path}")
    return report.exit_code(args.strict_constraints)


def cmd_run(args):
    scenario = _scenario(args)
    report = run(scenario)
    _summary(report)
    for path in emit(report, _formats(args, scenario), args.out_dir):
        print(f"wrote {path}")
    return report.exit_code(args.strict_constraints)


def cmd_sweep(args):
    scenario = _scenario(args)
    with open(args.sweep, encoding="utf-8") as f:
        spec = parse_sweep(f.read(), lax=args.lax)
    if args.workers is not None:
        spec = replace(spec, workers=args.workers)
    table = sweep(scenario, spec)
    failed = sum(1 for row in table["rows"] if row[-1])
    print(f"{len(table['rows'])} cells, {failed} failed")
    print(f"wrote {emit_sweep(table, args.out_dir)}")
    if args.strict_constraints and any(
        row[-2] is not True for row in table["rows"]
    ):
        return EXIT_CONSTRAINTS
    return EXIT_OK


def cmd_validate(args):
    scenario = _scenario(args, mode="design-only")
    report = run(scenario)
    failed = report.constraints.failed
    if failed:
        print(f"constraints failed: {', '.join(failed)}")
    else:
        print("ok")
    return report.exit_code(args.strict_constraints)


def cmd_oracle_check(args):
    results = oracle_checks()
    for check in results:
        status = "ok" if check.passed else "FAIL"
        print(
            f"[{status}] {check.name}: error {check.error:.3g}"
            f" (tolerance {check.tolerance:.0e})"
        )
    return EXIT_OK if all(c.passed for c in results) else EXIT_NUMERICAL


COMMANDS = {
    "design": cmd_design,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "oracle-check": cmd_oracle_check,
}


def _log_event(data):
    data = dict(data)
    event = data.pop("event")
    logger.info("%s %s", event, data)


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO)
        logging.captureWarnings(True)
    try:
        with given() as gv:
            if args.verbose:
                gv.where("event").subscribe(_log_event)
            return COMMANDS[args.command](args)
    except (ConfigError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
