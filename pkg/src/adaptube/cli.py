"""Command-line driver.

    adaptube list-examples [--n N]
    adaptube verify (--example NAME | --spec FILE) [options]
    adaptube export-spec --example NAME [--n N] [--out FILE]

Exit status: 0 when every check passes, 1 when a check fails, 2 on a
configuration or spec-file error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .dsl import ExprSyntaxError, UnboundIdentifierError
from .flows import DEFAULT_CONFIG, IntegratorConfig
from .registry import get_example, list_examples
from .report import CHECKS, ConfigError, RunConfig, run_verify
from .specfile import SpecError, export_spec, load_manifold_spec

__all__ = ["main", "build_parser", "load_manifold_spec", "list_examples", "run_verify"]

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptube", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ls = sub.add_parser("list-examples", help="list builtin examples with their dimension")
    ls.add_argument("--n", type=int, default=1)

    ve = sub.add_parser("verify", help="run the check suite and write a report")
    src = ve.add_mutually_exclusive_group(required=True)
    src.add_argument("--example", help="builtin example name")
    src.add_argument("--spec", help="path to a JSON manifold spec")
    ve.add_argument("--n", type=int, default=1)
    ve.add_argument("--sigma-max", type=_positive_float, default=None)
    ve.add_argument("--samples", type=int, default=1000)
    ve.add_argument("--seed", type=int, default=0, help="Halton index offset")
    for name in CHECKS:
        ve.add_argument(f"--tol-{name}", type=_positive_float, default=None, metavar="TOL")
    ve.add_argument("--integrator", choices=("rkf45", "rk4"), default=DEFAULT_CONFIG.method)
    ve.add_argument("--rel-tol", type=_positive_float, default=DEFAULT_CONFIG.rel_tol)
    ve.add_argument("--abs-tol", type=_positive_float, default=DEFAULT_CONFIG.abs_tol)
    ve.add_argument("--step", type=_positive_float, default=DEFAULT_CONFIG.step, help="fixed rk4 step")
    ve.add_argument("--out", help="report path (default: stdout)")
    ve.add_argument("--format", choices=("json", "csv"), default="json")
    ve.add_argument("--no-timings", action="store_true", help="omit wall-clock timings from JSON")

    exp = sub.add_parser("export-spec", help="write a builtin example as a JSON spec")
    exp.add_argument("--example", required=True)
    exp.add_argument("--n", type=int, default=1)
    exp.add_argument("--out")
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _verify(args) -> int:
    tolerances = {
        name: getattr(args, "tol_" + name.replace("-", "_"))
        for name in CHECKS
        if getattr(args, "tol_" + name.replace("-", "_")) is not None
    }
    cfg = RunConfig(
        example=args.example,
        spec_path=args.spec,
        n=args.n,
        sigma_max=args.sigma_max,
        samples=args.samples,
        seed=args.seed,
        tolerances=tolerances,
        integrator=IntegratorConfig(
            method=args.integrator, step=args.step, rel_tol=args.rel_tol, abs_tol=args.abs_tol
        ),
        out=args.out,
    )
    report = run_verify(cfg)
    text = report.to_csv() if args.format == "csv" else report.to_json(timings=not args.no_timings)
    _emit(text, args.out)
    for c in report.checks:
        if not c.passed:
            print(f"FAIL {c.name}: {c.error or f'{c.max_residual!r} >= {c.tolerance!r}'}", file=sys.stderr)
    return EXIT_PASS if report.overall_pass else EXIT_FAIL


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        if args.command == "list-examples":
            for name, dim in list_examples(args.n):
                print(f"{name}\t{dim}")
            return EXIT_PASS
        if args.command == "export-spec":
            _emit(export_spec(get_example(args.example).spec(args.n)), args.out)
            return EXIT_PASS
        return _verify(args)
    except (ConfigError, SpecError, ExprSyntaxError, UnboundIdentifierError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
