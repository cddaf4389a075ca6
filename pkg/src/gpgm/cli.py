"""Command-line driver.

Exit codes: 0 success, 1 internal error, 2 input error, 3 an inequality
or POVM axiom was violated numerically.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__, io
from .errors import EnsembleValidationError, InputError, PreconditionError, TruncationError
from .pgm import build_gpgm, validate_povm
from .selftest import run_selftest
from .sweeps import SweepConfig, render_csv, run_sweep

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2, 3

log = logging.getLogger("gpgm")


def _setup_logging() -> None:
    level = os.environ.get("GPGM_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_pgm(args) -> int:
    e = io.load_ensemble(args.ensemble, seed=args.seed)
    p = build_gpgm(e)
    report = validate_povm(p, args.tol)
    doc = io.povm_to_dict(p)
    if args.out:
        Path(args.out).write_text(json.dumps(doc) + "\n")
        print(report.summary())
    else:
        doc["validation"] = {
            "passed": report.passed,
            "min_eigenvalues": report.min_eigenvalues.tolist(),
            "completeness_residual": report.completeness_residual,
            "tol": report.tol,
        }
        print(json.dumps(doc))
    return EXIT_OK if report.passed else EXIT_VIOLATION


def _sweep(kind: str, args) -> int:
    if not args.config:
        raise InputError("--config is required")
    cfg = SweepConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out or cfg.out
    t0 = time.perf_counter()
    result = run_sweep(kind, cfg, jobs=args.jobs)
    _write(render_csv(result, f"{kind}-sweep", cfg), out)
    for problem in result.problems:
        log.error(problem)
    print(f"{kind}-sweep: {cfg.num_instances} instances, {len(result.rows)} rows, "
          f"min_slack={result.min_slack:.3e}, violations={len(result.problems)}, "
          f"{time.perf_counter() - t0:.1f}s", file=sys.stderr if not out else sys.stdout)
    return EXIT_VIOLATION if result.problems else EXIT_OK


def cmd_selftest(args) -> int:
    t0 = time.perf_counter()
    results = run_selftest(seed=args.seed or 0)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    print(f"selftest: {sum(r.passed for r in results)}/{len(results)} suites passed "
          f"in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON sweep config")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    parser = argparse.ArgumentParser(prog="gpgm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pgm", parents=[common], help="build and validate the PGM of an ensemble file")
    p.add_argument("ensemble", help="ensemble JSON file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_pgm)

    p = sub.add_parser("bk-sweep", parents=[common], help="square-root bound sweep")
    p.set_defaults(func=lambda a: _sweep("bk", a))
    p = sub.add_parser("mse-sweep", parents=[common], help="factor-two MSE sweep")
    p.set_defaults(func=lambda a: _sweep("mse", a))
    p = sub.add_parser("selftest", parents=[common], help="run built-in invariant suites")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, EnsembleValidationError, PreconditionError, TruncationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
