"""Command-line front end.

Subcommands:

* ``classify``: threshold classification of a one-particle model file.
* ``fiber-scan``: discrete spectra of two-particle fibers over a set of ``k``.
* ``appendix-b`` (alias ``coexistence``): the built-in coexistence example.

Exit status: 0 on success, 1 on validation, configuration or identity failures,
2 when a classification is indeterminate, 3 when a scan row failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING

from pydantic import ValidationError

from sill import __version__
from sill.birman_schwinger import classify_threshold
from sill.coexistence import coexistence_report
from sill.config import RunConfig, Tolerances, parse_k_grid, trailing_schedule
from sill.errors import ConsistencyError, GridError, ModelValidationError, SillError
from sill.io import load_model, write_json, write_scan_csv
from sill.torus_grid import make_grid
from sill.two_particle import bound_state_count_check, fiber_scan

if TYPE_CHECKING:
    from collections.abc import Sequence

__all__ = [
    "EXIT_FAILED_ROWS",
    "EXIT_INDETERMINATE",
    "EXIT_INVALID",
    "EXIT_OK",
    "build_config",
    "build_parser",
    "cmd_appendix_b",
    "cmd_classify",
    "cmd_fiber_scan",
    "main",
]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INDETERMINATE = 2
EXIT_FAILED_ROWS = 3

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
DEFAULT_CONSTANT_SCHEDULE = (64, 128, 256)
DEFAULT_K_GRID = "3x3x3"


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        message = f"expected comma-separated integers, got {text!r}"
        raise argparse.ArgumentTypeError(message) from exc


def _k_point(text: str) -> tuple[float, float, float]:
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected k1,k2,k3, got {text!r}") from exc
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected three components, got {text!r}")
    return (values[0], values[1], values[2])


def _tolerance_override(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} needs a number") from exc


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", type=Path, help="model file (JSON)")
    parser.add_argument("--grid-n", type=int, default=16, help="operator grid points per axis")
    parser.add_argument("--schedule", type=_int_list, help="resolutions, e.g. 8,12,16")
    parser.add_argument(
        "--probe-schedule", type=_int_list, default=(32, 64, 128), help="L2 probe resolutions"
    )
    parser.add_argument("--out", type=Path, help="output file (default: standard output)")
    parser.add_argument("--margin", type=float, help="reporting margin below the band edge")
    points = parser.add_mutually_exclusive_group()
    points.add_argument("--k-grid", help="quasi-momentum grid AxBxC")
    points.add_argument(
        "--k", type=_k_point, action="append", help="quasi-momentum k1,k2,k3 (repeatable)"
    )
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers")
    parser.add_argument("--max-n", type=int, help="cap on every resolution")
    parser.add_argument(
        "--tolerance",
        type=_tolerance_override,
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="override a numeric gate (repeatable)",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sill", description="Threshold spectra of lattice Schroedinger operators."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    classify = commands.add_parser("classify", help="classify the threshold of a model")
    _add_common(classify)
    classify.set_defaults(handler=cmd_classify)

    scan = commands.add_parser("fiber-scan", help="scan two-particle fibers over k")
    _add_common(scan)
    scan.add_argument(
        "--counts", action="store_true", help="also check the bound-state count against h(0)"
    )
    scan.set_defaults(handler=cmd_fiber_scan)

    example = commands.add_parser(
        "appendix-b", aliases=["coexistence"], help="reproduce the coexistence example"
    )
    _add_common(example)
    example.set_defaults(handler=cmd_appendix_b)
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    """Validate parsed arguments into a :class:`RunConfig`.

    Raises:
        ValidationError: If an option is out of range.
        ValueError: If the k-grid specification is malformed.
    """
    tolerances = Tolerances(**dict(args.tolerance))
    k_list: tuple[tuple[float, float, float], ...] = ()
    if args.k_grid:
        k_list = parse_k_grid(args.k_grid)
    elif args.k:
        k_list = tuple(args.k)
    return RunConfig(
        model_path=args.model,
        grid_n=args.grid_n,
        n_schedule=args.schedule,
        probe_schedule=args.probe_schedule,
        k_list=k_list,
        output_path=args.out,
        margin=args.margin,
        jobs=args.jobs,
        max_n=args.max_n,
        tolerances=tolerances,
    )


def _require_model(config: RunConfig) -> Path:
    if config.model_path is None:
        raise ModelValidationError("this command needs --model PATH")
    return config.model_path


def cmd_classify(config: RunConfig) -> int:
    """Classify the threshold of ``--model`` and write the report as JSON."""
    model = load_model(_require_model(config)).one_particle(tolerances=config.tolerances)
    schedule = config.schedule_or(trailing_schedule(config.effective_grid_n))
    report = classify_threshold(
        model,
        schedule,
        probe_schedule=config.probe_schedule,
        tolerances=config.tolerances,
    )
    if config.output_path is None:
        sys.stdout.write(report.to_json() + "\n")
    else:
        write_json(report.to_dict(), config.output_path)
    logger.info("threshold case %s (%s)", report.case.value, report.status.value)
    return EXIT_OK if report.determinate else EXIT_INDETERMINATE


def cmd_fiber_scan(config: RunConfig, *, counts: bool = False) -> int:
    """Scan fibers over the configured ``k`` and write one CSV row per ``k``."""
    model = load_model(_require_model(config)).two_particle(tolerances=config.tolerances)
    grid = make_grid(config.effective_grid_n)
    k_list = config.k_list or parse_k_grid(DEFAULT_K_GRID)
    rows = fiber_scan(
        model,
        k_list,
        grid,
        margin=config.margin,
        jobs=config.jobs,
        tolerances=config.tolerances,
    )

    if config.output_path is None:
        write_scan_csv(rows, sys.stdout)
    else:
        with config.output_path.open("w", encoding="utf-8", newline="") as handle:
            write_scan_csv(rows, handle)

    failed = sum(1 for row in rows if row.failed)
    populated = sum(1 for row in rows if not row.failed and row.n_below > 0)
    sys.stderr.write(
        f"{populated} of {len(rows)} k-points have a non-empty discrete spectrum"
        f"{f', {failed} FAILED' if failed else ''}\n"
    )
    if counts:
        entries = bound_state_count_check(
            model, k_list, grid, margin=config.margin, tolerances=config.tolerances
        )
        checked = [entry for entry in entries if entry.satisfied is not None]
        satisfied = sum(1 for entry in checked if entry.satisfied)
        d = entries[0].d if entries else 0
        sys.stderr.write(f"bound-state count >= max(1, d={d}) at {satisfied} of {len(checked)}\n")
    return EXIT_FAILED_ROWS if failed else EXIT_OK


def cmd_appendix_b(config: RunConfig) -> int:
    """Run the coexistence example end to end and write its report as JSON."""
    schedule = config.schedule_or(DEFAULT_CONSTANT_SCHEDULE)
    try:
        report = coexistence_report(
            schedule,
            config.effective_grid_n,
            probe_schedule=config.probe_schedule,
            jobs=config.jobs,
            tolerances=config.tolerances,
        )
    except ConsistencyError as exc:
        logger.error("coexistence example failed: %s", exc)
        return EXIT_INVALID
    if config.output_path is None:
        sys.stdout.write(report.to_json() + "\n")
    else:
        write_json(report.to_dict(), config.output_path)
    for run in report.runs:
        logger.info(
            "lambda=%.6f mu=%.6f: case %s, psi(0) relative error %.3g",
            run.candidate.lam,
            run.candidate.mu,
            run.report.case.value,
            run.psi0_relative_error,
        )
    return EXIT_OK if report.passed else EXIT_INVALID


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``sill`` console script."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    try:
        config = build_config(args)
    except (ValidationError, ValueError) as exc:
        sys.stderr.write(f"sill: invalid configuration: {exc}\n")
        return EXIT_INVALID

    try:
        if args.handler is cmd_fiber_scan:
            return cmd_fiber_scan(config, counts=args.counts)
        status: int = args.handler(config)
        return status
    except (ModelValidationError, GridError) as exc:
        sys.stderr.write(f"sill: {exc}\n")
        return EXIT_INVALID
    except SillError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_INVALID
