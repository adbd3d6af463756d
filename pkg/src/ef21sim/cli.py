"""Command-line entry point: run, tune, inspect-data and verify."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Iterable
from pathlib import Path

import yaml

from ef21sim.config import Settings, load_settings
from ef21sim.core.exceptions import (
    DivergenceError,
    ParseError,
    SimulationError,
    TuningError,
    UnsupportedVariantError,
)
from ef21sim.core.sim import RunStatus, run, run_directory, write_run
from ef21sim.core.validation import ConfigurationError
from ef21sim.orchestrators import SUITES, run_suites, tune, write_tuning
from ef21sim.plugins.datasources import load_libsvm, shard_sizes

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3

_USAGE_ERRORS = (
    ConfigurationError,
    ParseError,
    FileNotFoundError,
    UnsupportedVariantError,
    ValueError,
    SimulationError,
)


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"],
        help="Set logging verbosity",
    )


def _add_settings_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--settings", type=Path, help="Path to a settings YAML file (built-in defaults if unset)")
    parser.add_argument("--profile", default="default", help="Settings profile to load")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a dotted settings key, e.g. method.compressor.k=5 (repeatable)",
    )
    parser.add_argument("--output-dir", type=Path, help="Override output.directory")
    parser.add_argument("--seed", type=int, help="Override the root seed")
    parser.add_argument(
        "--print-config",
        action="store_true",
        help="Print resolved configuration and exit (no execution)",
    )
    parser.add_argument(
        "--explain-config",
        type=str,
        metavar="KEY",
        help="Explain the source of a config key (e.g. 'clients' or 'method.compressor.k')",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ef21sim", description="Error-feedback distributed optimization simulator")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Execute one run and write its record")
    _add_settings_arguments(run_parser)
    _add_common_arguments(run_parser)

    tune_parser = subparsers.add_parser("tune", help="Execute the stepsize-multiplier grid")
    _add_settings_arguments(tune_parser)
    _add_common_arguments(tune_parser)

    inspect_parser = subparsers.add_parser("inspect-data", help="Summarize a LibSVM file")
    inspect_parser.add_argument("path", type=Path, help="LibSVM file to parse")
    inspect_parser.add_argument("--clients", type=int, default=1, help="Number of clients for the size split")
    _add_common_arguments(inspect_parser)

    verify_parser = subparsers.add_parser("verify", help="Run the built-in invariant suites")
    verify_parser.add_argument(
        "--suite",
        dest="suites",
        action="append",
        choices=sorted(SUITES),
        help="Suite to run (repeatable; all suites if unset)",
    )
    _add_common_arguments(verify_parser)
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO))


def _load(args: argparse.Namespace) -> Settings:
    return load_settings(
        args.settings,
        profile=args.profile,
        overrides=args.overrides,
        seed=args.seed,
        output_dir=args.output_dir,
    )


def _print_configuration(args: argparse.Namespace, settings: Settings) -> None:
    source = f"{args.settings} (profile: {args.profile})" if args.settings else "built-in defaults"
    print("# Resolved Configuration")
    print(f"# Loaded from: {source}")
    print()
    if args.explain_config:
        print(settings.explain(args.explain_config))
    else:
        print(yaml.safe_dump(settings.data, default_flow_style=False, sort_keys=False))


def _run(args: argparse.Namespace) -> int:
    settings = _load(args)
    if args.print_config or args.explain_config:
        _print_configuration(args, settings)
        return EXIT_OK
    record = run(settings.run_config)
    directory = run_directory(settings.output_dir, settings.data)
    written = write_run(record, directory, settings.formats)
    final = record.last_row.grad_norm_sq if record.last_row else float("nan")
    print(f"status={record.status} rounds={record.rounds} grad_norm_sq={final:.6g} directory={directory}")
    for fmt, path in written.items():
        logger.info("Wrote %s record to %s", fmt, path)
    return EXIT_DIVERGED if record.status == RunStatus.DIVERGED else EXIT_OK


def _tune(args: argparse.Namespace) -> int:
    settings = _load(args)
    if args.print_config or args.explain_config:
        _print_configuration(args, settings)
        return EXIT_OK
    result = tune(settings.run_config, settings.multipliers, concurrency=settings.concurrency)
    summary = write_tuning(result, settings.output_dir, settings.formats, settings.data)
    print(f"best_multiplier={result.best_multiplier:g} status={result.best_record.status} summary={summary}")
    return EXIT_OK


def _format_label(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(value)


def _inspect(args: argparse.Namespace) -> int:
    raw = load_libsvm(args.path)
    sizes = shard_sizes(raw.n_rows, args.clients)
    histogram = ",".join(f"{_format_label(label)}:{count}" for label, count in raw.label_histogram().items())
    print(f"N={raw.n_rows}")
    print(f"d={raw.inferred_dim}")
    print(f"labels={histogram}")
    print(f"sizes=({','.join(str(size) for size in sizes)})")
    return EXIT_OK


def _verify(args: argparse.Namespace) -> int:
    report = run_suites(args.suites)
    for result in report.results:
        print(result.format())
    print(f"verification={'passed' if report.passed else 'failed'} checks={len(report.results)} failures={len(report.failures)}")
    return EXIT_OK if report.passed else EXIT_VERIFICATION_FAILED


_COMMANDS = {
    "run": _run,
    "tune": _tune,
    "inspect-data": _inspect,
    "verify": _verify,
}


def _report_error(exc: BaseException) -> None:
    message = " ".join(str(exc).split())
    print(f"error kind={type(exc).__name__} message={message}", file=sys.stderr)


def main(argv: Iterable[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(list(argv) if argv is not None else None)
    configure_logging(args.log_level)
    try:
        return _COMMANDS[args.command](args)
    except (TuningError, DivergenceError) as exc:
        _report_error(exc)
        return EXIT_DIVERGED
    except _USAGE_ERRORS as exc:
        _report_error(exc)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
