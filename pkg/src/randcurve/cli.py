"""Command-line entry point for experiment campaigns."""

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigurationError, InvalidArgumentError, InvariantViolation
from .models.data_models import ExperimentName
from .models.experiment_config import load_config
from .models.record_store import RecordStore
from .models.settings import get_settings
from .tools.experiments import run_experiment
from .tools.reporting import summarize, verify_records, write_plotdata, write_summary_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIGURATION = 2


def _summary_path(records_path: Path) -> Path:
    return records_path.with_name(f"{records_path.stem}.summary.csv")


def _print_summaries(records_path: Path) -> int:
    summaries = summarize(RecordStore(records_path).read())
    for summary in summaries:
        print(summary.to_markdown())
    return EXIT_OK if all(summary.ok for summary in summaries) else EXIT_VIOLATION


def cmd_run(args: argparse.Namespace) -> int:
    config, params = load_config(args.config)
    result = run_experiment(config, params, output=args.output, workers=args.workers)
    summaries = summarize(result.records)
    for summary in summaries:
        write_summary_csv(summary, _summary_path(result.path))
        print(summary.to_markdown())
    failed = [failure for summary in summaries for failure in summary.failures]
    logger.info(
        f"Run complete: {result.written} new records, {result.skipped} resumed, "
        f"{len(failed)} violations"
    )
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_summarize(args: argparse.Namespace) -> int:
    return _print_summaries(Path(args.records))


def cmd_verify(args: argparse.Namespace) -> int:
    failures = verify_records(RecordStore(args.records).read())
    if failures:
        for failure in failures:
            print(f"FAILED {failure}")
        return EXIT_VIOLATION
    print("All invariants passed")
    return EXIT_OK


def cmd_plotdata(args: argparse.Namespace) -> int:
    records = RecordStore(args.records).read()
    result = write_plotdata(records, args.experiment, args.output)
    if args.output is None:
        sys.stdout.write(result)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import main as serve

    argv = ["--transport", args.transport, "--log-level", args.log_level]
    if args.transport == "http":
        argv += ["--host", args.host, "--port", str(args.port)]
    serve(argv)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randcurve", description="Reproducible random-field interface experiments"
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Logging level (default: RANDCURVE_LOG_LEVEL or INFO)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run or resume the experiment described by a YAML config")
    run.add_argument("config", help="Experiment configuration file")
    run.add_argument("--output", default=None, help="Record file, overrides the config")
    run.add_argument("--workers", type=int, default=None, help="Worker processes")
    run.set_defaults(handler=cmd_run)

    summarize_cmd = sub.add_parser("summarize", help="Print summary tables of a record file")
    summarize_cmd.add_argument("records", help="JSON-lines record file")
    summarize_cmd.set_defaults(handler=cmd_summarize)

    verify = sub.add_parser("verify", help="Re-check the invariants recorded in a record file")
    verify.add_argument("records", help="JSON-lines record file")
    verify.set_defaults(handler=cmd_verify)

    plotdata = sub.add_parser("plotdata", help="Emit one experiment's records as CSV")
    plotdata.add_argument("records", help="JSON-lines record file")
    plotdata.add_argument(
        "--experiment", required=True, choices=[name.value for name in ExperimentName]
    )
    plotdata.add_argument("--output", default=None, help="CSV file (default: stdout)")
    plotdata.set_defaults(handler=cmd_plotdata)

    serve = sub.add_parser("serve", help="Start the MCP server")
    serve.add_argument("--transport", choices=["stdio", "http"], default="stdio")
    serve.add_argument("--host", default="127.0.0.1", help="Host for HTTP transport")
    serve.add_argument("--port", type=int, default=8000, help="Port for HTTP transport")
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, run the subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    args.log_level = args.log_level or get_settings().log_level.upper()

    logging.basicConfig(
        level=getattr(logging, args.log_level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    logging.getLogger().setLevel(getattr(logging, args.log_level, logging.INFO))

    try:
        return args.handler(args)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e!s}")
        return EXIT_CONFIGURATION
    except InvalidArgumentError as e:
        logger.error(f"Invalid input: {e!s}")
        return EXIT_CONFIGURATION
    except InvariantViolation as e:
        logger.error(f"Invariant violated: {e!s}")
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
