"""
Schottky Cusp Counting Lab - Command-Line Entry Point
Runs one subcommand on a validated run configuration

Subcommands:
- profile:    cusp profile T, T', T'' and curvature, with its certificate
- geodesics:  Clairaut excursion lengths against the exact and asymptotic ones
- validate:   ping-pong check of the Schottky data
- words:      words of the ball of the smallest grid radius
- count:      N(R) over the R grid with the normalized ratios
- delta:      critical exponent and the rho-vs-s curve
- classify:   Convergent / Divergent verdict at delta
- renewal:    renewal sum of M(R, 1 x u)(x0) per level
- fit:        C_hat and its drift over the top of the grid
- selftest:   the acceptance suite

Run:
    python -m engines.main count --config config/default_run.json --set counting.k_max=8

Exit codes: 0 ok, 1 unexpected or failed selftest, 2 config, 3 validation,
4 numeric, 5 budget.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from engines.acceptance_suite import AcceptanceSuite
from engines.lab_service import COMMANDS
from engines.run_context import RunContext
from engines.schemas import CommandResult
from output_formats import CSVExporter, JSONExporter, ReportGenerator
from shared.config.settings import RunConfig, load_run_config, settings
from shared.middleware.error_handler import handle_lab_error

logger = logging.getLogger(__name__)

SUBCOMMANDS = tuple(COMMANDS) + ("selftest",)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cusplab", description=settings.app_name)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    for name in SUBCOMMANDS:
        command = sub.add_parser(name)
        command.add_argument("--config", default=None, help="JSON run configuration")
        command.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                             help="Override a config key, e.g. counting.k_max=8 (repeatable)")
        command.add_argument("--workers", type=int, default=settings.workers, help="Worker processes")
        command.add_argument("--out", default=None, help="Output directory")
        command.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
        if name == "selftest":
            command.add_argument("--only", action="append", default=[], metavar="CRITERION",
                                 help="Run only the named criteria, e.g. A7 (repeatable)")
    return parser


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(level=level, format=settings.log_format, force=True)


def output_directory(config: RunConfig, out: Optional[str]) -> Path:
    return Path(out or config.output.directory or settings.out_dir)


def write_result(result: CommandResult, config: RunConfig, out_dir: Path) -> str:
    """Write the CSV tables and the summary; return the summary text"""
    float_format = config.output.float_format
    for stem, table in result.tables.items():
        CSVExporter.export_table(result.command, table, out_dir / f"{stem}.csv", float_format)
    if result.command == "selftest":
        rows = result.tables["selftest"].to_dict("records")
        return ReportGenerator.generate_selftest_report(rows, str(out_dir / "summary.txt"))
    return ReportGenerator.generate_summary(result.command, result.sections, str(out_dir / "summary.txt"))


def execute(command: str, config: RunConfig, workers: int = 1, only: Optional[List[str]] = None) -> CommandResult:
    """Run one subcommand on a loaded configuration"""
    ctx = RunContext(config, workers=workers)
    if command == "selftest":
        return AcceptanceSuite(ctx).run(only or None)
    return COMMANDS[command](ctx)


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run the subcommand and write its artifacts.

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = load_run_config(args.config, args.overrides)
        out_dir = output_directory(config, args.out)
        JSONExporter.export_config(config, out_dir / "resolved_config.json")
        logger.info("Running subcommand", extra={"command": args.command, "workers": args.workers,
                                                  "out": str(out_dir)})
        result = execute(args.command, config, args.workers, getattr(args, "only", None))
        print(write_result(result, config, out_dir), end="")
        return result.exit_code
    except Exception as exc:
        return handle_lab_error(exc, args.command)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
