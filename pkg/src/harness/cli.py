"""
Command-line entry point for the Novikov lab

    python -m src.harness.cli run --preset reference --out out/reference
    python -m src.harness.cli converge --preset fast --axis dt --levels 2e-3 1e-3 5e-4 6.25e-5

Exit codes: 0 completed, 2 blow-up or breakdown, 1 usage or config error,
3 internal error.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel

from .. import __version__
from ..core.config import (
    LabConfig,
    BlowupDetectedError,
    JacobianNonpositiveError,
    LabException,
    MaxStepsExceededError,
)
from ..core.models import CommandSummary
from . import io
from .presets import PRESETS, preset
from .runner import LabRunner
from .settings import RunConfig, load_config, with_overrides
from .studies import (
    DEFAULT_PAIRS,
    analyticity_study,
    bihamiltonian_study,
    ck_check_study,
    converge,
    es_props_study,
    perturbation_study,
)

logger = logging.getLogger(__name__)

EXIT_COMPLETED = 0
EXIT_USAGE = 1
EXIT_OUTCOME = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    """Bad command-line usage."""
    pass


class LabArgumentParser(argparse.ArgumentParser):
    """ArgumentParser exiting with the usage code 1 instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pair(text: str) -> Tuple[float, float]:
    try:
        s, s_prime = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected s:s_prime, got '{text}'")
    return s, s_prime


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Run configuration file (key=value grammar)')
    common.add_argument('--preset', choices=sorted(PRESETS), help='Named preset instead of --config')
    common.add_argument('--out', help='Output directory (overrides NOVIKOV_LAB_OUT and output.dir)')
    common.add_argument('--seed', type=int, help='Override the configured seed')
    common.add_argument('--quiet', action='store_true', help='Only log warnings and errors')

    parser = LabArgumentParser(prog="novikov-lab", description="Numerical laboratory for the Novikov equation")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=LabArgumentParser)

    commands.add_parser('run', parents=[common], help='Integrate one configuration and write its files')

    compare = commands.add_parser('compare', parents=[common], help='Distances between two runs at matching probes')
    compare.add_argument('--config-b', help='Second configuration file')
    compare.add_argument('--preset-b', choices=sorted(PRESETS), help='Second configuration as a preset')
    compare.add_argument('--solver-b', choices=["eulerian", "flowmap", "conservative"],
                         help='Second run: first configuration with another solver')
    compare.add_argument('--norm', choices=["sup", "l2", "hs"], default="sup", help='Distance norm (default: sup)')

    study = commands.add_parser('converge', parents=[common], help='Convergence order along dt or n')
    study.add_argument('--axis', choices=["dt", "n"], required=True)
    study.add_argument('--levels', type=float, nargs='+', required=True, help='At least 3 levels')

    perturb = commands.add_parser('perturb', parents=[common], help='Continuous-dependence study')
    perturb.add_argument('--amplitudes', type=float, nargs='+', default=[1e-2, 1e-3, 1e-4])

    bihamiltonian = commands.add_parser('bihamiltonian', parents=[common], help='Hamiltonian identity checks along a run')
    bihamiltonian.add_argument('--refine', action='store_true', help='Double grid.n')

    commands.add_parser('analyticity', parents=[common], help='Radius of analyticity along a run')

    es_props = commands.add_parser('es-props', parents=[common], help='E_s scale-estimate constants')
    es_props.add_argument('--pairs', type=_pair, nargs='+', default=DEFAULT_PAIRS, help='s:s_prime pairs')
    es_props.add_argument('--count', type=int, default=8, help='Number of random samples')
    es_props.add_argument('--n', type=int, default=64, help='Grid size of the samples')

    ck_check = commands.add_parser('ck-check', parents=[common], help='Lipschitz and source checks of the first-order system')
    ck_check.add_argument('--pairs', type=_pair, nargs='+', default=DEFAULT_PAIRS, help='s:s_prime pairs')
    ck_check.add_argument('--radius', type=float, default=1.0)
    ck_check.add_argument('--trials', type=int, default=50)
    ck_check.add_argument('--literal', action='store_true', help='Use the uncorrected local term of G')
    return parser


def configure_logging(quiet: bool = False):
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def resolve_config(args, config_path: Optional[str] = None, preset_name: Optional[str] = None) -> RunConfig:
    """Configuration from a file or a preset, with the --seed override applied."""
    config_path = config_path if config_path is not None else args.config
    preset_name = preset_name if preset_name is not None else args.preset
    if config_path and preset_name:
        raise UsageError("--config and --preset are mutually exclusive")
    if config_path:
        config = load_config(config_path)
    elif preset_name:
        config = preset(preset_name)
    else:
        raise UsageError(f"'{args.command}' needs --config or --preset")
    if args.seed is not None:
        config = with_overrides(config, seed=args.seed)
    return config


def resolve_out(args, config: Optional[RunConfig] = None) -> Path:
    """--out, then NOVIKOV_LAB_OUT, then output.dir, then the default."""
    configured = config.output.dir if config is not None else None
    return Path(args.out or os.getenv("NOVIKOV_LAB_OUT") or configured or LabConfig.OUTPUT_DIR)


def _write_command(out: Path, command: str, report: BaseModel, name: str,
                   config: Optional[RunConfig] = None) -> CommandSummary:
    report_path = io.write_json(out / name, report)
    summary = CommandSummary(
        command=command,
        status="completed",
        files={"report": str(report_path)},
        config=config.model_dump() if config is not None else {},
        version=__version__,
    )
    io.write_json(out / "run.json", summary)
    return summary


def execute(args) -> int:
    """Dispatch one parsed command; returns the exit code."""
    command = args.command
    if command == "es-props":
        out = resolve_out(args)
        seed = args.seed if args.seed is not None else 0
        _write_command(out, command, es_props_study(args.pairs, args.count, seed, args.n), "es_props.json")
        return EXIT_COMPLETED
    if command == "ck-check":
        out = resolve_out(args)
        seed = args.seed if args.seed is not None else 0
        report = ck_check_study(args.pairs, args.radius, args.trials, seed, literal=args.literal)
        _write_command(out, command, report, "ck_check.json")
        return EXIT_COMPLETED

    config = resolve_config(args)
    out = resolve_out(args, config)
    runner = LabRunner(out_dir=str(out))

    if command == "run":
        summary = runner.run(config)
        print(f"{summary.outcome}: t={summary.final_time:.6g} of {summary.t_end:.6g}, files in {out}")
        return EXIT_COMPLETED if summary.outcome == "completed" else EXIT_OUTCOME

    if command == "compare":
        second = _second_config(args, config)
        report = runner.compare(config, second, args.norm)
        _write_command(out, command, report, "compare.json", config)
        print(f"max {args.norm} distance {report.max_distance:.6g} over {len(report.times)} probes")
    elif command == "converge":
        report = converge(config, args.axis, args.levels, runner)
        _write_command(out, command, report, "convergence.json", config)
        print(f"errors {report.errors}, order {report.order}")
    elif command == "perturb":
        report = perturbation_study(config, args.amplitudes, config.seed, runner)
        _write_command(out, command, report, "perturbation.json", config)
        print(f"distances {report.distances}, monotone={report.monotone}")
    elif command == "bihamiltonian":
        report = bihamiltonian_study(config, refine=args.refine, runner=runner)
        _write_command(out, command, report, "bihamiltonian.json", config)
        print(f"{len(report.reports)} probes checked, {len(report.failures)} failures")
    elif command == "analyticity":
        report = analyticity_study(config, runner)
        _write_command(out, command, report, "radius.json", config)
        print(f"{len(report.estimates)} radius estimates written")
    return EXIT_COMPLETED


def _second_config(args, config: RunConfig) -> RunConfig:
    if args.solver_b:
        if args.config_b or args.preset_b:
            raise UsageError("--solver-b cannot be combined with --config-b or --preset-b")
        return with_overrides(config, solver=args.solver_b)
    if not (args.config_b or args.preset_b):
        raise UsageError("compare needs --config-b, --preset-b or --solver-b")
    return resolve_config(args, config_path=args.config_b or "", preset_name=args.preset_b or "")


def _write_failure(args, status: str, message: str):
    try:
        out = Path(args.out or os.getenv("NOVIKOV_LAB_OUT") or LabConfig.OUTPUT_DIR)
        io.write_json(
            out / "run.json",
            CommandSummary(command=args.command, status=status, message=message, version=__version__),
        )
    except OSError as e:
        logger.error(f"Could not write run.json: {e}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.quiet)

    try:
        return execute(args)
    except (BlowupDetectedError, MaxStepsExceededError) as e:
        logger.warning(f"{args.command} stopped by blow-up: {e}")
        _write_failure(args, "blowup", str(e))
        return EXIT_OUTCOME
    except JacobianNonpositiveError as e:
        logger.warning(f"{args.command} stopped by breakdown: {e}")
        _write_failure(args, "breakdown", str(e))
        return EXIT_OUTCOME
    except (UsageError, LabException, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}")
        _write_failure(args, "failed", f"Unexpected error: {e}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
