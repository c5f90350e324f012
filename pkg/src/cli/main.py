"""
Command-line interface of the foraging engine

    foraging run <scenario.cfg> [--perturb AMPLITUDE]
    foraging ks-compare <scenario.cfg> [<scenario.cfg>]
    foraging verify-estimates <trajectory-dir> [--paired <trajectory-dir>]
    foraging oracle-check [--quick]
    foraging ode-check [--draws N]

Exit codes: 0 success, 1 error or failed check, 2 KS growth flag raised by
`run`, 64 usage error.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Tuple
import pandas as pd
from dotenv import load_dotenv
from loguru import logger

from config import settings
from src.diagnostics.report import verify_trajectory
from src.diagnostics.stability import paired_runs
from src.models.simulation import Trajectory, run
from src.ode.comparison import ode_suite
from src.oracle.crosscheck import oracle_suite
from src.scenario.parser import load_scenario
from src.scenario.schema import Scenario
from src.solvers.errors import ForagingError
from src.storage.timeseries import write_table, write_timeseries
from src.storage.trajectory_store import load_trajectory, save_trajectory

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2
EXIT_USAGE = 64

LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>"
)
PROPAGATION_GROWTH = 10.0


class UsageError(Exception):
    pass


#argparse exits with status 2 on bad usage; 2 means blow-up here
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, format=LOG_FORMAT, level=level.upper())
    if settings.log_dir:
        logger.add(Path(settings.log_dir) / "foraging_{time}.log", rotation="10 MB", level="DEBUG")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="foraging", description="Ant-foraging chemotaxis engine")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads, 0 = all cores")
    parser.add_argument("--log-level", default=None, help="loguru level (DEBUG, INFO, WARNING, ...)")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("run", help="Simulate a scenario and write snapshots + diagnostics")
    p.add_argument("scenario", help="Scenario file (.cfg)")
    p.add_argument("-o", "--output", default=None, help="Output directory (overrides the scenario)")
    p.add_argument("--no-progress", action="store_true", help="Hide the progress bar")
    p.add_argument("--perturb", type=float, default=None, metavar="AMPLITUDE",
                   help="Also run a twin with a centered bump added to u0 (written to <name>_perturbed)")

    p = sub.add_parser("ks-compare", help="Run KS and FPD with matched mass and compare max norms")
    p.add_argument("scenarios", nargs="+", help="A KS scenario, optionally followed or preceded by an FPD one")
    p.add_argument("-o", "--output", default=None, help="Output directory")
    p.add_argument("--no-progress", action="store_true", help="Hide the progress bar")

    p = sub.add_parser("verify-estimates", help="Check a saved trajectory against the estimates")
    p.add_argument("trajectory", help="Directory written by `run`")
    p.add_argument("--paired", default=None, help="Perturbed twin run for the stability gap")

    p = sub.add_parser("oracle-check", help="Heat-kernel vs stepper cross-validation")
    p.add_argument("--quick", action="store_true", help="Smaller stepper comparison")

    p = sub.add_parser("ode-check", help="Envelope dominance over random ODE parameter draws")
    p.add_argument("--draws", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None, help="Directory for ode_suite.csv")
    return parser


def _output_dir(scenario: Scenario, override: Optional[str]) -> Path:
    base = override or settings.output_dir or scenario.run.output_dir
    return Path(base) / scenario.name


def _load(path: str) -> Optional[Scenario]:
    try:
        return load_scenario(path)
    except (OSError, ForagingError, ValueError) as e:
        logger.error(f"Cannot load scenario '{path}': {e}")
        return None


def _print_summary(traj: Trajectory) -> None:
    report = traj.report
    print(f"status: {traj.status}")
    for key in ("t_final", "steps", "snapshots", "relative_mass_drift", "max_mass_drift", "max_linf_sum", "max_rho"):
        if key in report:
            print(f"{key}: {report[key]}")
    if "error" in report:
        print(f"error: {report['error']}")


def cmd_run(args) -> int:
    scenario = _load(args.scenario)
    if scenario is None:
        return EXIT_ERROR
    base_dir = str(Path(args.scenario).resolve().parent)
    progress = settings.show_progress and not args.no_progress
    twin = None
    if args.perturb is not None:
        traj, twin = paired_runs(scenario, args.perturb, base_dir=base_dir, show_progress=progress)
    else:
        traj = run(scenario, base_dir=base_dir, show_progress=progress)

    directory = _output_dir(scenario, args.output)
    try:
        save_trajectory(traj, directory)
        if twin is not None:
            save_trajectory(twin, directory.with_name(f"{scenario.name}_perturbed"))
    except OSError as e:
        logger.error(f"Cannot write results to {directory}: {e}")
        return EXIT_ERROR
    _print_summary(traj)
    print(f"output: {directory}")

    if traj.status == "error":
        return EXIT_ERROR
    return EXIT_BLOWUP if traj.status == "blowup" else EXIT_OK


#FPD scenario with the same grid, coefficients and total ant mass as a KS one
def fpd_counterpart(ks: Scenario) -> Scenario:
    initial = ks.initial
    if initial.rho is not None:
        initial = initial.model_copy(update={"u": initial.rho, "w": "constant(value=0)", "rho": None})
    model = ks.model.model_copy(update={"kind": "FPD"})
    return ks.model_copy(update={"name": f"{ks.name}_fpd", "model": model, "initial": initial})


def _pair(paths: List[str]) -> Optional[Tuple[Scenario, Scenario]]:
    if len(paths) > 2:
        raise UsageError("ks-compare takes one or two scenarios")
    scenarios = [_load(path) for path in paths]
    if any(s is None for s in scenarios):
        return None
    ks = [s for s in scenarios if s.model.kind == "KS"]
    fpd = [s for s in scenarios if s.model.kind == "FPD"]
    if len(ks) != 1 or len(fpd) > 1 or len(ks) + len(fpd) != len(scenarios):
        logger.error("ks-compare needs one KS scenario and at most one FPD scenario")
        return None
    return ks[0], (fpd[0] if fpd else fpd_counterpart(ks[0]))


def _linf_series(traj: Trajectory):
    if traj.kind == "KS":
        return traj.series.get("t", []), traj.series.get("max_rho", [])
    t = traj.series.get("t", [])
    return t, [u + w for u, w in zip(traj.series.get("max_u", []), traj.series.get("max_w", []))]


def cmd_ks_compare(args) -> int:
    pair = _pair(args.scenarios)
    if pair is None:
        return EXIT_ERROR
    ks, fpd = pair
    progress = settings.show_progress and not args.no_progress
    base_dir = str(Path(args.scenarios[0]).resolve().parent)

    ks_traj = run(ks, base_dir=base_dir, show_progress=progress)
    fpd_traj = run(fpd, base_dir=base_dir, show_progress=progress)
    if "error" in (ks_traj.status, fpd_traj.status):
        logger.error(f"ks-compare aborted: KS {ks_traj.status}, FPD {fpd_traj.status}")
        return EXIT_ERROR

    m_ks, m_fpd = ks_traj.report.get("m0", 0.0), fpd_traj.report.get("m0", 0.0)
    if abs(m_ks - m_fpd) > 1e-9 * max(m_ks, m_fpd, 1e-300):
        logger.warning(f"total masses differ: KS {m_ks:.12e}, FPD {m_fpd:.12e}")

    rows = {"t": [], "model": [], "linf": []}
    for traj in (ks_traj, fpd_traj):
        t, linf = _linf_series(traj)
        rows["t"] += list(t)
        rows["model"] += [traj.kind] * len(t)
        rows["linf"] += list(linf)
    directory = Path(args.output or settings.output_dir or ks.run.output_dir)
    write_timeseries(rows, directory / "ks_compare.csv")

    _, fpd_linf = _linf_series(fpd_traj)
    fpd_bounded = fpd_traj.status == "completed" and max(fpd_linf) <= PROPAGATION_GROWTH * fpd_linf[0]
    flag = "KS growth flag set" if ks_traj.status == "blowup" else "KS growth flag not set"
    verdict = f"{flag}; FPD {'bounded' if fpd_bounded else 'not bounded'}"
    print(f"KS mass {m_ks:.6e}, stopped at t = {ks_traj.report.get('t_final')}")
    print(f"FPD mass {m_fpd:.6e}, reached t = {fpd_traj.report.get('t_final')}")
    print(verdict)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        traj = load_trajectory(args.trajectory)
        paired = load_trajectory(args.paired) if args.paired else None
    except (OSError, ForagingError, ValueError) as e:
        logger.error(f"Cannot load trajectory: {e}")
        return EXIT_ERROR

    report = verify_trajectory(traj, paired)
    path = Path(args.trajectory) / "verification_report.json"
    path.write_text(json.dumps(report, indent=2, default=str))
    for name, result in report["checks"].items():
        print(f"{name}: {result['status']}")
    print(f"verification: {report['status']} ({path})")
    return EXIT_OK if report["status"] == "pass" else EXIT_ERROR


def cmd_oracle(args) -> int:
    report = oracle_suite(quick=args.quick)
    for name, result in report["checks"].items():
        print(f"{name}: {result['status']}")
    print(f"oracle-check: {report['status']}")
    return EXIT_OK if report["status"] == "pass" else EXIT_ERROR


def cmd_ode(args) -> int:
    report = ode_suite(draws=args.draws, seed=args.seed)
    directory = Path(args.output or settings.output_dir or ".")
    rows = report["draws"]
    write_table(pd.DataFrame(rows), directory / "ode_suite.csv")
    print(f"ode-check: {report['status']} ({len(rows) - len(report['failed'])}/{len(rows)} draws dominated)")
    return EXIT_OK if report["status"] == "pass" else EXIT_ERROR


COMMANDS = {
    "run": cmd_run,
    "ks-compare": cmd_ks_compare,
    "verify-estimates": cmd_verify,
    "oracle-check": cmd_oracle,
    "ode-check": cmd_ode,
}


def cli(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.log_level or settings.log_level)
    if args.threads is not None:
        if args.threads < 0:
            logger.error("--threads must be >= 0")
            return EXIT_USAGE
        settings.threads = args.threads

    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        logger.exception(e)
        return EXIT_ERROR


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
