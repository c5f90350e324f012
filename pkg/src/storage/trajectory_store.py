import json
from pathlib import Path
from typing import Dict, Optional, Union
import pandas as pd
from loguru import logger

from src.mesh.grid import Grid
from src.models.params import SimState
from src.models.simulation import Trajectory
from src.scenario.parser import dump_scenario, parse_scenario
from src.storage.snapshot import read_snapshot, write_snapshot
from src.storage.timeseries import read_timeseries, write_timeseries

STATE_FIELDS = ("u", "w", "p", "c", "rho", "phi")


#Write snapshots, the snapshot index, the per-step series, the scenario and the run report
def save_trajectory(traj: Trajectory, directory: Union[str, Path]) -> Dict[str, str]:
    directory = Path(directory)
    snap_dir = directory / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for index, (t, state) in enumerate(zip(traj.times, traj.states)):
        for name in STATE_FIELDS:
            field = getattr(state, name)
            if field is not None:
                write_snapshot(field, t, snap_dir / f"{name}_{index:05d}.antf")
        rows.append({"snapshot": index, "t": t})
    write_timeseries(pd.DataFrame(rows, columns=["snapshot", "t"]), directory / "snapshots.csv")
    write_timeseries(traj.series_frame(), directory / "timeseries.csv")

    if traj.scenario is not None:
        (directory / "scenario.cfg").write_text(dump_scenario(traj.scenario))
    report = {key: value for key, value in traj.report.items()}
    report["status"] = traj.status
    (directory / "run_report.json").write_text(json.dumps(report, indent=2, default=str))

    logger.info(f"Saved {len(traj.times)} snapshots of the {traj.kind} run to {directory}")
    return {
        "snapshots": str(snap_dir),
        "timeseries": str(directory / "timeseries.csv"),
        "report": str(directory / "run_report.json"),
    }


#Read a directory written by save_trajectory back into a Trajectory (no params)
def load_trajectory(directory: Union[str, Path]) -> Trajectory:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"trajectory directory '{directory}' does not exist")

    scenario = None
    scenario_path = directory / "scenario.cfg"
    if scenario_path.exists():
        scenario = parse_scenario(scenario_path.read_text(), base_dir=directory, validate=False)

    index = read_timeseries(directory / "snapshots.csv")
    grid: Optional[Grid] = None
    if scenario is not None:
        g = scenario.grid
        grid = Grid(g.nx, g.ny, g.lx, g.ly)

    states = []
    times = []
    for row in index.itertuples(index=False):
        fields = {}
        for name in STATE_FIELDS:
            path = directory / "snapshots" / f"{name}_{int(row.snapshot):05d}.antf"
            if path.exists():
                fields[name], _ = read_snapshot(path, grid)
                grid = fields[name].grid
        states.append(SimState(t=float(row.t), **fields))
        times.append(float(row.t))

    if grid is None:
        raise FileNotFoundError(f"no snapshots found under '{directory}'")

    report: Dict = {}
    report_path = directory / "run_report.json"
    if report_path.exists():
        report = json.loads(report_path.read_text())

    kind = scenario.model.kind if scenario is not None else ("KS" if states and states[0].rho is not None else "FPD")
    series_path = directory / "timeseries.csv"
    series = read_timeseries(series_path).to_dict(orient="list") if series_path.exists() else {}
    traj = Trajectory(
        kind=kind,
        grid=grid,
        times=times,
        states=states,
        series=series,
        status=report.get("status", "completed"),
        report=report,
        scenario=scenario,
    )
    logger.info(f"Loaded {len(times)} snapshots from {directory}")
    return traj
