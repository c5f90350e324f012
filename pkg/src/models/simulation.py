from dataclasses import dataclass, field
from typing import Dict, List, Optional
import math
import traceback
import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from config import settings
from src.mesh.grid import Field, Grid
from src.mesh.operators import integrate, lp_norm
from src.models.foraging import admissible_dt, initial_state, step
from src.models.params import ModelParams, Problem, SimState, validate_initial, validate_params
from src.scenario.builders import build_problem
from src.solvers.errors import ForagingError

POPULATION_SERIES = [
    "t", "dt", "mass_u", "mass_w", "mass_total", "max_u", "max_w",
    "l2_u", "l2_w", "min_u", "min_w", "min_c",
]
KS_SERIES = ["t", "dt", "mass_rho", "max_rho", "min_rho"]


#Recorded run: snapshots at a cadence plus per-step scalar diagnostics
@dataclass
class Trajectory:
    kind: str
    grid: Grid
    params: Optional[ModelParams] = None
    times: List[float] = field(default_factory=list)
    states: List[SimState] = field(default_factory=list)
    series: Dict[str, List[float]] = field(default_factory=dict)
    status: str = "completed" #completed, blowup or error
    report: Dict = field(default_factory=dict)
    scenario: Optional[object] = None

    def record_snapshot(self, state: SimState) -> None:
        if self.times and state.t <= self.times[-1]:
            return
        self.times.append(state.t)
        self.states.append(state)

    def record_series(self, state: SimState, dt: float) -> None:
        for key, value in scalar_diagnostics(state, dt).items():
            self.series.setdefault(key, []).append(value)

    def series_frame(self) -> pd.DataFrame:
        columns = KS_SERIES if self.kind == "KS" else POPULATION_SERIES
        return pd.DataFrame(self.series, columns=columns)

    @property
    def initial_mass(self) -> float:
        return self.states[0].total_mass() if self.states else 0.0

    @property
    def final_state(self) -> Optional[SimState]:
        return self.states[-1] if self.states else None


#Scalar diagnostics recorded after every step
def scalar_diagnostics(state: SimState, dt: float) -> Dict[str, float]:
    if state.rho is not None:
        return {
            "t": state.t,
            "dt": dt,
            "mass_rho": integrate(state.rho),
            "max_rho": state.rho.max(),
            "min_rho": state.rho.min(),
        }
    mass_u = integrate(state.u)
    mass_w = integrate(state.w)
    return {
        "t": state.t,
        "dt": dt,
        "mass_u": mass_u,
        "mass_w": mass_w,
        "mass_total": mass_u + mass_w,
        "max_u": state.u.max(),
        "max_w": state.w.max(),
        "l2_u": lp_norm(state.u, 2.0),
        "l2_w": lp_norm(state.w, 2.0),
        "min_u": state.u.min(),
        "min_w": state.w.min(),
        "min_c": state.c.min() if state.c is not None else math.nan,
    }


#Advance a model from t = 0 to t_end; failures end the run with the partial trajectory kept
def run_problem(problem: Problem, show_progress: bool = None) -> Trajectory:
    show_progress = settings.show_progress if show_progress is None else show_progress
    params = problem.params
    traj = Trajectory(kind=params.kind, grid=params.grid, params=params)
    traj.report = {"kind": params.kind, "t_end": problem.t_end, "warnings": list(problem.warnings)}

    try:
        traj.report["warnings"] += validate_params(params)
        if params.kind == "KS":
            rho0 = problem.initial["rho0"]
            if rho0.min() < 0:
                raise ValueError("initial rho must be nonnegative")
            peak = rho0.max()
            threshold = problem.blowup_factor * peak if peak > 0 else math.inf
            params = params.with_blowup_threshold(threshold)
            traj.params = params
            traj.report["blowup_threshold"] = threshold
        else:
            validate_initial(problem.initial["u0"], problem.initial["w0"])
        state = initial_state(params, **problem.initial)
    except (ForagingError, ValueError) as e:
        logger.error(f"Run setup failed: {e}")
        traj.status = "error"
        traj.report["error"] = str(e)
        return traj

    m0 = state.total_mass()
    traj.report["m0"] = m0
    traj.record_snapshot(state)
    traj.record_series(state, 0.0)
    logger.info(f"Starting {params.kind} run on {params.grid.nx}x{params.grid.ny} to t = {problem.t_end}")

    steps = 0
    t_end = problem.t_end
    with tqdm(total=t_end, disable=not show_progress, desc=params.kind, unit="t") as progress:
        while state.t < t_end * (1 - 1e-12):
            try:
                dt = admissible_dt(state, params, dt_max=problem.dt_max)
                dt = min(dt, t_end - state.t)
                if dt < settings.dt_floor:
                    raise ForagingError(
                        f"time step {dt:.3e} fell below the floor {settings.dt_floor:.1e} at t = {state.t:.6e}"
                    )
                state = step(state, params, dt)
            except (ForagingError, ValueError) as e:
                logger.error(f"Run aborted at t = {state.t:.6e}: {e}")
                logger.debug(f"Traceback: {traceback.format_exc()}")
                traj.status = "error"
                traj.report["error"] = str(e)
                break

            steps += 1
            progress.update(dt)
            traj.record_series(state, dt)
            if steps % problem.snapshot_every == 0:
                traj.record_snapshot(state)
            if state.blowup:
                traj.record_snapshot(state)
                traj.status = "blowup"
                break

    traj.record_snapshot(state)
    traj.report.update(_summary(traj, m0, steps, state))
    logger.info(f"Run finished with status '{traj.status}' after {steps} steps at t = {state.t:.6e}")
    return traj


#Mass drift and extrema over the recorded series
def _summary(traj: Trajectory, m0: float, steps: int, state: SimState) -> Dict:
    frame = traj.series_frame()
    summary = {"status": traj.status, "steps": steps, "t_final": state.t, "snapshots": len(traj.times)}
    if "mass_total" in frame:
        drift = float(np.abs(frame["mass_total"] - m0).max())
        summary["max_mass_drift"] = drift
        summary["relative_mass_drift"] = drift / m0 if m0 > 0 else drift
        summary["min_u"] = float(frame["min_u"].min())
        summary["min_w"] = float(frame["min_w"].min())
        summary["min_c"] = float(frame["min_c"].min())
        summary["max_linf_sum"] = float((frame["max_u"] + frame["max_w"]).max())
    else:
        drift = float(np.abs(frame["mass_rho"] - m0).max())
        summary["max_mass_drift"] = drift
        summary["relative_mass_drift"] = drift / m0 if m0 > 0 else drift
        summary["max_rho"] = float(frame["max_rho"].max())
        summary["min_rho"] = float(frame["min_rho"].min())
    return summary


#Build and run a parsed scenario; initial_override replaces individual initial fields
def run(scenario, initial_override: Optional[Dict[str, Field]] = None, base_dir: Optional[str] = None,
        show_progress: bool = None) -> Trajectory:
    try:
        problem = build_problem(scenario, base_dir=base_dir)
    except (ForagingError, ValueError) as e:
        logger.error(f"Could not build scenario '{scenario.name}': {e}")
        grid = Grid(scenario.grid.nx, scenario.grid.ny, scenario.grid.lx, scenario.grid.ly)
        traj = Trajectory(kind=scenario.model.kind, grid=grid, status="error", scenario=scenario)
        traj.report = {"status": "error", "error": str(e)}
        return traj

    if initial_override:
        problem.initial.update(initial_override)
    traj = run_problem(problem, show_progress=show_progress)
    traj.scenario = scenario
    return traj
