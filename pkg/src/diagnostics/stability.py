from dataclasses import dataclass
from typing import Dict, Optional, Tuple
import math
import numpy as np
from loguru import logger

from config import settings
from src.mesh.grid import Field
from src.mesh.operators import lp_norm
from src.diagnostics.norms import TimeSeries
from src.models.simulation import run
from src.scenario.builders import build_problem


#Gap between two paired runs and the smallest rate C with g(t) <= g(0) e^(C t)
@dataclass(frozen=True)
class StabilityGap:
    series: TimeSeries
    g0: float
    rate: float

    def bound(self, t) -> np.ndarray:
        return self.g0 * np.exp(self.rate * np.asarray(t, dtype=float))

    def is_dominated(self, rel_tol: float = 1e-9) -> bool:
        if not math.isfinite(self.rate):
            return False
        return bool(np.all(self.series.values <= self.bound(self.series.t) * (1 + rel_tol) + 1e-300))


def _check_paired(trajA, trajB) -> None:
    if trajA.kind != trajB.kind:
        raise ValueError(f"paired runs differ in model kind: {trajA.kind} vs {trajB.kind}")
    if trajA.grid != trajB.grid:
        raise ValueError("paired runs live on different grids")
    if len(trajA.times) != len(trajB.times) or not np.array_equal(trajA.times, trajB.times):
        raise ValueError("paired runs do not share snapshot times")
    scenA, scenB = trajA.scenario, trajB.scenario
    if scenA is not None and scenB is not None and scenA.model != scenB.model:
        raise ValueError("paired runs use different model parameters")


def _population_pair(state):
    if state.rho is not None:
        return (state.rho,)
    return state.u, state.w


#g(t) = ||u_A - u_B||_2 + ||w_A - w_B||_2 (||rho_A - rho_B||_2 for KS)
def stability_gap(trajA, trajB) -> StabilityGap:
    _check_paired(trajA, trajB)
    gaps = []
    for sa, sb in zip(trajA.states, trajB.states):
        total = 0.0
        for fa, fb in zip(_population_pair(sa), _population_pair(sb)):
            total += lp_norm(fa.with_values(fa.values - fb.values), 2.0)
        gaps.append(total)
    t = np.asarray(trajA.times, dtype=float)
    g = np.asarray(gaps)
    g0 = float(g[0]) if g.size else 0.0

    later = t > 0
    if not np.any(g[later] > 0):
        rate = 0.0
    elif g0 == 0:
        rate = math.inf
    else:
        with np.errstate(divide="ignore"):
            rates = np.log(g[later] / g0) / t[later]
        rate = float(np.max(rates))

    logger.info(f"Stability gap: g(0) = {g0:.3e}, fitted rate C = {rate:.4g}")
    return StabilityGap(series=TimeSeries(t, g, "gap"), g0=g0, rate=rate)


#Smooth bump of height `amplitude` at the domain center, used to perturb one initial population
def perturbation(grid, amplitude: float, width: float = 0.05) -> Field:
    X, Y = grid.mesh()
    sigma = width * min(grid.lx, grid.ly)
    r2 = (X - 0.5 * grid.lx) ** 2 + (Y - 0.5 * grid.ly) ** 2
    return Field(grid, amplitude * np.exp(-r2 / (2.0 * sigma * sigma)))


#Run a scenario twice, the second time with u0 (rho0 for KS) perturbed
def paired_runs(scenario, amplitude: float = 1e-6, base_dir: Optional[str] = None,
                show_progress: bool = False) -> Tuple[object, object]:
    problem = build_problem(scenario, base_dir=base_dir)
    key = "rho0" if scenario.model.kind == "KS" else "u0"
    base = problem.initial[key]
    bumped = base.with_values(base.values + perturbation(base.grid, amplitude).values)

    trajA = run(scenario, base_dir=base_dir, show_progress=show_progress)
    trajB = run(scenario, initial_override={key: bumped}, base_dir=base_dir, show_progress=show_progress)
    return trajA, trajB


#Relative spread of fitted rates, e.g. across resolutions
def rate_spread(rates: Dict[str, float]) -> float:
    values = np.array([r for r in rates.values() if math.isfinite(r)])
    if values.size < len(rates):
        return math.inf
    scale = max(float(np.abs(values).max()), 1e-300)
    return float((values.max() - values.min()) / scale)


#Fitted rate C of paired runs under grid refinement; stable when the rates agree within settings.stability_rate_spread
def resolution_study(scenario, refinements=(1, 2), amplitude: float = 1e-6,
                     base_dir: Optional[str] = None) -> Dict:
    rates: Dict[str, float] = {}
    for factor in refinements:
        grid = scenario.grid.model_copy(update={"nx": scenario.grid.nx * factor, "ny": scenario.grid.ny * factor})
        refined = scenario.model_copy(update={"grid": grid})
        trajA, trajB = paired_runs(refined, amplitude, base_dir=base_dir)
        if "error" in (trajA.status, trajB.status):
            raise ValueError(f"paired run at {grid.nx}x{grid.ny} failed: {trajA.status}/{trajB.status}")
        rates[f"{grid.nx}x{grid.ny}"] = stability_gap(trajA, trajB).rate

    spread = rate_spread(rates)
    limit = settings.stability_rate_spread
    status = "pass" if spread <= limit else "fail"
    logger.info(f"Stability rates {rates}: spread {spread:.3g} (limit {limit}), {status}")
    return {"status": status, "rates": rates, "spread": spread, "limit": limit}
