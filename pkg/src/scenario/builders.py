from pathlib import Path
from typing import Dict, Optional, Union
import numpy as np
from loguru import logger

from src.mesh.grid import Field, Grid, make_grid
from src.mesh.operators import integrate
from src.models.params import ModelParams, Problem
from src.scenario.schema import BuilderSpec, Scenario, parse_builder
from src.storage.snapshot import read_snapshot


def _gaussian(grid: Grid, cx: float, cy: float, sigma: float) -> np.ndarray:
    x, y = grid.mesh()
    return np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * sigma ** 2))


#Sum of `count` Gaussian bumps at random interior centers with random heights in [amplitude/2, amplitude]
def random_bumps_values(grid: Grid, count: int, sigma: float, amplitude: float,
                        rng: np.random.Generator) -> np.ndarray:
    values = np.zeros(grid.shape)
    for _ in range(int(count)):
        cx = rng.uniform(0.2, 0.8) * grid.lx
        cy = rng.uniform(0.2, 0.8) * grid.ly
        height = rng.uniform(0.5, 1.0) * amplitude
        values += height * _gaussian(grid, cx, cy, sigma)
    return values


#Evaluate a builder expression on a grid
def build_field(spec: Union[BuilderSpec, str], grid: Grid, rng: Optional[np.random.Generator] = None,
                base_dir: Optional[Union[str, Path]] = None) -> Field:
    if isinstance(spec, str):
        spec = parse_builder(spec)
    a = spec.args

    if spec.name == "constant":
        return Field.constant(grid, a["value"])
    if spec.name == "gaussian":
        return Field(grid, a["amplitude"] * _gaussian(grid, a["cx"], a["cy"], a["sigma"]))
    if spec.name == "bump":
        shape = Field(grid, _gaussian(grid, a["cx"], a["cy"], a["sigma"]))
        # normalized on the grid so the discrete mass is exactly the requested one
        return Field(grid, shape.values * (a["mass"] / integrate(shape)))
    if spec.name == "disk":
        x, y = grid.mesh()
        inside = (x - a["cx"]) ** 2 + (y - a["cy"]) ** 2 <= a["radius"] ** 2
        return Field(grid, np.where(inside, a["inside"], a["outside"]))
    if spec.name == "ramp_to_point":
        x, y = grid.mesh()
        return Field(grid, -a["slope"] * np.hypot(x - a["cx"], y - a["cy"]))
    if spec.name == "random_bumps":
        rng = rng if rng is not None else np.random.default_rng(0)
        return Field(grid, random_bumps_values(grid, a["count"], a["sigma"], a["amplitude"], rng))
    if spec.name == "snapshot":
        path = Path(a["path"])
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        field, _ = read_snapshot(path, grid)
        return field
    raise ValueError(f"unknown builder '{spec.name}'")


#Evaluate every builder of a scenario into model parameters and initial fields
def build_problem(scenario: Scenario, base_dir: Optional[Union[str, Path]] = None) -> Problem:
    g = scenario.grid
    grid = make_grid(g.nx, g.ny, g.lx, g.ly)

    fields: Dict[str, Field] = {}
    for index, (section, key, expression) in enumerate(scenario.builder_items()):
        if expression is None:
            continue
        rng = np.random.default_rng([scenario.run.seed, index])
        fields[f"{section}.{key}"] = build_field(expression, grid, rng=rng, base_dir=base_dir)

    m = scenario.model
    params = ModelParams(
        kind=m.kind,
        grid=grid,
        D_w=m.D_w,
        D_p=m.D_p,
        chi=m.chi,
        delta=m.delta,
        N=fields["model.N"],
        P=fields["model.P"],
        c=fields["model.c"],
        v=fields["model.v"],
        food_feedback=m.food_feedback,
        elliptic_rel_tol=scenario.run.elliptic_rel_tol,
        cfl=scenario.run.cfl,
    )

    if m.kind == "KS":
        rho = fields.get("initial.rho")
        if rho is None:
            # the density of a KS run defaults to the total ant population
            rho = Field(grid, fields["initial.u"].values + fields["initial.w"].values)
        initial = {"rho0": rho}
    else:
        initial = {"u0": fields["initial.u"], "w0": fields["initial.w"]}
        if m.kind == "SPD":
            initial["p0"] = fields.get("initial.p")
            initial["c0"] = fields.get("initial.c")

    logger.debug(f"Built scenario '{scenario.name}' on {grid.nx}x{grid.ny}")
    return Problem(
        params=params,
        initial=initial,
        t_end=scenario.run.t_end,
        snapshot_every=scenario.run.snapshot_every,
        dt_max=scenario.run.dt_max,
        blowup_factor=m.blowup_factor,
    )
