from typing import Dict
import numpy as np
from loguru import logger

from src.mesh.grid import Field, Grid
from src.mesh.operators import face_gradient_energy, integrate
from src.scenario.builders import random_bumps_values

STABILIZATION_WARMUP = 100
STABILIZATION_FACTOR = 3.0


#int f^(a+1) / (int f * (int f^a + int |grad f^(a/2)|^2))
def gns_ratio(f: Field, alpha: float) -> float:
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    values = f.values
    if values.min() < -1e-12 * max(1.0, float(np.abs(values).max())):
        raise ValueError("gns_ratio needs a nonnegative field")
    values = np.maximum(values, 0.0)
    if not values.any():
        raise ValueError("gns_ratio is undefined for the zero field")

    mass = integrate(f.with_values(values))
    top = integrate(f.with_values(values ** (alpha + 1.0)))
    power = integrate(f.with_values(values ** alpha))
    energy = face_gradient_energy(f.with_values(values ** (alpha / 2.0)))
    return top / (mass * (power + energy))


#Random smooth nonnegative fields: 1-5 bumps of random width and height
def random_smooth_field(grid: Grid, rng: np.random.Generator) -> Field:
    count = int(rng.integers(1, 6))
    sigma = float(rng.uniform(0.03, 0.15)) * min(grid.lx, grid.ly)
    amplitude = float(rng.uniform(0.5, 5.0))
    return Field(grid, random_bumps_values(grid, count, sigma, amplitude, rng))


#Empirical sup of the ratio; stable when no sample after the warmup exceeds 3x the running max
def gns_study(grid: Grid, alpha: float, n_samples: int = 1000, seed: int = 0) -> Dict:
    rng = np.random.default_rng(seed)
    ratios = np.array([gns_ratio(random_smooth_field(grid, rng), alpha) for _ in range(n_samples)])
    running = np.maximum.accumulate(ratios)

    outliers = [
        i for i in range(STABILIZATION_WARMUP, n_samples)
        if ratios[i] > STABILIZATION_FACTOR * running[i - 1]
    ]
    stabilized = not outliers
    logger.info(
        f"GNS study alpha = {alpha}: sup ratio {running[-1]:.4e} over {n_samples} fields, "
        f"{'stable' if stabilized else f'{len(outliers)} late outliers'}"
    )
    return {
        "alpha": alpha,
        "n_samples": n_samples,
        "constant": float(running[-1]),
        "ratios": ratios,
        "running_max": running,
        "late_outliers": outliers,
        "stabilized": stabilized,
    }
