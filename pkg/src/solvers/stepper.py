from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional
import math
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import factorized
from loguru import logger

from config import settings
from src.mesh.grid import Grid, Field, FaceVelocity
from src.mesh.operators import neumann_matrix, upwind_div
from src.solvers.errors import CflViolationError, ConvergenceError

SPEED_FLOOR = 1e-12


#Configuration for one implicit-explicit step of f' - D Lap f + div(f vel) = -r f + s
@dataclass(frozen=True)
class StepSpec:
    D: float #diffusivity, length^2/time
    dt: float
    cfl: float = field(default_factory=lambda: settings.cfl)
    sink: Optional[Field] = None #r >= 0, 1/time
    source: Optional[Field] = None #s >= 0, density/time
    rel_tol: float = field(default_factory=lambda: settings.implicit_rel_tol)

    def __post_init__(self):
        if not (self.D > 0 and math.isfinite(self.D)):
            raise ValueError(f"diffusivity must be > 0, got {self.D}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (0 < self.cfl < 1):
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")


def _check_cfl(cfl: float) -> None:
    if not (0 < cfl < 1):
        raise ValueError(f"cfl must lie in (0, 1), got {cfl}")


#Largest dt allowed by the upwind CFL condition, never above dt_max
def cfl_dt(vel: FaceVelocity, grid: Grid, cfl: float = None, dt_max: float = None) -> float:
    cfl = settings.cfl if cfl is None else cfl
    dt_max = settings.dt_max if dt_max is None else dt_max
    _check_cfl(cfl)
    speed = max(vel.max_speed(), SPEED_FLOOR)
    return min(cfl * min(grid.dx, grid.dy) / speed, dt_max)


#Largest dt keeping the explicit part nonnegative: dt * (cell outflow rate + r) <= 1
def positivity_dt(vel: FaceVelocity, grid: Grid, sink: Optional[Field] = None, dt_max: float = None) -> float:
    dt_max = settings.dt_max if dt_max is None else dt_max
    outflow = (
        np.maximum(vel.vx[:, 1:], 0.0) / grid.dx
        + np.maximum(-vel.vx[:, :-1], 0.0) / grid.dx
        + np.maximum(vel.vy[1:, :], 0.0) / grid.dy
        + np.maximum(-vel.vy[:-1, :], 0.0) / grid.dy
    )
    if sink is not None:
        outflow = outflow + sink.values
    rate = float(outflow.max())
    if rate <= 0:
        return dt_max
    return min(1.0 / rate, dt_max)


#Snap dt down onto the ladder dt_max / 2^k so cached factorizations get reused
def ladder_dt(target: float, dt_max: float = None) -> float:
    dt_max = settings.dt_max if dt_max is None else dt_max
    if target <= 0:
        raise ValueError(f"target dt must be > 0, got {target}")
    if target >= dt_max:
        return dt_max
    k = math.ceil(math.log2(dt_max / target))
    dt = dt_max / 2 ** k
    while dt > target:
        dt /= 2
    return dt


#Cached sparse LU of I + a*L where L is the Neumann -Laplacian and a = dt*D
@lru_cache(maxsize=32)
def _implicit_factor(grid: Grid, a: float) -> Callable[[np.ndarray], np.ndarray]:
    logger.debug(f"Factorizing implicit diffusion matrix on {grid.nx}x{grid.ny}, dt*D={a:.3e}")
    matrix = sp.identity(grid.size, format="csc") + a * neumann_matrix(grid).tocsc()
    return factorized(matrix.tocsc())


def _implicit_matrix(grid: Grid, a: float) -> sp.csr_matrix:
    return sp.identity(grid.size, format="csr") + a * neumann_matrix(grid)


#Solve (I - dt D Lap_h) x = rhs to the configured residual
def implicit_diffusion_solve(rhs: Field, a: float, rel_tol: float = None) -> Field:
    rel_tol = settings.implicit_rel_tol if rel_tol is None else rel_tol
    b = rhs.flat
    # a constant right-hand side is its own solution (constants lie in the Laplacian kernel)
    if np.ptp(b) == 0.0:
        return rhs
    grid = rhs.grid
    solve = _implicit_factor(grid, a)
    x = solve(b)
    scale = max(float(np.linalg.norm(b)), 1e-300)
    matrix = _implicit_matrix(grid, a)
    residual = float(np.linalg.norm(matrix @ x - b)) / scale
    if residual > rel_tol:
        x = x + solve(b - matrix @ x)
        residual = float(np.linalg.norm(matrix @ x - b)) / scale
    if residual > rel_tol:
        raise ConvergenceError("implicit diffusion solve did not converge", residual, 1)
    return Field(grid, x)


#One IMEX step: implicit diffusion, explicit upwind convection, explicit reaction.
#Raises CflViolationError when dt exceeds the CFL bound or positivity_dt for this drift and sink
def imex_step(f: Field, vel: FaceVelocity, spec: StepSpec) -> Field:
    grid = f.grid
    dt = spec.dt

    speed = vel.max_speed()
    if speed > 0:
        admissible = spec.cfl * min(grid.dx, grid.dy) / speed
        if dt > admissible * (1 + 1e-12):
            raise CflViolationError(dt, admissible)

    explicit = f.values.copy()
    if speed > 0:
        explicit -= dt * upwind_div(f, vel).values
    if spec.sink is not None:
        r = spec.sink.values
        if r.min() < 0:
            raise ValueError("reaction sink must be nonnegative")
        if dt * r.max() > 1 + 1e-12:
            raise ValueError(f"reaction cap violated: r*dt = {dt * r.max():.3e} > 1")
        explicit -= dt * r * f.values

    # the CFL bound alone lets a divergent drift empty a cell below zero
    if speed > 0:
        positive = positivity_dt(vel, grid, spec.sink, dt_max=math.inf)
        if dt > positive * (1 + 1e-12):
            raise CflViolationError(dt, positive)

    if spec.source is not None:
        s = spec.source.values
        if s.min() < 0:
            raise ValueError("reaction source must be nonnegative")
        explicit += dt * s

    return implicit_diffusion_solve(Field(grid, explicit), dt * spec.D, spec.rel_tol)
