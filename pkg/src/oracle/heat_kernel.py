"""
Free-space heat kernel and the Duhamel representation

    phi(t) = K(t) * phi0 + int_0^t K(t - s) * f(s) ds,   K(t, x) = (4 pi t)^(-n/2) exp(-|x|^2 / 4t)

evaluated on the cells of a grid by direct quadrature. The Gaussian factorizes
per axis, so a convolution is two small matrix products. The result is the
free-space solution restricted to the grid: data must sit well inside it.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union
import math
import os
import numpy as np
from loguru import logger

from config import settings
from src.mesh.grid import Field, Grid
from src.mesh.operators import integrate

SourceLike = Union[Field, Callable[[float], Field], None]


#Point query of the kernel: time t > 0, position x in R^n
@dataclass(frozen=True)
class KernelQuery:
    t: float
    x: Sequence[float]
    n: int = 2

    def __post_init__(self):
        if not (self.t > 0):
            raise ValueError(f"heat kernel needs t > 0, got {self.t}")
        if len(self.x) != self.n:
            raise ValueError(f"point has {len(self.x)} coordinates, dimension is {self.n}")


#K(t, x) for squared distances r2 (vectorized)
def kernel_values(t: float, r2: np.ndarray, n: int = 2) -> np.ndarray:
    if not (t > 0):
        raise ValueError(f"heat kernel needs t > 0, got {t}")
    return (4.0 * math.pi * t) ** (-n / 2.0) * np.exp(-np.asarray(r2) / (4.0 * t))


def heat_kernel(query: KernelQuery) -> float:
    r2 = float(sum(c * c for c in query.x))
    return float(kernel_values(query.t, r2, query.n))


#sum_m h * K_1(t, m h) over the truncated lattice; tends to 1 once sqrt(t) >> h
def _lattice_sum(h: float, t: float, truncation: float) -> float:
    reach = int(math.floor(truncation * math.sqrt(t) / h))
    m = np.arange(-reach, reach + 1, dtype=float)
    return float(np.sum(h * kernel_values(t, (m * h) ** 2, n=1)))


#1D quadrature matrix: row i holds h * K_1(t, x_i - x_k) / lattice sum, zero beyond the truncation radius
def _axis_matrix(centers: np.ndarray, h: float, t: float, truncation: float) -> np.ndarray:
    d = centers[:, None] - centers[None, :]
    weights = h * kernel_values(t, d * d, n=1)
    weights[np.abs(d) > truncation * math.sqrt(t)] = 0.0
    # every column away from the walls sums to exactly 1, so interior mass is kept for any t
    return weights / _lattice_sum(h, t, truncation)


#K(t) * phi restricted to the grid
def convolve(phi: Field, t: float, truncation: float = None) -> Field:
    truncation = settings.kernel_truncation if truncation is None else truncation
    grid = phi.grid
    kx = _axis_matrix(grid.x_centers(), grid.dx, t, truncation)
    ky = _axis_matrix(grid.y_centers(), grid.dy, t, truncation)
    return Field(grid, ky @ phi.values @ kx.T)


#Mass within `cells` cells of the boundary
def boundary_mass(f: Field, cells: int = 3) -> float:
    mask = np.zeros(f.grid.shape, dtype=bool)
    mask[:cells, :] = mask[-cells:, :] = True
    mask[:, :cells] = mask[:, -cells:] = True
    return float(np.abs(f.values[mask]).sum()) * f.grid.cell_area


def _warn_if_touching(f: Field, label: str) -> bool:
    total = float(np.abs(f.values).sum()) * f.grid.cell_area
    edge = boundary_mass(f)
    if total > 0 and edge > 1e-8 * total:
        logger.warning(
            f"{label} has mass {edge:.3e} within 3 cells of the boundary "
            f"(total {total:.3e}); the free-space result is truncated"
        )
        return True
    return False


def _source_at(source: SourceLike, s: float, grid: Grid) -> Optional[Field]:
    if source is None:
        return None
    field = source(s) if callable(source) else source
    if field.grid != grid:
        raise ValueError("source lives on a different grid")
    return field


#Free-space solution of phi' - Lap phi = f at time t
def duhamel_solve(phi0: Field, f: SourceLike, t: float, grid: Optional[Grid] = None,
                  substeps: int = None, truncation: float = None) -> Field:
    substeps = settings.duhamel_substeps if substeps is None else substeps
    if not (t > 0):
        raise ValueError(f"duhamel_solve needs t > 0, got {t}")
    if grid is not None and phi0.grid != grid:
        raise ValueError("initial datum lives on a different grid")
    grid = phi0.grid
    _warn_if_touching(phi0, "initial datum")

    result = convolve(phi0, t, truncation).values
    if f is not None:
        h = t / substeps
        nodes = [(k + 0.5) * h for k in range(substeps)]

        def term(s: float) -> np.ndarray:
            source = _source_at(f, s, grid)
            return h * convolve(source, t - s, truncation).values

        workers = settings.threads or os.cpu_count() or 1
        with ThreadPoolExecutor(max_workers=workers) as pool:
            terms = list(pool.map(term, nodes))
        # fixed summation order keeps the result independent of the thread count
        for contribution in terms:
            result = result + contribution

    out = Field(grid, result)
    _warn_if_touching(out, "Duhamel solution")
    logger.debug(f"Duhamel solve to t = {t} on {grid.nx}x{grid.ny}, mass {integrate(out):.6e}")
    return out


#Centered Gaussian with per-axis variance `variance` and unit peak, on a grid
def gaussian_datum(grid: Grid, variance: float, center: Optional[Sequence[float]] = None) -> Field:
    cx, cy = center if center is not None else (grid.lx / 2, grid.ly / 2)
    x, y = grid.mesh()
    return Field(grid, np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * variance)))


#Exact free-space evolution of gaussian_datum: variance grows by 2t, amplitude by s0/(s0 + 2t)
def gaussian_solution(grid: Grid, variance: float, t: float, center: Optional[Sequence[float]] = None) -> Field:
    grown = variance + 2.0 * t
    return Field(grid, (variance / grown) * gaussian_datum(grid, grown, center).values)
