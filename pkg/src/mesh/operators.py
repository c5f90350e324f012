"""
Discrete zero-flux operators on the cell-centered grid.

Every operator is written in divergence (face-flux) form, so the cell sums
of the Laplacian and of the upwind divergence telescope to zero: what leaves
one cell through a face enters its neighbour, and wall faces carry nothing.
"""

from functools import lru_cache
from typing import Dict
import math
import numpy as np
import scipy.sparse as sp

from src.mesh.grid import Grid, Field, FaceVelocity


#5-point Laplacian with homogeneous Neumann walls (ghost cells mirror the boundary cell)
def laplacian_neumann(f: Field) -> Field:
    g = f.grid
    padded = np.pad(f.values, 1, mode="edge")
    # face differences; the mirrored ghost makes wall differences exactly zero
    fx = (padded[1:-1, 1:] - padded[1:-1, :-1]) / g.dx
    fy = (padded[1:, 1:-1] - padded[:-1, 1:-1]) / g.dy
    lap = (fx[:, 1:] - fx[:, :-1]) / g.dx + (fy[1:, :] - fy[:-1, :]) / g.dy
    return f.with_values(lap)


#Centered face differences; wall-normal components are zero
def gradient_faces(f: Field) -> FaceVelocity:
    g = f.grid
    vx = np.zeros((g.ny, g.nx + 1))
    vy = np.zeros((g.ny + 1, g.nx))
    vx[:, 1:-1] = (f.values[:, 1:] - f.values[:, :-1]) / g.dx
    vy[1:-1, :] = (f.values[1:, :] - f.values[:-1, :]) / g.dy
    return FaceVelocity(g, vx, vy, zero_flux=True)


#First-order donor-cell divergence of f*vel
def upwind_div(f: Field, vel: FaceVelocity) -> Field:
    g = f.grid
    if vel.grid != g:
        raise ValueError("field and velocity live on different grids")
    values = f.values
    floor = -1e-12 * max(1.0, float(np.abs(values).max()))
    if values.min() < floor:
        raise ValueError(f"upwind_div needs a nonnegative density, min = {values.min():.3e}")

    flux_x = np.zeros_like(vel.vx)
    flux_y = np.zeros_like(vel.vy)
    vx = vel.vx[:, 1:-1]
    vy = vel.vy[1:-1, :]
    flux_x[:, 1:-1] = np.maximum(vx, 0.0) * values[:, :-1] + np.minimum(vx, 0.0) * values[:, 1:]
    flux_y[1:-1, :] = np.maximum(vy, 0.0) * values[:-1, :] + np.minimum(vy, 0.0) * values[1:, :]
    # wall fluxes stay zero whatever vel says there
    div = (flux_x[:, 1:] - flux_x[:, :-1]) / g.dx + (flux_y[1:, :] - flux_y[:-1, :]) / g.dy
    return f.with_values(div)


#Discrete integral: cell sum times cell area, fixed summation order
def integrate(f: Field) -> float:
    return float(np.sum(f.values)) * f.grid.cell_area


#L^gamma norm, gamma = math.inf gives the max norm
def lp_norm(f: Field, gamma: float) -> float:
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    magnitude = np.abs(f.values)
    if math.isinf(gamma):
        return float(magnitude.max())
    return float(np.sum(magnitude ** gamma) * f.grid.cell_area) ** (1.0 / gamma)


#Discrete integral of |grad f|^2 from face differences
def face_gradient_energy(f: Field) -> float:
    grad = gradient_faces(f)
    g = f.grid
    return float(np.sum(grad.vx ** 2) + np.sum(grad.vy ** 2)) * g.cell_area


#One-sided outward normal derivative of v on each wall (cells adjacent to the wall)
def boundary_normal_drift(v: Field) -> Dict[str, np.ndarray]:
    g = v.grid
    vals = v.values
    return {
        "west": -(vals[:, 1] - vals[:, 0]) / g.dx,
        "east": (vals[:, -1] - vals[:, -2]) / g.dx,
        "south": -(vals[1, :] - vals[0, :]) / g.dy,
        "north": (vals[-1, :] - vals[-2, :]) / g.dy,
    }


#1D Neumann second-difference matrix (positive semidefinite form of -d2/dx2)
def _neumann_1d(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, 2.0)
    main[0] = main[-1] = 1.0
    off = -np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)


#Sparse -Laplacian with Neumann walls, row-major ordering index = j*nx + i
@lru_cache(maxsize=16)
def neumann_matrix(grid: Grid) -> sp.csr_matrix:
    ix = sp.identity(grid.nx, format="csr")
    iy = sp.identity(grid.ny, format="csr")
    lx = _neumann_1d(grid.nx, grid.dx)
    ly = _neumann_1d(grid.ny, grid.dy)
    return (sp.kron(iy, lx) + sp.kron(ly, ix)).tocsr()
