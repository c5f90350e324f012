from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, factorized, LinearOperator
from loguru import logger

from config import settings
from src.mesh.grid import Grid, Field
from src.mesh.operators import neumann_matrix
from src.solvers.errors import ConvergenceError


#Configuration for the screened Poisson solve -Lap p + delta p = w
@dataclass(frozen=True)
class EllipticSpec:
    delta: float = 1.0 #evaporation rate, 1/time
    rel_tol: float = field(default_factory=lambda: settings.elliptic_rel_tol)
    max_iter: int = field(default_factory=lambda: settings.elliptic_max_iter)
    method: str = "cg" #'cg' or 'direct' (delta > 0 only)

    def __post_init__(self):
        if self.delta < 0 or not np.isfinite(self.delta):
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if not (0 < self.rel_tol <= 1e-2):
            raise ValueError(f"rel_tol must lie in (0, 1e-2], got {self.rel_tol}")
        if self.max_iter < 10:
            raise ValueError(f"max_iter must be >= 10, got {self.max_iter}")
        if self.method not in ("cg", "direct"):
            raise ValueError(f"unknown elliptic method '{self.method}'")
        if self.method == "direct" and self.delta == 0:
            raise ValueError("the direct method needs delta > 0 (the pure Neumann matrix is singular)")


#Sparse operator -Lap_h + delta I
@lru_cache(maxsize=16)
def screened_matrix(grid: Grid, delta: float) -> sp.csr_matrix:
    return (neumann_matrix(grid) + delta * sp.identity(grid.size, format="csr")).tocsr()


@lru_cache(maxsize=8)
def _screened_factor(grid: Grid, delta: float) -> Callable[[np.ndarray], np.ndarray]:
    logger.debug(f"Factorizing screened Poisson matrix on {grid.nx}x{grid.ny}, delta={delta}")
    return factorized(screened_matrix(grid, delta).tocsc())


#Pure Neumann operator bordered by the mean-zero constraint; nonsingular, so it factors
@lru_cache(maxsize=8)
def _bordered_factor(grid: Grid) -> Callable[[np.ndarray], np.ndarray]:
    logger.debug(f"Factorizing bordered Neumann matrix on {grid.nx}x{grid.ny}")
    ones = sp.csr_matrix(np.ones((grid.size, 1)))
    bordered = sp.bmat([[neumann_matrix(grid), ones], [ones.T, None]], format="csc")
    return factorized(bordered)


#Sparse LU solve of the screened system; for delta = 0 the result is the mean-zero solution
def _direct_solve(grid: Grid, delta: float, rhs: np.ndarray) -> np.ndarray:
    if delta > 0:
        return _screened_factor(grid, delta)(rhs)
    return _bordered_factor(grid)(np.append(rhs, 0.0))[:-1]


#Jacobi preconditioner for CG
def _jacobi(matrix: sp.csr_matrix) -> LinearOperator:
    inv_diag = 1.0 / matrix.diagonal()
    n = matrix.shape[0]
    return LinearOperator((n, n), matvec=lambda x: inv_diag * x)


def _relative_residual(matrix: sp.csr_matrix, x: np.ndarray, b: np.ndarray, scale: float) -> float:
    return float(np.linalg.norm(matrix @ x - b)) / scale


#Solve -Lap p = w - delta p with homogeneous Neumann walls
def solve_screened_poisson(w: Field, spec: EllipticSpec = EllipticSpec(), initial_guess: Optional[Field] = None) -> Field:
    grid = w.grid
    rhs = w.flat.copy()
    if spec.delta == 0:
        # compatibility: the pure Neumann problem needs a mean-zero source
        rhs -= rhs.mean()

    scale = float(np.linalg.norm(rhs))
    if scale == 0.0:
        return Field.zeros(grid)

    # uniform source with evaporation: the constant w/delta solves the system exactly
    if spec.delta > 0 and np.ptp(rhs) == 0.0:
        return Field.constant(grid, rhs[0] / spec.delta)

    matrix = screened_matrix(grid, spec.delta)
    iterations = 0
    direct = spec.method == "direct"

    if direct:
        p = _direct_solve(grid, spec.delta, rhs)
    else:
        x0 = initial_guess.flat.copy() if initial_guess is not None else None
        counter = {"n": 0}

        def _count(_):
            counter["n"] += 1

        p, info = cg(
            matrix, rhs, x0=x0, rtol=spec.rel_tol, atol=0.0,
            maxiter=spec.max_iter, M=_jacobi(matrix), callback=_count
        )
        iterations = counter["n"]
        if info < 0 or not np.all(np.isfinite(p)):
            # recover a NaN breakdown with the sparse LU
            logger.warning(
                f"CG returned a non-finite iterate after {iterations} iterations "
                f"(delta={spec.delta}); falling back to sparse LU"
            )
            p = _direct_solve(grid, spec.delta, rhs)
            direct = True

    residual = _relative_residual(matrix, p, rhs, scale)

    # the recursive CG residual can drift from the true one; refine on the true residual
    refinements = 0
    while residual > spec.rel_tol and refinements < 3 and iterations < spec.max_iter:
        correction_rhs = rhs - matrix @ p
        if direct:
            correction = _direct_solve(grid, spec.delta, correction_rhs)
        else:
            counter = {"n": 0}
            correction, _ = cg(
                matrix, correction_rhs, rtol=spec.rel_tol * scale / max(np.linalg.norm(correction_rhs), 1e-300),
                atol=0.0, maxiter=spec.max_iter - iterations, M=_jacobi(matrix),
                callback=lambda _: counter.__setitem__("n", counter["n"] + 1)
            )
            iterations += counter["n"]
        p = p + correction
        residual = _relative_residual(matrix, p, rhs, scale)
        refinements += 1

    # NaN compares False against any tolerance, so test finiteness explicitly
    if not np.all(np.isfinite(p)) or not np.isfinite(residual):
        logger.error(f"Screened Poisson solve produced a non-finite result (delta={spec.delta})")
        raise ConvergenceError("screened Poisson solve produced NaN or Inf", float("nan"), iterations)
    if residual > spec.rel_tol:
        logger.error(f"Screened Poisson solve failed: residual {residual:.3e} > {spec.rel_tol:.1e}")
        raise ConvergenceError("screened Poisson solve did not converge", residual, iterations)

    if spec.delta == 0:
        # gauge: the solution is unique up to a constant
        p = p - p.mean()

    logger.debug(f"Screened Poisson solved (delta={spec.delta}, iterations={iterations}, residual={residual:.2e})")
    return Field(grid, p)
