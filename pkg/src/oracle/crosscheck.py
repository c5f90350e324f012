"""
Cross-validation of the diffusion stepper against the free-space heat kernel.

Every check returns a dict with 'status' ('pass' or 'fail'), the measured
discrepancy and the tolerance it was held to; `oracle_suite` runs them all.
"""

from dataclasses import dataclass, replace
from typing import Dict, List, Sequence, Tuple
import traceback
import numpy as np
from loguru import logger

from src.diagnostics.norms import gradient_magnitude
from src.mesh.grid import FaceVelocity, Field, Grid, make_grid
from src.mesh.operators import integrate, lp_norm
from src.oracle.bounds import BoundParams41, bound_lemma41, calibrate_lemma41
from src.oracle.heat_kernel import convolve, duhamel_solve, gaussian_datum, gaussian_solution
from src.solvers.stepper import StepSpec, imex_step


#Pure-diffusion configuration shared by the stepper and kernel checks
@dataclass(frozen=True)
class DiffusionCase:
    n: int = 256
    length: float = 5.0
    variance: float = 0.1
    t: float = 0.05
    dt: float = 1e-4
    tol: float = 5e-3

    @property
    def grid(self) -> Grid:
        return make_grid(self.n, self.n, self.length, self.length)


QUICK_CASE = DiffusionCase(n=128, length=6.0, variance=0.2, dt=2e-4)


def _result(discrepancy: float, tol: float, **details) -> Dict:
    ok = discrepancy <= tol
    return {"status": "pass" if ok else "fail", "discrepancy": discrepancy, "tol": tol, **details}


#imex_step pure diffusion of a compact Gaussian vs duhamel_solve at the same time
def stepper_crosscheck(case: DiffusionCase = DiffusionCase()) -> Dict:
    grid = case.grid
    phi0 = gaussian_datum(grid, case.variance)
    steps = int(round(case.t / case.dt))
    spec = StepSpec(D=1.0, dt=case.t / steps)
    still = FaceVelocity.zeros(grid)

    phi = phi0
    for _ in range(steps):
        phi = imex_step(phi, still, spec)

    reference = duhamel_solve(phi0, None, case.t)
    discrepancy = float(np.abs(phi.values - reference.values).max())
    logger.info(f"Stepper vs kernel on {case.n}^2, {steps} steps: max discrepancy {discrepancy:.3e}")
    return _result(discrepancy, case.tol, steps=steps, n=case.n)


#K(t) * K(s) * phi0 = K(t + s) * phi0, and both match the closed-form Gaussian evolution
def semigroup_check(case: DiffusionCase = DiffusionCase(n=128), s: float = 0.02, t: float = 0.03,
                    tol: float = 1e-6) -> Dict:
    grid = case.grid
    phi0 = gaussian_datum(grid, case.variance)
    composed = convolve(convolve(phi0, s), t).values
    direct = convolve(phi0, s + t).values
    exact = gaussian_solution(grid, case.variance, s + t).values
    discrepancy = float(max(np.abs(composed - direct).max(), np.abs(direct - exact).max()))
    return _result(discrepancy, tol)


#Relative mass defect of one kernel convolution of interior data
def mass_check(case: DiffusionCase = DiffusionCase(n=128), tol: float = 1e-6) -> Dict:
    phi0 = gaussian_datum(case.grid, case.variance)
    m0 = integrate(phi0)
    m1 = integrate(convolve(phi0, case.t))
    return _result(abs(m1 - m0) / m0, tol, m0=m0)


#Gradient-bound inputs and the measured ||grad phi(t)||_q for one datum/source pair
def _gradient_samples(grid: Grid, shift: Tuple[int, int], times: Sequence[float], q: float,
                      theta: float) -> List[Tuple[float, BoundParams41]]:
    cx = 0.5 * grid.lx + shift[0] * grid.dx
    cy = 0.5 * grid.ly + shift[1] * grid.dy
    phi0 = gaussian_datum(grid, 0.05, (cx, cy))
    source = Field(grid, 0.5 * gaussian_datum(grid, 0.05, (cx + 0.3, cy - 0.2)).values)

    grad0 = lp_norm(gradient_magnitude(phi0), q)
    f_l1 = integrate(source)
    f_lqt = lp_norm(source, q * theta / 2.0)
    samples = []
    for t in times:
        phi = duhamel_solve(phi0, source, t)
        measured = lp_norm(gradient_magnitude(phi), q)
        samples.append((measured, BoundParams41(q, theta, grad0, f_l1, f_lqt, t)))
    return samples


#Calibrate the gradient-bound constant on one run and hold it fixed over shifted variants
def gradient_bound_check(n: int = 160, length: float = 8.0, q: float = 4.0, theta: float = 1.0,
                         times: Sequence[float] = (0.02, 0.05, 0.1), variants: int = 10) -> Dict:
    grid = make_grid(n, n, length, length)
    constant = calibrate_lemma41(_gradient_samples(grid, (0, 0), times, q, theta))

    rng = np.random.default_rng(7)
    worst = 0.0
    violations = 0
    for _ in range(variants):
        shift = tuple(int(k) for k in rng.integers(-10, 11, size=2))
        for measured, params in _gradient_samples(grid, shift, times, q, theta):
            bound = bound_lemma41(replace(params, C_n=constant))
            worst = max(worst, measured / bound)
            violations += int(measured > bound)
    logger.info(f"Gradient bound: C_n = {constant:.4e}, worst measured/bound = {worst:.4f}")
    return {
        "status": "pass" if violations == 0 else "fail",
        "C_n": constant,
        "worst_ratio": worst,
        "violations": violations,
    }


#All kernel checks; quick mode shrinks the stepper comparison
def oracle_suite(quick: bool = False) -> Dict:
    case = QUICK_CASE if quick else DiffusionCase()
    checks = {
        "stepper_vs_kernel": lambda: stepper_crosscheck(case),
        "semigroup": semigroup_check,
        "kernel_mass": mass_check,
        "gradient_bound": gradient_bound_check,
    }
    results = {}
    for name, check in checks.items():
        try:
            results[name] = check()
        except Exception as e:
            logger.error(f"Oracle check '{name}' failed to run: {e}")
            logger.error(f"Traceback: {traceback.format_exc()}")
            results[name] = {"status": "error", "error": str(e)}
        logger.info(f"Oracle check '{name}': {results[name]['status']}")

    failed = [name for name, result in results.items() if result["status"] != "pass"]
    return {"status": "fail" if failed else "pass", "failed": failed, "checks": results}
