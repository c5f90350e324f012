"""
Computable right-hand sides of the heat-equation gradient bound and the
advected sup bound.

The constants C_n, C^1_n, C^2_n carry no closed form. They are calibration
inputs: take the largest ratio (measured excess)/(bound term with C = 1) over
a calibration suite and multiply by `settings.bound_safety_factor`. A passing
envelope check therefore validates the functional form, not a sharp constant.
"""

from dataclasses import dataclass, replace
from typing import Iterable, Tuple
import math
from loguru import logger

from config import settings


#Inputs of the gradient bound for phi' - Lap phi = f in R^n
@dataclass(frozen=True)
class BoundParams41:
    q: float #integrability of grad phi, in (n, inf]
    theta: float #in (0, 2]
    grad_phi0_q: float #||grad phi0||_q
    f_l1: float #sup_s ||f(s)||_1
    f_lqt: float #sup over [t/2, t] of ||f(s)||_{q theta / 2}
    t: float
    n: int = 2
    C_n: float = 1.0

    def __post_init__(self):
        n, q, theta = self.n, self.q, self.theta
        if not q > n:
            raise ValueError(f"q must exceed n: q = {q}, n = {n}")
        if not (0 < theta <= 2):
            raise ValueError(f"theta must lie in (0, 2], got {theta}")
        if not theta * q / 2 > 1:
            raise ValueError(f"theta*q/2 > 1 fails: theta*q/2 = {theta * q / 2}")
        if theta < 2 and not theta * q / (2 - theta) > n:
            raise ValueError(f"theta*q/(2-theta) > n fails: {theta * q / (2 - theta)} <= {n}")
        if not self.t > 0:
            raise ValueError(f"t must be > 0, got {self.t}")
        for name in ("grad_phi0_q", "f_l1", "f_lqt", "C_n"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


#Hoelder conjugate q' = q/(q-1), with q = inf giving 1
def conjugate(q: float) -> float:
    return 1.0 if math.isinf(q) else q / (q - 1.0)


#Source-norm exponent (theta/n)(q(n-1)-n)/(theta q - 2); q = inf gives the limit (n-1)/n
def source_exponent(q: float, theta: float, n: int = 2) -> float:
    if math.isinf(q):
        return (n - 1.0) / n
    return (theta / n) * (q * (n - 1) - n) / (theta * q - 2.0)


#Same exponent written through sigma' = q theta/(2 - theta): sigma'(n - q')/(n(sigma' - q'))
def source_exponent_via_sigma(q: float, theta: float, n: int = 2) -> float:
    if theta >= 2 or math.isinf(q):
        return source_exponent(q, theta, n)
    sigma = q * theta / (2.0 - theta)
    qc = conjugate(q)
    return sigma * (n - qc) / (n * (sigma - qc))


#Exponent of the short-time factor 1 + t^(-(n - q')/2q')
def time_exponent(q: float, n: int = 2) -> float:
    qc = conjugate(q)
    return (n - qc) / (2.0 * qc)


#Gradient bound at time t
def bound_lemma41(params: BoundParams41) -> float:
    e = source_exponent(params.q, params.theta, params.n)
    check = source_exponent_via_sigma(params.q, params.theta, params.n)
    if abs(e - check) > 1e-12 * max(1.0, abs(e)):
        logger.error(f"source exponent forms disagree: {e!r} vs {check!r}")
        raise ArithmeticError("source exponent identity failed")
    short_time = 1.0 + params.t ** (-time_exponent(params.q, params.n))
    source = (1.0 + params.f_l1) * params.f_lqt ** e
    return params.grad_phi0_q + params.C_n * short_time * source


#Sup-in-time variant: twice the initial gradient, no short-time factor (T >= 1)
def bound_lemma41_uniform(params: BoundParams41) -> float:
    e = source_exponent(params.q, params.theta, params.n)
    return 2.0 * params.grad_phi0_q + params.C_n * (1.0 + params.f_l1) * params.f_lqt ** e


#(q, theta) that turn the gradient bound into the pheromone control used for L^gamma estimates
def pheromone_exponents(gamma: float) -> Tuple[float, float]:
    if gamma <= 1:
        raise ValueError(f"gamma must be > 1, got {gamma}")
    return 2.0 * (gamma + 1.0), gamma / (gamma + 1.0)


#Sup bound for phi' - Lap phi + div(phi grad v) = f on [0, T], T >= 1
def bound_lemma42(norm_phi0_inf: float, norm_f1: float, norm_phi1: float, norm_f_inf: float,
                  norm_gradv_inf: float, T: float, n: int = 2, C1: float = 1.0, C2: float = 1.0) -> float:
    if T < 1:
        raise ValueError(f"the sup bound holds for T >= 1, got T = {T}")
    for name, value in (("norm_phi0_inf", norm_phi0_inf), ("norm_f1", norm_f1), ("norm_phi1", norm_phi1),
                        ("norm_f_inf", norm_f_inf), ("norm_gradv_inf", norm_gradv_inf)):
        if value < 0:
            raise ValueError(f"{name} must be >= 0, got {value}")
    c1 = C1 * math.log(T + 1.0) if n == 2 else C1
    transport = c1 * (norm_f1 + norm_phi1) * norm_gradv_inf ** n
    source = C2 * norm_f_inf ** ((n - 1.0) / (n + 1.0))
    return 2.0 * norm_phi0_inf + transport + source


#C_n from (measured ||grad phi(t)||_q, params) pairs: safety * max excess over the unit-constant term
def calibrate_lemma41(samples: Iterable[Tuple[float, BoundParams41]], safety: float = None) -> float:
    safety = settings.bound_safety_factor if safety is None else safety
    worst = 0.0
    for measured, params in samples:
        unit = bound_lemma41(_with_constant(params, 1.0)) - params.grad_phi0_q
        if unit > 0:
            worst = max(worst, (measured - params.grad_phi0_q) / unit)
    constant = safety * worst if worst > 0 else safety
    logger.info(f"Calibrated gradient-bound constant C_n = {constant:.4e} (max ratio {worst:.4e})")
    return constant


#Common C1 = C2 from (measured sup ||phi||_inf, bound_lemma42 kwargs) pairs
def calibrate_lemma42(samples: Iterable[Tuple[float, dict]], safety: float = None) -> float:
    safety = settings.bound_safety_factor if safety is None else safety
    worst = 0.0
    for measured, kwargs in samples:
        kwargs = {**kwargs, "C1": 1.0, "C2": 1.0}
        base = 2.0 * kwargs["norm_phi0_inf"]
        unit = bound_lemma42(**kwargs) - base
        if unit > 0:
            worst = max(worst, (measured - base) / unit)
    constant = safety * worst if worst > 0 else safety
    logger.info(f"Calibrated sup-bound constants C1 = C2 = {constant:.4e}")
    return constant


def _with_constant(params: BoundParams41, C: float) -> BoundParams41:
    return replace(params, C_n=C)
