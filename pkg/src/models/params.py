from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional
import math
import numpy as np
from loguru import logger

from config import settings
from src.mesh.grid import Grid, Field
from src.mesh.operators import boundary_normal_drift, integrate
from src.solvers.errors import HypothesisError

MODEL_KINDS = ("FPD", "SPD", "KS")

HYPOTHESIS_H = "Hypothesis (H)"
HYPOTHESIS_H_PLUS = "Hypothesis (H+)"
FINITE_MASS = "Eq. (FinMass)"
NEST_DRIFT = "Eq. (nv+)"


#Physical constants and coefficient fields of one model
@dataclass(frozen=True)
class ModelParams:
    kind: str
    grid: Grid
    D_w: float = 1.0
    D_p: float = 1.0
    chi: float = 1.0
    delta: float = 1.0
    N: Optional[Field] = None #nest rate, 1/time
    P: Optional[Field] = None #deposition rate, defaults to 1
    c: Optional[Field] = None #food: static rate for FPD, initial food for SPD
    v: Optional[Field] = None #nest potential, drift is grad v
    food_feedback: bool = True
    blowup_threshold: Optional[float] = None #absolute max(rho) that raises the growth flag
    elliptic_rel_tol: float = field(default_factory=lambda: settings.elliptic_rel_tol)
    cfl: float = field(default_factory=lambda: settings.cfl)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"model kind must be one of {MODEL_KINDS}, got '{self.kind}'")
        defaults = {"N": 0.0, "P": 1.0, "c": 0.0, "v": 0.0}
        for name, value in defaults.items():
            current = getattr(self, name)
            if current is None:
                object.__setattr__(self, name, Field.constant(self.grid, value))
            elif current.grid != self.grid:
                raise ValueError(f"coefficient field '{name}' lives on a different grid")

    def with_blowup_threshold(self, threshold: float) -> "ModelParams":
        return replace(self, blowup_threshold=threshold)


#Full state of one model at time t; unused fields stay None
@dataclass(frozen=True)
class SimState:
    t: float
    u: Optional[Field] = None
    w: Optional[Field] = None
    p: Optional[Field] = None
    c: Optional[Field] = None
    rho: Optional[Field] = None
    phi: Optional[Field] = None
    blowup: bool = False #max(rho) crossed the growth threshold

    @property
    def grid(self) -> Grid:
        for f in (self.u, self.rho, self.w, self.p):
            if f is not None:
                return f.grid
        raise ValueError("state carries no fields")

    #Total ant mass (u + w) or KS density mass
    def total_mass(self) -> float:
        if self.rho is not None:
            return integrate(self.rho)
        return integrate(self.u) + integrate(self.w)

    def get(self, name: str) -> Field:
        if name == "u+w":
            return self.u.with_values(self.u.values + self.w.values)
        value = getattr(self, name, None)
        if not isinstance(value, Field):
            raise KeyError(f"field '{name}' is not part of this state")
        return value


def _require_finite(value: float, name: str, hypothesis: str, allow_zero: bool) -> None:
    if not math.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise HypothesisError(f"{name} must be finite and {bound}, got {value}", hypothesis)


def _require_nonnegative(f: Field, name: str, hypothesis: str) -> None:
    if f.min() < 0:
        raise HypothesisError(f"{name} must be nonnegative (min {f.min():.3e})", hypothesis)


#Check (H)/(H+) signs; returns advisory warnings (the nest-drift condition is not fatal)
def validate_params(params: ModelParams) -> List[str]:
    _require_finite(params.D_w, "D_w", HYPOTHESIS_H, allow_zero=False)
    _require_finite(params.D_p, "D_p", HYPOTHESIS_H, allow_zero=False)
    _require_finite(params.chi, "chi", HYPOTHESIS_H, allow_zero=True)
    _require_finite(params.delta, "delta", HYPOTHESIS_H, allow_zero=True)

    if params.kind == "KS":
        return []

    _require_nonnegative(params.N, "N", HYPOTHESIS_H)
    _require_nonnegative(params.c, "c", HYPOTHESIS_H_PLUS if params.kind == "SPD" else HYPOTHESIS_H)
    if params.kind == "SPD":
        _require_nonnegative(params.P, "P", HYPOTHESIS_H_PLUS)

    warnings = []
    drift = boundary_normal_drift(params.v)
    scale = max(1.0, max(float(np.abs(d).max()) for d in drift.values()))
    for wall, values in drift.items():
        worst = float(values.max())
        if worst > 1e-12 * scale:
            message = (
                f"grad v . n = {worst:.3e} > 0 on the {wall} wall: the nest drift points out of the domain "
                f"({NEST_DRIFT} violated)"
            )
            logger.warning(message)
            warnings.append(message)
    return warnings


#Initial populations must be nonnegative with finite positive-or-zero mass
def validate_initial(u0: Field, w0: Field) -> float:
    _require_nonnegative(u0, "initial u", FINITE_MASS)
    _require_nonnegative(w0, "initial w", FINITE_MASS)
    m0 = integrate(u0) + integrate(w0)
    if not math.isfinite(m0):
        raise HypothesisError("initial mass must be finite", FINITE_MASS)
    return m0


#Inputs of one run once the scenario builders have been evaluated
@dataclass
class Problem:
    params: ModelParams
    initial: Dict[str, Field]
    t_end: float
    snapshot_every: int = 10
    dt_max: float = field(default_factory=lambda: settings.dt_max)
    blowup_factor: float = field(default_factory=lambda: settings.blowup_factor)
    warnings: List[str] = field(default_factory=list)
