from dataclasses import dataclass
import math
import numpy as np
from scipy.optimize import minimize_scalar
from loguru import logger

from config import settings
from src.diagnostics.norms import TimeSeries

BETA_GRID = np.linspace(0.0, 3.0, 601)
MIN_POINTS = 10


#Upper envelope C (1 + t^-beta); at beta = 0 it is the constant 2C
@dataclass(frozen=True)
class Envelope:
    C: float
    beta: float
    within_10pct: float = math.nan #fraction of fitted points within 10% of the envelope
    max_overshoot: float = math.nan #max relative gap envelope/value - 1
    n_points: int = 0

    def __post_init__(self):
        if not (self.C > 0 and math.isfinite(self.C)):
            raise ValueError(f"envelope constant must be > 0, got {self.C}")
        if not self.beta >= 0:
            raise ValueError(f"envelope exponent must be >= 0, got {self.beta}")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ValueError("envelopes are evaluated for t > 0 only")
        out = self.C * (1.0 + t ** (-self.beta))
        return float(out) if out.ndim == 0 else out

    def dominates(self, series: TimeSeries, rel_tol: float = 1e-12) -> bool:
        return bool(np.all(self.value(series.t) >= series.values * (1 - rel_tol)))


#Nominal exponent plus the "slightly bigger" margin: 1/gamma' for finite gamma, 1 for the max norm
def nominal_beta(gamma: float, eps_plus: float = None) -> float:
    eps_plus = settings.eps_plus if eps_plus is None else eps_plus
    if math.isinf(gamma):
        return 1.0 + eps_plus
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return (1.0 - 1.0 / gamma) + eps_plus


def _constant_for(beta: float, t: np.ndarray, v: np.ndarray) -> float:
    return float(np.max(v / (1.0 + t ** (-beta))))


def _overshoot(beta: float, t: np.ndarray, v: np.ndarray, floor: float) -> float:
    C = _constant_for(beta, t, v)
    return float(np.max((C * (1.0 + t ** (-beta)) - v) / np.maximum(v, floor)))


#Smallest-overshoot upper envelope over t >= t_min; every fitted point is dominated
def fit_envelope(series: TimeSeries, t_min: float = None) -> Envelope:
    """
    Fit C (1 + t^-beta) from above.

    C is always the coefficient of that form, never the envelope's value. A
    constant series v0 therefore comes back as beta = 0 with C = v0 / 2, and
    the envelope value C (1 + t^0) = v0 is the constant itself.
    """
    t_min = settings.envelope_t_min if t_min is None else t_min
    if not np.all(np.isfinite(series.values)) or not np.all(np.isfinite(series.t)):
        raise ValueError(f"series '{series.label}' contains NaN or Inf")
    data = series.after(max(t_min, np.nextafter(0.0, 1.0)))
    if len(data) < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points with t >= {t_min}, got {len(data)}")
    t, v = data.t, data.values
    if np.any(v < 0):
        raise ValueError(f"series '{series.label}' has negative values")
    if v.max() <= 0:
        raise ValueError(f"series '{series.label}' is identically zero")
    floor = 1e-12 * float(v.max())

    scores = np.array([_overshoot(b, t, v, floor) for b in BETA_GRID])
    best = int(np.argmin(scores))
    beta = float(BETA_GRID[best])

    step = BETA_GRID[1] - BETA_GRID[0]
    lo, hi = max(0.0, beta - step), beta + step
    refined = minimize_scalar(
        lambda b: _overshoot(b, t, v, floor), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
    )
    if refined.success and refined.fun < scores[best]:
        beta = float(refined.x)

    C = _constant_for(beta, t, v)
    ratio = C * (1.0 + t ** (-beta)) / np.maximum(v, floor)
    envelope = Envelope(
        C=C,
        beta=beta,
        within_10pct=float(np.mean(ratio <= 1.1)),
        max_overshoot=float(ratio.max() - 1.0),
        n_points=len(t),
    )
    logger.debug(f"Envelope fit for '{series.label}': C = {C:.6e}, beta = {beta:.4f}")
    return envelope
