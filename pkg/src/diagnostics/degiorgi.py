"""
Level-set energies of the truncations w_k = (w - lambda_k)_+ with

    lambda_k = (1 - 2^-k) M,   t_k = (1 - 2^-(k+1)) t_star,
    W_k = sup_{t in [t_k, T]} int w_k^2 + int_{t_k}^T int |grad w_k|^2.

Geometric decay of W_k in k is the numerical counterpart of an L^inf bound
by M on [t_star, T].
"""

from dataclasses import dataclass
import math
import numpy as np
from scipy.integrate import trapezoid
from loguru import logger

from config import settings
from src.mesh.operators import face_gradient_energy, integrate

MIN_WINDOW_SNAPSHOTS = 5


@dataclass(frozen=True)
class LevelSetEnergySeries:
    M: float
    t_star: float
    T: float
    k_max: int
    values: np.ndarray #W_0 .. W_kmax

    @property
    def levels(self) -> np.ndarray:
        return level(np.arange(self.k_max + 1), self.M)

    @property
    def times(self) -> np.ndarray:
        return level_time(np.arange(self.k_max + 1), self.t_star)

    #W_{k+1}/W_k, zero once the energies vanish
    @property
    def ratios(self) -> np.ndarray:
        prev, nxt = self.values[:-1], self.values[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(prev > 0, nxt / prev, 0.0)

    def max_ratio(self, k_from: int = 2) -> float:
        ratios = self.ratios[k_from:]
        return float(ratios.max()) if ratios.size else 0.0

    #Number of nonzero W_k for k >= k_from; a decay ratio only means something over these
    def active(self, k_from: int = 0) -> int:
        return int(np.count_nonzero(self.values[k_from:] > 0))

    def is_monotone(self, rel_tol: float = 1e-12) -> bool:
        slack = rel_tol * max(float(self.values[0]), 0.0)
        return bool(np.all(np.diff(self.values) <= slack))


def level(k, M: float):
    return (1.0 - 2.0 ** (-np.asarray(k, dtype=float))) * M


def level_time(k, t_star: float):
    return (1.0 - 2.0 ** (-(np.asarray(k, dtype=float) + 1.0))) * t_star


#W_0..W_kmax of the recorded population `which` (w by default)
def degiorgi_energy(traj, M: float, t_star: float, k_max: int = None, which: str = "w") -> LevelSetEnergySeries:
    k_max = settings.degiorgi_k_max if k_max is None else k_max
    if not (M > 0 and math.isfinite(M)):
        raise ValueError(f"level M must be > 0, got {M}")
    times = np.asarray(traj.times, dtype=float)
    if times.size == 0:
        raise ValueError("trajectory has no snapshots")
    T = float(times[-1])
    if not (0 < t_star < T):
        raise ValueError(f"need 0 < t_star < T, got t_star = {t_star}, T = {T}")
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")

    last_window = times >= level_time(k_max, t_star)
    if int(last_window.sum()) < MIN_WINDOW_SNAPSHOTS:
        raise ValueError(
            f"insufficient snapshot cadence: {int(last_window.sum())} snapshots in "
            f"[{level_time(k_max, t_star):.4g}, {T:.4g}], need {MIN_WINDOW_SNAPSHOTS}"
        )

    fields = [state.get(which) for state in traj.states]
    values = np.zeros(k_max + 1)
    for k in range(k_max + 1):
        lam = float(level(k, M))
        window = np.nonzero(times >= level_time(k, t_star))[0]
        sup_l2 = 0.0
        energies = []
        for i in window:
            f = fields[i]
            truncated = f.with_values(np.maximum(f.values - lam, 0.0))
            sup_l2 = max(sup_l2, integrate(truncated.with_values(truncated.values ** 2)))
            energies.append(face_gradient_energy(truncated))
        gradient_term = float(trapezoid(energies, times[window])) if len(window) > 1 else 0.0
        values[k] = sup_l2 + gradient_term

    logger.debug(f"Level-set energies for M = {M:.4e}: {values}")
    return LevelSetEnergySeries(M=M, t_star=t_star, T=T, k_max=k_max, values=values)


#sup of the recorded population over the snapshots in [t_star, T]: the tightest level the bound can certify.
#With M at this value every lambda_k < M is exceeded somewhere on [t_k, T], so no W_k vanishes
def late_sup(traj, t_star: float, which: str = "w") -> float:
    peaks = [state.get(which).max() for t, state in zip(traj.times, traj.states) if t >= t_star]
    if not peaks:
        raise ValueError(f"no snapshots at or after t_star = {t_star}")
    return float(max(peaks))


#Level M making the energy iteration contract, (1/2)+ realized as 0.5 + eps_plus
def degiorgi_threshold(W0: float, t_star: float, T: float, q: float = None, a: float = None,
                       C: float = None, eps_plus: float = None) -> float:
    q = settings.degiorgi_q if q is None else q
    a = settings.degiorgi_a if a is None else a
    C = settings.degiorgi_constant if C is None else C
    eps_plus = settings.eps_plus if eps_plus is None else eps_plus
    if W0 < 0:
        raise ValueError(f"W0 must be >= 0, got {W0}")
    if not t_star > 0 or not T > 0:
        raise ValueError(f"t_star and T must be > 0, got {t_star}, {T}")
    if not (0 < a < 1):
        raise ValueError(f"a must lie in (0, 1), got {a}")
    if not q > 1:
        raise ValueError(f"q must be > 1, got {q}")
    if not C > 0:
        raise ValueError(f"C must be > 0, got {C}")
    if W0 == 0:
        return 0.0

    scale = 2.0 * C * (1.0 + T)
    first = math.sqrt(scale * W0 / (a * a * t_star))
    second = math.sqrt(scale ** (q / (q + 1.0)) * W0 ** (1.0 / (q + 1.0)) / a) * 2.0 / t_star ** (0.5 + eps_plus)
    return max(first, second)
