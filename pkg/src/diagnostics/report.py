from typing import Callable, Dict
import math
import traceback
import numpy as np
from loguru import logger

from config import settings
from src.diagnostics.degiorgi import degiorgi_energy, degiorgi_threshold, late_sup
from src.diagnostics.envelope import fit_envelope, nominal_beta
from src.diagnostics.gns import gns_ratio, gns_study
from src.diagnostics.norms import norm_series
from src.diagnostics.stability import stability_gap
from src.mesh.operators import integrate

ENVELOPE_GAMMAS = (2.0, 4.0, math.inf)
GNS_ALPHAS = (1.0, 2.0, 3.0)
PROPAGATION_GROWTH = 10.0
PROPAGATION_TREND = 1.5


def _passed(ok: bool, **details) -> Dict:
    return {"status": "pass" if ok else "fail", **details}


def _mass_check(traj) -> Dict:
    masses = np.array([state.total_mass() for state in traj.states])
    if traj.series.get("mass_total"):
        masses = np.concatenate([masses, np.asarray(traj.series["mass_total"], dtype=float)])
    m0 = float(masses[0])
    drift = float(np.abs(masses - m0).max())
    limit = settings.mass_tolerance * max(m0, 1e-300)
    return _passed(drift <= limit, m0=m0, max_drift=drift, limit=limit)


def _positivity_check(traj) -> Dict:
    first = traj.states[0]
    scale = max(first.u.max(), first.w.max(), 0.0)
    floor = -settings.positivity_tolerance * scale
    minima = {}
    for name in ("u", "w", "c"):
        if getattr(first, name) is not None:
            minima[f"min_{name}"] = float(min(getattr(s, name).min() for s in traj.states))
    return _passed(all(value >= floor for value in minima.values()), floor=floor, **minima)


def _envelope_check(traj, gamma: float) -> Dict:
    series = norm_series(traj, "u", gamma)
    envelope = fit_envelope(series)
    limit = settings.linf_beta_limit if math.isinf(gamma) else nominal_beta(gamma)
    dominated = envelope.dominates(series.after(settings.envelope_t_min))
    return _passed(
        envelope.beta <= limit and dominated,
        C=envelope.C,
        beta=envelope.beta,
        beta_limit=limit,
        dominated=dominated,
        within_10pct=envelope.within_10pct,
    )


#sup-norm of u + w stays within a fixed factor of its start and shows no upward trend
def _propagation_check(traj) -> Dict:
    s = np.array([state.u.max() + state.w.max() for state in traj.states])
    decile = max(1, len(s) // 10)
    first, last = float(s[:decile].mean()), float(s[-decile:].mean())
    ok = s.max() <= PROPAGATION_GROWTH * s[0] and last <= PROPAGATION_TREND * first
    return _passed(bool(ok), initial=float(s[0]), peak=float(s.max()), first_decile=first, last_decile=last)


#Threshold M bounds sup w on [t_star, T]; level-set energies at the observed sup decay geometrically in k
def _degiorgi_check(traj) -> Dict:
    T = float(traj.times[-1])
    t_star = settings.degiorgi_t_star_fraction * T
    W0 = float(degiorgi_energy(traj, 1.0, t_star, k_max=0).values[0])
    M_threshold = degiorgi_threshold(W0, t_star, T)
    sup_w = late_sup(traj, t_star)
    if M_threshold == 0 or sup_w == 0:
        return {"status": "skipped", "reason": "w vanishes on the level-set window"}

    # levels above sup w leave every truncation empty, so the decay is measured at M = sup w
    energies = degiorgi_energy(traj, sup_w, t_star)
    k_from = 2
    active = energies.active(k_from)
    ratio = energies.max_ratio(k_from)
    monotone = energies.is_monotone()
    bounded = sup_w <= M_threshold
    decays = active == energies.k_max + 1 - k_from and ratio <= settings.degiorgi_ratio_limit
    return _passed(
        bounded and monotone and decays,
        M_threshold=M_threshold,
        M=sup_w,
        W=energies.values.tolist(),
        active_terms=active,
        max_ratio=ratio,
        monotone=monotone,
        sup_w=sup_w,
    )


def _gns_check(traj, alpha: float) -> Dict:
    study = gns_study(traj.grid, alpha, n_samples=settings.gns_samples, seed=0)
    final_u = traj.states[-1].u if traj.states[-1].u is not None else traj.states[-1].rho
    details = {"constant": study["constant"], "late_outliers": len(study["late_outliers"])}
    if integrate(final_u) > 0:
        details["final_ratio"] = gns_ratio(final_u, alpha)
    return _passed(study["stabilized"], **details)


def _stability_check(traj, paired) -> Dict:
    gap = stability_gap(traj, paired)
    return _passed(gap.is_dominated(), g0=gap.g0, rate=gap.rate, final_gap=float(gap.series.values[-1]))


def _guarded(name: str, check: Callable[[], Dict]) -> Dict:
    try:
        return check()
    except ValueError as e:
        logger.warning(f"Check '{name}' skipped: {e}")
        return {"status": "skipped", "reason": str(e)}
    except Exception as e:
        logger.error(f"Check '{name}' crashed: {e}")
        logger.error(f"Traceback: {traceback.format_exc()}")
        return {"status": "error", "reason": str(e)}


#Pass/fail report of every estimate that applies to the trajectory's model
def verify_trajectory(traj, paired=None) -> Dict:
    logger.info(f"Verifying {traj.kind} trajectory with {len(traj.times)} snapshots")
    if not traj.states:
        return {"status": "error", "kind": traj.kind, "checks": {}, "error": "trajectory has no snapshots"}

    checks: Dict[str, Dict] = {"mass": _guarded("mass", lambda: _mass_check(traj))}
    if traj.kind == "KS":
        checks["growth_flag"] = {"status": "info", "blowup": traj.status == "blowup"}
    else:
        checks["positivity"] = _guarded("positivity", lambda: _positivity_check(traj))
        for gamma in ENVELOPE_GAMMAS:
            label = "inf" if math.isinf(gamma) else f"{gamma:g}"
            checks[f"envelope_L{label}"] = _guarded(f"envelope_L{label}", lambda g=gamma: _envelope_check(traj, g))
        checks["propagation"] = _guarded("propagation", lambda: _propagation_check(traj))
        checks["level_sets"] = _guarded("level_sets", lambda: _degiorgi_check(traj))

    for alpha in GNS_ALPHAS:
        checks[f"gns_alpha{alpha:g}"] = _guarded(f"gns_alpha{alpha:g}", lambda a=alpha: _gns_check(traj, a))
    if paired is not None:
        checks["stability"] = _guarded("stability", lambda: _stability_check(traj, paired))

    failed = [name for name, result in checks.items() if result["status"] in ("fail", "error")]
    status = "fail" if failed else "pass"
    logger.info(f"Verification {status}: {len(checks)} checks, failed: {failed or 'none'}")
    return {"status": status, "kind": traj.kind, "failed": failed, "checks": _plain(checks)}


#Convert numpy scalars so the report serializes to JSON
def _plain(value):
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.generic):
        return value.item()
    return value
