"""
Coupled steps for the three population models.

FPD: u and w move by implicit diffusion and upwind drift, exchanging mass
through the food rate c and the nest rate N; the pheromone is slaved to w
through a screened Poisson problem. SPD replaces that constraint by a
parabolic pheromone equation and lets the food deplete pointwise.
KS is the single-population aggregation reference.

Every state returned here carries a pheromone (or phi) consistent with its
own populations, so a step always reads the drift from the state it starts at.
"""

from typing import Optional
import math
import numpy as np
from loguru import logger

from config import settings
from src.mesh.grid import Field, FaceVelocity
from src.mesh.operators import gradient_faces
from src.models.params import ModelParams, SimState
from src.solvers.elliptic import EllipticSpec, solve_screened_poisson
from src.solvers.stepper import StepSpec, cfl_dt, imex_step, ladder_dt, positivity_dt


#Solve -Lap p + delta p = w: cached sparse LU when delta > 0, warm-started CG for the pure Neumann case
def _pheromone(w: Field, params: ModelParams, delta: float, guess: Optional[Field] = None) -> Field:
    method = "direct" if delta > 0 else "cg"
    spec = EllipticSpec(delta=delta, rel_tol=params.elliptic_rel_tol, method=method)
    return solve_screened_poisson(w, spec, initial_guess=guess)


#Build the t = 0 state, solving the elliptic constraint where the model has one
def initial_state(
    params: ModelParams,
    u0: Optional[Field] = None,
    w0: Optional[Field] = None,
    p0: Optional[Field] = None,
    c0: Optional[Field] = None,
    rho0: Optional[Field] = None,
) -> SimState:
    grid = params.grid
    if params.kind == "KS":
        if rho0 is None:
            raise ValueError("the KS model needs an initial density rho")
        return SimState(t=0.0, rho=rho0, phi=_pheromone(rho0, params, 0.0))

    if u0 is None or w0 is None:
        raise ValueError(f"the {params.kind} model needs initial u and w")
    if params.kind == "FPD":
        return SimState(t=0.0, u=u0, w=w0, p=_pheromone(w0, params, params.delta), c=params.c)

    p = p0 if p0 is not None else Field.zeros(grid)
    c = c0 if c0 is not None else params.c
    return SimState(t=0.0, u=u0, w=w0, p=p, c=c)


#Drift fields read at the start of a step: (u drift, w drift) or (rho drift, None)
def _drifts(state: SimState, params: ModelParams):
    if params.kind == "KS":
        return gradient_faces(state.phi), None
    return gradient_faces(state.p).scaled(params.chi), gradient_faces(params.v)


#Largest dt on the ladder dt_max/2^k meeting the CFL and positivity caps of every unknown
def admissible_dt(state: SimState, params: ModelParams, cfl: float = None, dt_max: float = None) -> float:
    cfl = params.cfl if cfl is None else cfl
    dt_max = settings.dt_max if dt_max is None else dt_max
    grid = params.grid
    first, second = _drifts(state, params)

    caps = [cfl_dt(first, grid, cfl, dt_max)]
    if params.kind == "KS":
        caps.append(positivity_dt(first, grid, None, dt_max))
    else:
        u_sink = state.c if (params.kind == "FPD" or params.food_feedback) else None
        caps.append(cfl_dt(second, grid, cfl, dt_max))
        caps.append(positivity_dt(first, grid, u_sink, dt_max))
        caps.append(positivity_dt(second, grid, params.N, dt_max))
        if params.kind == "SPD" and params.delta > 0:
            caps.append(min(1.0 / params.delta, dt_max))
    return ladder_dt(min(caps), dt_max)


#Advance u and w by one step with the exchange -uc + wN applied with opposite signs
def _advance_populations(state, params, dt, u_drift, w_drift, food, D_w):
    exchange_food = food is not None
    uc = food.with_values(food.values * state.u.values) if exchange_food else None
    wn = params.N.with_values(params.N.values * state.w.values)

    u_new = imex_step(state.u, u_drift, StepSpec(D=1.0, dt=dt, cfl=params.cfl, sink=food, source=wn))
    w_new = imex_step(state.w, w_drift, StepSpec(D=D_w, dt=dt, cfl=params.cfl, sink=params.N, source=uc))
    return u_new, w_new


#One step of the fast-pheromone model
def fpd_step(state: SimState, params: ModelParams, dt: float) -> SimState:
    if params.kind != "FPD":
        raise ValueError(f"fpd_step called with a {params.kind} model")
    # state.p already solves the constraint for state.w: one elliptic solve per step
    p = state.p if state.p is not None else _pheromone(state.w, params, params.delta)
    u_drift = gradient_faces(p).scaled(params.chi)
    w_drift = gradient_faces(params.v)

    u_new, w_new = _advance_populations(state, params, dt, u_drift, w_drift, params.c, params.D_w)
    p_new = _pheromone(w_new, params, params.delta, guess=p)
    return SimState(t=state.t + dt, u=u_new, w=w_new, p=p_new, c=params.c)


#One step of the slow-pheromone model with pointwise-exact food depletion
def spd_step(state: SimState, params: ModelParams, dt: float) -> SimState:
    if params.kind != "SPD":
        raise ValueError(f"spd_step called with a {params.kind} model")
    grid = params.grid
    u_drift = gradient_faces(state.p).scaled(params.chi)
    w_drift = gradient_faces(params.v)

    food = state.c if params.food_feedback else None
    u_new, w_new = _advance_populations(state, params, dt, u_drift, w_drift, food, params.D_w)

    deposition = state.w.with_values(params.P.values * state.w.values)
    evaporation = Field.constant(grid, params.delta) if params.delta > 0 else None
    p_new = imex_step(
        state.p, FaceVelocity.zeros(grid),
        StepSpec(D=params.D_p, dt=dt, cfl=params.cfl, sink=evaporation, source=deposition)
    )

    # dc/dt = -u c integrated exactly over the step with u frozen at its start value
    c_new = state.c.with_values(state.c.values * np.exp(-state.u.values * dt))
    return SimState(t=state.t + dt, u=u_new, w=w_new, p=p_new, c=c_new)


#One step of the Keller-Segel reference model; sets the growth flag past the threshold
def ks_step(state: SimState, params: ModelParams, dt: float) -> SimState:
    if params.kind != "KS":
        raise ValueError(f"ks_step called with a {params.kind} model")
    phi = state.phi if state.phi is not None else _pheromone(state.rho, params, 0.0)
    rho_new = imex_step(state.rho, gradient_faces(phi), StepSpec(D=1.0, dt=dt, cfl=params.cfl))
    phi_new = _pheromone(rho_new, params, 0.0, guess=phi)

    threshold = params.blowup_threshold
    blowup = threshold is not None and math.isfinite(threshold) and rho_new.max() > threshold
    if blowup and not state.blowup:
        logger.warning(
            f"Resolution-limited growth at t = {state.t + dt:.6e}: "
            f"max(rho) = {rho_new.max():.3e} exceeds {threshold:.3e}"
        )
    return SimState(t=state.t + dt, rho=rho_new, phi=phi_new, blowup=blowup or state.blowup)


STEPPERS = {"FPD": fpd_step, "SPD": spd_step, "KS": ks_step}


#Dispatch on the model kind
def step(state: SimState, params: ModelParams, dt: float) -> SimState:
    return STEPPERS[params.kind](state, params, dt)
