import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import math
import numpy as np
import pytest

from src.diagnostics.envelope import fit_envelope, nominal_beta
from src.diagnostics.norms import norm_series
from src.mesh.grid import Field, make_grid
from src.mesh.operators import integrate
from src.models import foraging
from src.models.foraging import admissible_dt, fpd_step, initial_state, ks_step, spd_step, step
from src.models.params import ModelParams, Problem, SimState, validate_initial, validate_params
from src.models.simulation import run, run_problem
from src.scenario.builders import build_problem
from src.scenario.parser import parse_scenario
from src.solvers.elliptic import EllipticSpec
from src.solvers.errors import HypothesisError

SMALL_FPD = """
name = small_fpd
[grid]
nx = 24
ny = 24
[model]
kind = FPD
N = disk(cx=0.5, cy=0.5, radius=0.15, inside=5, outside=0)
c = disk(cx=0.5, cy=0.5, radius=0.3, inside=0, outside=2)
v = ramp_to_point(cx=0.5, cy=0.5, slope=1)
[initial]
u = gaussian(cx=0.5, cy=0.5, sigma=0.1, amplitude=1)
w = 0
[run]
t_end = 0.05
snapshot_every = 5
"""

SMALL_SPD = """
name = small_spd
[grid]
nx = 24
ny = 24
[model]
kind = SPD
N = disk(cx=0.5, cy=0.5, radius=0.15, inside=5, outside=0)
v = ramp_to_point(cx=0.5, cy=0.5, slope=1)
[initial]
u = gaussian(cx=0.5, cy=0.5, sigma=0.1, amplitude=1)
w = gaussian(cx=0.5, cy=0.5, sigma=0.2, amplitude=0.5)
c = disk(cx=0.25, cy=0.5, radius=0.15, inside=3, outside=0.5)
[run]
t_end = 0.05
snapshot_every = 5
"""


#Unit mass squeezed into about one cell, the coarse-grid version of near_singular_fpd
SHARP_FPD = """
name = sharp_fpd
[grid]
nx = 32
ny = 32
[model]
kind = FPD
N = disk(cx=0.5, cy=0.5, radius=0.1, inside=1, outside=0)
c = disk(cx=0.8, cy=0.8, radius=0.1, inside=1, outside=0)
v = ramp_to_point(cx=0.5, cy=0.5, slope=1)
[initial]
u = bump(cx=0.5, cy=0.5, sigma=0.025, mass=1)
w = 0
[run]
t_end = 0.5
snapshot_every = 5
"""

KS_BLOB = """
name = blob
[grid]
nx = 32
ny = 32
[model]
kind = KS
delta = 0
blowup_factor = 2
[initial]
u = bump(cx=0.5, cy=0.5, sigma=0.1, mass={mass})
w = 0
[run]
t_end = 0.05
snapshot_every = 5
"""


def _quiet_run(text):
    return run(parse_scenario(text), show_progress=False)


def test_uniform_exchange_tracks_linear_ode():
    grid = make_grid(8, 8, 1.0, 1.0)
    c0, n0 = 1.0, 2.0
    params = ModelParams(kind="FPD", grid=grid, c=Field.constant(grid, c0), N=Field.constant(grid, n0))
    problem = Problem(
        params=params,
        initial={"u0": Field.constant(grid, 1.0), "w0": Field.zeros(grid)},
        t_end=0.5,
        dt_max=1e-3,
    )
    traj = run_problem(problem, show_progress=False)
    assert traj.status == "completed"

    t = np.array(traj.series["t"])
    u_exact = (n0 + c0 * np.exp(-(c0 + n0) * t)) / (c0 + n0)
    assert np.abs(np.array(traj.series["mass_u"]) - u_exact).max() < 2e-3
    np.testing.assert_allclose(traj.series["mass_total"], 1.0, rtol=1e-12)
    final = traj.final_state
    assert np.ptp(final.u.values) == 0.0 and np.ptp(final.w.values) == 0.0


def test_decoupled_heat_flow_conserves_each_population():
    grid = make_grid(12, 12, 1.0, 1.0)
    x, y = grid.mesh()
    params = ModelParams(kind="FPD", grid=grid, chi=0.0)
    u0 = Field(grid, np.exp(-((x - 0.3) ** 2 + (y - 0.6) ** 2) / 0.02))
    w0 = Field(grid, np.exp(-((x - 0.7) ** 2 + (y - 0.4) ** 2) / 0.02))
    state = initial_state(params, u0=u0, w0=w0)
    for _ in range(10):
        state = fpd_step(state, params, 1e-3)
    assert integrate(state.u) == pytest.approx(integrate(u0), rel=1e-11)
    assert integrate(state.w) == pytest.approx(integrate(w0), rel=1e-11)


def test_fpd_mass_positivity_and_symmetry():
    traj = _quiet_run(SMALL_FPD)
    assert traj.status == "completed"
    m0 = traj.report["m0"]
    assert traj.report["relative_mass_drift"] <= 1e-10
    for state in traj.states:
        assert abs(state.total_mass() - m0) <= 1e-10 * m0
        assert state.u.min() >= -1e-12 and state.w.min() >= -1e-12

    final = traj.final_state
    scale = max(final.u.max(), final.w.max())
    assert np.abs(final.u.values - final.u.mirrored_x().values).max() <= 1e-9 * scale
    assert np.abs(final.w.values - final.w.mirrored_x().values).max() <= 1e-9 * scale


def test_spd_food_depletes_monotonically():
    traj = _quiet_run(SMALL_SPD)
    assert traj.status == "completed"
    assert traj.report["relative_mass_drift"] <= 1e-10
    for earlier, later in zip(traj.states, traj.states[1:]):
        assert np.all(later.c.values - earlier.c.values <= 1e-14)
        assert later.p.min() >= -1e-12


def test_spd_food_follows_pointwise_exponential():
    grid = make_grid(8, 8, 1.0, 1.0)
    x, _ = grid.mesh()
    u0, dt, steps = 0.7, 1e-3, 100
    c0 = Field(grid, 1.0 + x)
    params = ModelParams(kind="SPD", grid=grid, chi=0.0, food_feedback=False)
    state = initial_state(params, u0=Field.constant(grid, u0), w0=Field.zeros(grid), c0=c0)
    for _ in range(steps):
        state = spd_step(state, params, dt)
    assert np.ptp(state.u.values) == 0.0
    np.testing.assert_allclose(state.c.values, c0.values * math.exp(-u0 * dt * steps), rtol=1e-12)


def test_ks_uniform_density_is_steady():
    grid = make_grid(8, 8, 1.0, 1.0)
    params = ModelParams(kind="KS", grid=grid, delta=0.0)
    rho = Field.constant(grid, 2.0)
    state = initial_state(params, rho0=rho)
    assert not state.phi.values.any()
    new = ks_step(state, params, 1e-3)
    assert np.all(new.rho.values == 2.0)
    assert not new.blowup


def test_ks_growth_flag():
    grid = make_grid(8, 8, 1.0, 1.0)
    params = ModelParams(kind="KS", grid=grid, delta=0.0, blowup_threshold=1.5)
    state = initial_state(params, rho0=Field.constant(grid, 2.0))
    assert step(state, params, 1e-3).blowup


def test_ks_conserves_mass():
    grid = make_grid(16, 16, 1.0, 1.0)
    x, y = grid.mesh()
    params = ModelParams(kind="KS", grid=grid, delta=0.0)
    rho0 = Field(grid, 10.0 * np.exp(-((x - 0.5) ** 2 + (y - 0.5) ** 2) / 0.02))
    state = initial_state(params, rho0=rho0)
    for _ in range(5):
        state = ks_step(state, params, admissible_dt(state, params))
    assert integrate(state.rho) == pytest.approx(integrate(rho0), rel=1e-11)


def test_supercritical_ks_grows_while_subcritical_spreads():
    collapsing = _quiet_run(KS_BLOB.format(mass=1.5 * 8 * math.pi))
    assert collapsing.status == "blowup"

    spreading = _quiet_run(KS_BLOB.format(mass=0.1 * 8 * math.pi))
    assert spreading.status == "completed"
    peaks = spreading.series["max_rho"]
    assert peaks[-1] < peaks[0]
    assert max(peaks) <= peaks[0] * (1 + 1e-12)


def test_fpd_step_solves_the_pheromone_once(monkeypatch):
    problem = build_problem(parse_scenario(SMALL_FPD))
    params = problem.params
    state = initial_state(params, **problem.initial)
    calls = []
    real = foraging.solve_screened_poisson

    def counting(w, spec, initial_guess=None):
        calls.append(spec)
        return real(w, spec, initial_guess=initial_guess)

    monkeypatch.setattr(foraging, "solve_screened_poisson", counting)
    for _ in range(3):
        state = fpd_step(state, params, admissible_dt(state, params))
    assert len(calls) == 3
    assert all(spec.method == "direct" for spec in calls)

    exact = real(state.w, EllipticSpec(delta=params.delta, method="direct"))
    np.testing.assert_allclose(state.p.values, exact.values, rtol=1e-12, atol=1e-15)


def test_near_singular_start_runs_to_the_end():
    traj = _quiet_run(SHARP_FPD)
    assert traj.status == "completed"
    assert traj.times[-1] == pytest.approx(0.5)
    for state in traj.states:
        assert np.all(np.isfinite(state.u.values)) and np.all(np.isfinite(state.p.values))

    first, last = traj.states[0], traj.states[-1]
    assert first.u.max() > 100
    assert last.total_mass() == pytest.approx(first.total_mass(), rel=1e-9)

    series = norm_series(traj, "u", 2.0)
    envelope = fit_envelope(series)
    assert envelope.dominates(series.after(0.01))
    assert envelope.beta <= nominal_beta(2.0)


def test_zero_population_run():
    traj = _quiet_run("[grid]\nnx = 8\nny = 8\n[run]\nt_end = 0.01\n")
    assert traj.status == "completed"
    for state in traj.states:
        assert not state.u.values.any() and not state.w.values.any()


def test_step_rejects_wrong_model():
    grid = make_grid(6, 6, 1.0, 1.0)
    params = ModelParams(kind="SPD", grid=grid)
    state = SimState(t=0.0, u=Field.zeros(grid), w=Field.zeros(grid), p=Field.zeros(grid), c=Field.zeros(grid))
    with pytest.raises(ValueError):
        fpd_step(state, params, 1e-3)


def test_hypothesis_violations():
    grid = make_grid(6, 6, 1.0, 1.0)
    with pytest.raises(HypothesisError, match=r"Hypothesis \(H\)"):
        validate_params(ModelParams(kind="FPD", grid=grid, N=Field.constant(grid, -1.0)))
    with pytest.raises(HypothesisError, match=r"Hypothesis \(H\+\)"):
        validate_params(ModelParams(kind="SPD", grid=grid, P=Field.constant(grid, -0.5)))
    with pytest.raises(HypothesisError, match="FinMass"):
        validate_initial(Field.constant(grid, -1.0), Field.zeros(grid))


def test_outward_nest_drift_is_only_a_warning():
    grid = make_grid(8, 8, 1.0, 1.0)
    x, y = grid.mesh()
    params = ModelParams(kind="FPD", grid=grid, v=Field(grid, np.hypot(x - 0.5, y - 0.5)))
    warnings = validate_params(params)
    assert warnings and all("nv+" in message for message in warnings)


def test_initial_state_needs_both_populations():
    grid = make_grid(6, 6, 1.0, 1.0)
    params = ModelParams(kind="FPD", grid=grid)
    with pytest.raises(ValueError):
        initial_state(params, u0=Field.zeros(grid))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
