import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import math
import numpy as np
import pytest

from src.diagnostics.norms import TimeSeries
from src.ode.comparison import (
    OdeParams,
    comparison_check,
    corollary_a2_envelope,
    envelope_constant,
    envelope_exponent,
    envelope_series,
    integrate_sup_ode,
    lemma_a1_constant,
    ode_suite,
    write_ode_series,
)
from src.solvers.errors import DivergenceError
from src.storage.timeseries import read_timeseries


def test_riccati_decay():
    X = integrate_sup_ode(OdeParams(a=1.0, alpha=2.0, X0=1.0, T=1.0, dt=1e-4))
    assert X.t[0] == 0.0
    assert np.abs(X.values - 1.0 / (1.0 + X.t)).max() < 1e-6


def test_forced_equation_plateaus_at_fixed_point():
    X = integrate_sup_ode(OdeParams(a=1.0, b=5.0, alpha=2.0, X0=0.0, T=10.0, dt=1e-3))
    assert np.all(np.diff(X.values) >= -1e-15)
    assert X.values[-1] == pytest.approx(math.sqrt(5.0), abs=1e-4)


def test_singular_forcing_starts_at_first_step():
    p = OdeParams(a=1.0, c=0.5, gamma=1.0, alpha=2.0, alpha_o=1.0, X0=3.0, T=1.0, dt=1e-3)
    X = integrate_sup_ode(p)
    assert X.t[0] == pytest.approx(p.dt)
    assert X.values[0] == 3.0
    assert np.all(np.isfinite(X.values))


def test_envelope_dominates_large_initial_value():
    p = OdeParams(a=1.0, c=0.5, gamma=1.0, alpha=2.0, alpha_o=1.0, X0=20.0, T=1.0, dt=1e-3)
    X = integrate_sup_ode(p)
    verdict = comparison_check(envelope_series(p, X), X)
    assert verdict.holds and verdict.first_violation is None


def test_envelope_exponents():
    assert envelope_exponent(OdeParams(a=1.0, alpha=2.0, gamma=0.0)) == 1.0
    assert envelope_exponent(OdeParams(a=1.0, alpha=3.0, alpha_o=1.0, gamma=4.0)) == 2.0
    with pytest.raises(ValueError):
        envelope_exponent(OdeParams(a=1.0, alpha=1.0, alpha_o=0.5))


def test_envelope_constant_is_a_doubled_power_of_two():
    p = OdeParams(a=1.0, b=1.0, alpha=2.0, X0=1.0)
    C = envelope_constant(p)
    assert math.log2(C) == int(math.log2(C))
    assert corollary_a2_envelope(p, 0.5) == pytest.approx(C * (1.0 + 0.5 ** -1.0))
    with pytest.raises(ValueError):
        corollary_a2_envelope(p, 0.0)


def test_comparison_check():
    t = np.linspace(0.0, 1.0, 101)
    X = TimeSeries(t, np.sin(3 * t))
    assert comparison_check(TimeSeries(t, X.values + 1.0), X).holds
    assert comparison_check(X, X).holds

    crossing = TimeSeries(t, np.where(t < 0.3, X.values + 1.0, X.values - 1.0))
    verdict = comparison_check(crossing, X)
    assert not verdict.holds
    assert 0.29 <= verdict.first_violation <= 0.31

    with pytest.raises(ValueError):
        comparison_check(TimeSeries(t[:50], X.values[:50]), X)


def test_monotone_in_forcing():
    base = dict(a=1.0, alpha=2.0, alpha_o=0.5, gamma=0.3, X0=0.5, T=1.0, dt=1e-3)
    low = integrate_sup_ode(OdeParams(b=0.2, c=0.3, **base))
    for extra in ({"b": 0.6, "c": 0.3}, {"b": 0.2, "c": 0.9}):
        high = integrate_sup_ode(OdeParams(**extra, **base))
        assert np.all(high.values >= low.values - 1e-12)


def test_rk4_convergence_when_sup_term_is_inactive():
    def final(dt):
        return integrate_sup_ode(OdeParams(a=1.0, b=2.0, alpha=2.0, X0=0.3, T=1.0, dt=dt)).values[-1]

    coarse, mid, fine = final(0.01), final(0.005), final(0.0025)
    assert abs(coarse - mid) / abs(mid - fine) >= 8.0


def test_fixed_window_runs():
    X = integrate_sup_ode(OdeParams(a=1.0, c=1.0, alpha=2.0, alpha_o=1.0, X0=1.0, tau=0.2, window="fixed"))
    assert len(X) == 10001


def test_divergence_is_reported():
    with pytest.raises(DivergenceError):
        integrate_sup_ode(OdeParams(a=1e-300, b=1e300, alpha=1.01, T=2.0, dt=1e-2))


def test_parameter_validation():
    with pytest.raises(ValueError):
        OdeParams(a=0.0)
    with pytest.raises(ValueError):
        OdeParams(a=1.0, alpha=1.0, alpha_o=1.0)
    with pytest.raises(ValueError):
        OdeParams(a=1.0, T=1.0, dt=0.1)
    with pytest.raises(ValueError):
        OdeParams(a=1.0, window="sliding")


def test_lemma_a1_constant():
    assert lemma_a1_constant(OdeParams(a=2.0, b=3.0)) == pytest.approx(3.0)
    p = OdeParams(a=1.0, b=0.0, c=0.25, alpha=2.0, alpha_o=1.0)
    assert lemma_a1_constant(p, delta=0.5) == pytest.approx(2.0 * (0.5 + 1.0))
    with pytest.raises(ValueError):
        lemma_a1_constant(OdeParams(a=1.0, c=1.0, gamma=0.5))


def test_ode_suite_all_draws_dominated():
    report = ode_suite(draws=8, seed=1, T=1.0, dt=1e-3)
    assert report["status"] == "pass"
    assert len(report["draws"]) == 8 and not report["failed"]


def test_write_ode_series(tmp_path):
    X = integrate_sup_ode(OdeParams(a=1.0, X0=1.0, T=1.0, dt=1e-2))
    path = tmp_path / "riccati.csv"
    write_ode_series(X, path)
    frame = read_timeseries(path)
    assert list(frame.columns) == ["t", "X"]
    np.testing.assert_array_equal(frame["X"].to_numpy(), X.values)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
