import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import struct
import numpy as np
import pytest

from src.mesh.grid import Field, make_grid
from src.mesh.operators import integrate
from src.models.simulation import run
from src.scenario.builders import build_field, build_problem
from src.scenario.parser import dump_scenario, load_scenario, parse_scenario
from src.scenario.schema import parse_builder
from src.solvers.errors import HypothesisError, ScenarioParseError, SnapshotFormatError
from src.storage.snapshot import read_snapshot, write_snapshot
from src.storage.timeseries import read_timeseries, write_timeseries
from src.storage.trajectory_store import load_trajectory, save_trajectory

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"

MINIMAL = """
[grid]
nx = 16
ny = 16
[initial]
u = gaussian(0.5, 0.5, 0.1)
"""


def test_minimal_document_uses_defaults():
    scenario = parse_scenario(MINIMAL)
    assert scenario.name == "scenario"
    assert scenario.model.kind == "FPD"
    assert scenario.model.delta == 1.0
    assert scenario.initial.u == "gaussian(cx=0.5, cy=0.5, sigma=0.1, amplitude=1)"
    assert scenario.initial.w == "constant(value=0)"
    assert scenario.run.t_end == 1.0 and scenario.run.snapshot_every == 10


def test_parse_builder_forms():
    assert parse_builder("2.5").args == {"value": 2.5}
    spec = parse_builder("disk(0.5, 0.5, radius=0.1)")
    assert spec.args == {"cx": 0.5, "cy": 0.5, "radius": 0.1, "inside": 1.0, "outside": 0.0}
    for bad in ("gaussian(0.5, 0.5)", "wave(1)", "gaussian(0.5, 0.5, sigma=-1)", "disk(1, 1, 1, 1, 1, 1)"):
        with pytest.raises(ValueError):
            parse_builder(bad)


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ScenarioParseError) as info:
        parse_scenario("[grid]\nnx = 16\n[physics]\n")
    assert info.value.line == 3

    with pytest.raises(ScenarioParseError) as info:
        parse_scenario("[grid]\nnx = 16\nbogus = 1\n")
    assert info.value.line == 3

    with pytest.raises(ScenarioParseError) as info:
        parse_scenario("[grid]\nnx = 2\n")
    assert info.value.line == 2

    with pytest.raises(ScenarioParseError):
        parse_scenario("[grid]\nnx 16\n")


def test_negative_coefficient_cites_hypothesis():
    with pytest.raises(HypothesisError, match=r"Hypothesis \(H\)"):
        parse_scenario(MINIMAL + "[model]\nN = gaussian(0.5, 0.5, 0.1, amplitude=-2)\n")


def test_outward_nest_drift_is_accepted_with_advisory():
    scenario = parse_scenario(MINIMAL + "[model]\nv = ramp_to_point(0.5, 0.5, slope=-1)\n")
    assert scenario.advisories
    assert "Eq. (nv+)" in scenario.advisories[0]


def test_dump_roundtrips_to_equal_scenario():
    for path in sorted(SCENARIO_DIR.glob("*.cfg")):
        scenario = load_scenario(path, validate=False)
        again = parse_scenario(dump_scenario(scenario), validate=False)
        assert again == scenario, path.name


def test_shipped_scenarios_validate():
    for path in sorted(SCENARIO_DIR.glob("*.cfg")):
        load_scenario(path)


def test_load_missing_scenario_names_path(tmp_path):
    missing = tmp_path / "missing.cfg"
    with pytest.raises(OSError, match="missing.cfg"):
        load_scenario(missing)


def test_bump_builder_has_requested_mass():
    grid = make_grid(32, 32, 1.0, 1.0)
    field = build_field("bump(0.5, 0.5, 0.05, mass=2.5)", grid)
    assert integrate(field) == pytest.approx(2.5, rel=1e-14)


def test_random_builders_are_seeded():
    text = MINIMAL.replace("u = gaussian(0.5, 0.5, 0.1)", "u = random_bumps(3, 0.05)")
    first = build_problem(parse_scenario(text)).initial["u0"]
    second = build_problem(parse_scenario(text)).initial["u0"]
    np.testing.assert_array_equal(first.values, second.values)

    other = build_problem(parse_scenario(text + "[run]\nseed = 5\n")).initial["u0"]
    assert not np.array_equal(first.values, other.values)


def test_snapshot_layout(tmp_path):
    grid = make_grid(4, 4, 1.0, 1.0)
    field = Field(grid, np.arange(16, dtype=float) / 7.0)
    path = tmp_path / "u.antf"
    write_snapshot(field, 0.125, path)

    data = path.read_bytes()
    assert len(data) == 152
    assert struct.unpack_from("<4sIIId", data) == (b"ANTF", 1, 4, 4, 0.125)

    loaded, t = read_snapshot(path, grid)
    assert t == 0.125
    np.testing.assert_array_equal(loaded.values, field.values)


def test_snapshot_rejects_wrong_version_and_size(tmp_path):
    grid = make_grid(4, 4, 1.0, 1.0)
    path = tmp_path / "u.antf"
    write_snapshot(Field.constant(grid, 1.0), 0.0, path)
    data = bytearray(path.read_bytes())

    data[4] = 2
    path.write_bytes(bytes(data))
    with pytest.raises(SnapshotFormatError, match="version"):
        read_snapshot(path)

    data[4] = 1
    path.write_bytes(bytes(data[:-8]))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(path)

    path.write_bytes(b"NOPE" + bytes(data[4:]))
    with pytest.raises(SnapshotFormatError, match="magic"):
        read_snapshot(path)


def test_snapshot_builder_reads_initial_data(tmp_path):
    grid = make_grid(16, 16, 1.0, 1.0)
    field = Field(grid, np.random.default_rng(0).random(grid.shape))
    write_snapshot(field, 0.0, tmp_path / "u0.antf")
    loaded = build_field("snapshot(u0.antf)", grid, base_dir=tmp_path)
    np.testing.assert_array_equal(loaded.values, field.values)


def test_timeseries_csv(tmp_path):
    empty = tmp_path / "empty.csv"
    write_timeseries({"t": [], "mass": []}, empty)
    assert empty.read_bytes() == b"t,mass\n"

    single = tmp_path / "single.csv"
    write_timeseries({"mass": [1.0 / 3.0], "t": [0.1]}, single)
    lines = single.read_bytes().split(b"\n")
    assert lines[0] == b"t,mass" and lines[2] == b"" and len(lines) == 3

    values = np.random.default_rng(1).random(10)
    path = tmp_path / "series.csv"
    write_timeseries({"t": np.linspace(0, 1, 10), "x": values}, path)
    np.testing.assert_array_equal(read_timeseries(path)["x"].to_numpy(), values)

    with pytest.raises(ValueError):
        write_timeseries({"t": [0.0, 1.0], "x": [1.0]}, path)
    with pytest.raises(ValueError):
        write_timeseries({"x": [1.0]}, path)


def test_trajectory_roundtrip_and_determinism(tmp_path):
    scenario = parse_scenario(MINIMAL + "[run]\nt_end = 0.01\nsnapshot_every = 5\n")
    first = run(scenario, show_progress=False)
    save_trajectory(first, tmp_path / "a")
    save_trajectory(run(scenario, show_progress=False), tmp_path / "b")

    for name in sorted(p.name for p in (tmp_path / "a" / "snapshots").iterdir()):
        assert (tmp_path / "a" / "snapshots" / name).read_bytes() == (tmp_path / "b" / "snapshots" / name).read_bytes()

    loaded = load_trajectory(tmp_path / "a")
    assert loaded.kind == "FPD"
    assert loaded.times == first.times
    assert loaded.scenario == scenario
    np.testing.assert_array_equal(loaded.states[-1].u.values, first.states[-1].u.values)
    assert loaded.series["mass_total"] == first.series["mass_total"]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
