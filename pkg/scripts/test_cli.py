import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import json
import math
import pytest

from config import settings
from src.cli.main import EXIT_ERROR, EXIT_OK, EXIT_USAGE, cli, fpd_counterpart
from src.scenario.parser import load_scenario, parse_scenario
from src.storage.timeseries import read_timeseries

TINY = """
name = tiny
[grid]
nx = 16
ny = 16
[model]
N = disk(cx=0.5, cy=0.5, radius=0.2, inside=2, outside=0)
c = 1
v = ramp_to_point(cx=0.5, cy=0.5, slope=1)
[initial]
u = gaussian(cx=0.5, cy=0.5, sigma=0.15, amplitude=1)
[run]
t_end = 0.02
snapshot_every = 2
"""


@pytest.fixture
def tiny_scenario(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return path


def test_usage_errors():
    assert cli([]) == EXIT_USAGE
    assert cli(["teleport"]) == EXIT_USAGE
    assert cli(["run"]) == EXIT_USAGE
    assert cli(["--threads", "-1", "oracle-check", "--quick"]) == EXIT_USAGE
    assert cli(["ks-compare", "a.cfg", "b.cfg", "c.cfg"]) == EXIT_USAGE


def test_help_exits_cleanly(capsys):
    assert cli(["--help"]) == EXIT_OK
    assert "ode-check" in capsys.readouterr().out


def test_missing_scenario_names_the_path(tmp_path, capsys):
    missing = tmp_path / "missing.cfg"
    assert cli(["run", str(missing)]) == EXIT_ERROR
    assert "missing.cfg" in capsys.readouterr().err


def test_run_writes_results(tiny_scenario, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli(["run", str(tiny_scenario), "-o", str(out), "--no-progress"]) == EXIT_OK
    assert "status: completed" in capsys.readouterr().out

    directory = out / "tiny"
    report = json.loads((directory / "run_report.json").read_text())
    assert report["status"] == "completed"
    assert load_scenario(directory / "scenario.cfg") == load_scenario(tiny_scenario)
    series = read_timeseries(directory / "timeseries.csv")
    assert list(series.columns[:1]) == ["t"]
    assert series["t"].iloc[-1] == pytest.approx(0.02)
    assert any((directory / "snapshots").glob("u_*.antf"))


def test_verify_estimates_on_saved_run(tiny_scenario, tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "gns_samples", 60)
    out = tmp_path / "out"
    assert cli(["run", str(tiny_scenario), "-o", str(out), "--no-progress"]) == EXIT_OK

    code = cli(["verify-estimates", str(out / "tiny")])
    assert code in (EXIT_OK, EXIT_ERROR)
    report = json.loads((out / "tiny" / "verification_report.json").read_text())
    assert report["checks"]["mass"]["status"] == "pass"
    assert code == (EXIT_OK if report["status"] == "pass" else EXIT_ERROR)


def test_perturbed_twin_feeds_the_stability_check(tiny_scenario, tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "gns_samples", 60)
    out = tmp_path / "out"
    assert cli(["run", str(tiny_scenario), "-o", str(out), "--no-progress", "--perturb", "1e-6"]) == EXIT_OK
    assert (out / "tiny_perturbed" / "timeseries.csv").exists()

    cli(["verify-estimates", str(out / "tiny"), "--paired", str(out / "tiny_perturbed")])
    report = json.loads((out / "tiny" / "verification_report.json").read_text())
    assert report["checks"]["stability"]["status"] == "pass"


def test_verify_estimates_missing_directory(tmp_path):
    assert cli(["verify-estimates", str(tmp_path / "nowhere")]) == EXIT_ERROR


def test_fpd_counterpart_matches_ks_density():
    ks = parse_scenario(
        "name = blob\n[grid]\nnx = 8\nny = 8\n[model]\nkind = KS\ndelta = 0\n"
        "[initial]\nrho = gaussian(0.5, 0.5, 0.1, amplitude=50)\n"
    )
    fpd = fpd_counterpart(ks)
    assert fpd.name == "blob_fpd"
    assert fpd.model.kind == "FPD"
    assert fpd.initial.u == ks.initial.rho
    assert fpd.initial.w == "constant(value=0)" and fpd.initial.rho is None
    assert fpd.grid == ks.grid


def test_oracle_check_quick(capsys):
    assert cli(["oracle-check", "--quick"]) == EXIT_OK
    assert "oracle-check: pass" in capsys.readouterr().out


def test_ks_compare_contrasts_growth_with_bounded_fpd(tmp_path, capsys):
    path = tmp_path / "blob.cfg"
    path.write_text(
        "name = blob\n[grid]\nnx = 32\nny = 32\n"
        "[model]\nkind = KS\ndelta = 0\nblowup_factor = 2\n"
        f"[initial]\nu = bump(cx=0.5, cy=0.5, sigma=0.1, mass={1.5 * 8 * math.pi})\nw = 0\n"
        "[run]\nt_end = 0.05\nsnapshot_every = 5\n"
    )
    out = tmp_path / "out"
    assert cli(["ks-compare", str(path), "-o", str(out), "--no-progress"]) == EXIT_OK
    assert "KS growth flag set; FPD bounded" in capsys.readouterr().out

    table = read_timeseries(out / "ks_compare.csv")
    assert set(table["model"]) == {"KS", "FPD"}
    ks = table[table["model"] == "KS"]["linf"]
    assert ks.max() > 2 * ks.iloc[0]


def test_ode_check_writes_table(tmp_path):
    assert cli(["ode-check", "--draws", "2", "--seed", "1", "-o", str(tmp_path)]) == EXIT_OK
    table = read_timeseries(tmp_path / "ode_suite.csv")
    assert len(table) == 2


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
