import csv
import json

import numpy as np
import pytest
import yaml

from comonotone_flow.cli import main
from comonotone_flow.config import bundled_config_path, load_config, override, parse_config
from comonotone_flow.errors import ConfigError, InsufficientData
from comonotone_flow.runner import OUTPUT_ROOT_ENV, run_experiment, sweep


def _raw(name="diagonal"):
    return yaml.safe_load(bundled_config_path(name).read_text())


def _header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


# -- config ------------------------------------------------------------------

@pytest.mark.parametrize("name", ["diagonal", "diagonal_tds", "affine2d"])
def test_bundled_configs_load(name):
    cfg = load_config(bundled_config_path(name))
    assert cfg.samples == 400
    assert cfg.integrator.sample_times.size == 400


def test_fractions_accepted():
    cfg = parse_config(_raw())
    assert cfg.params.delta == pytest.approx(4 / 3)
    assert cfg.schedule.q == 0.5


@pytest.mark.parametrize("section, key", [("schedule", "qq"), ("dynamics", "damping"),
                                          ("integration", "rtol")])
def test_unknown_key_is_named(section, key):
    data = _raw()
    data[section][key] = 1
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.key == f"{section}.{key}"


def test_unknown_section_is_named():
    data = _raw()
    data["plots"] = {}
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.key == "plots"


@pytest.mark.parametrize("section, key, value", [
    ("operator", "eta", 1),            # violates eta > -2 rho
    ("schedule", "q", 1.5),
    ("integration", "tf", 0.05),
    ("initial", "x0", [1, 1]),
    ("dynamics", "system", "XYZ"),
    ("integration", "samples", 1),
])
def test_invalid_values(section, key, value):
    data = _raw()
    data[section][key] = value
    with pytest.raises(ConfigError):
        parse_config(data)


def test_override():
    data = _raw()
    out = override(data, "q", "1/3")
    assert out["schedule"]["q"] == "1/3" and data["schedule"]["q"] == "1/2"
    with pytest.raises(ConfigError):
        override(data, "alpha", 1)


# -- runs --------------------------------------------------------------------

def test_run_writes_files(tmp_path):
    arts = run_experiment(bundled_config_path("diagonal"), tmp_path / "run")
    for p in (arts.trajectory_csv, arts.diagnostics_csv, arts.summary_json, arts.hypotheses_json):
        assert p.exists()
    assert _header(arts.trajectory_csv) == ["t", "x_1", "x_2", "x_3", "xdot_1", "xdot_2", "xdot_3",
                                            "norm_x_minus_xstar", "norm_xdot", "norm_Ax"]
    assert _header(arts.diagnostics_csv)[:3] == ["t", "eps", "energy"]
    summary = json.loads(arts.summary_json.read_text())
    assert summary["energy_bounds"]["passed"]
    assert summary["decay_certificate"]["status"] == "checked"
    assert summary["final"]["norm_x_minus_xstar"] <= 0.05
    hyp = json.loads(arts.hypotheses_json.read_text())
    assert [e["name"] for e in hyp["entries"]][0] == "eps_vanishing"


def test_reruns_are_byte_identical(tmp_path):
    a = run_experiment(bundled_config_path("diagonal"), tmp_path / "a")
    b = run_experiment(bundled_config_path("diagonal"), tmp_path / "b")
    for name in ("trajectory.csv", "diagnostics.csv", "summary.json", "hypotheses.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
    arts = run_experiment(bundled_config_path("affine2d"))
    assert str(arts.summary_json).startswith(str(tmp_path))


def test_ds_against_tds(tmp_path):
    ds = run_experiment(bundled_config_path("diagonal"), tmp_path / "ds").summary
    tds = run_experiment(bundled_config_path("diagonal_tds"), tmp_path / "tds").summary
    assert ds["final"]["norm_x_minus_xstar"] <= 0.05
    assert abs(tds["final"]["x"][1]) >= 0.2
    assert tds["final"]["norm_x"] >= 0.2
    assert _header(tmp_path / "tds" / "diagnostics.csv") == ["t", "dist_reference_sq",
                                                             "norm_xdot_sq", "norm_Ax_sq"]


def test_delta_outside_window_is_flagged(tmp_path):
    data = _raw()
    data["dynamics"]["delta"] = 2
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(data))
    arts = run_experiment(path, tmp_path / "out")
    hyp = json.loads(arts.hypotheses_json.read_text())
    entry = next(e for e in hyp["entries"] if e["name"] == "delta_window")
    assert entry["satisfied"] is False
    assert "hypothesis delta_window failed" in arts.summary["warnings"]


def test_sweep_over_q(tmp_path):
    sweep(bundled_config_path("diagonal"), "q", ["1/5", "1/2", "3/4"], out_dir=tmp_path)
    with open(tmp_path / "rates.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["value"] for r in rows] == ["1/5", "1/2", "3/4"]
    assert all(r["status"] == "ok" for r in rows)
    assert float(rows[0]["position_theory"]) == pytest.approx(-0.9)
    assert float(rows[2]["position_theory"]) == pytest.approx(-0.5)
    assert (tmp_path / "q-1_over_5" / "trajectory.csv").exists()


def test_sweep_records_failures(tmp_path):
    sweep(bundled_config_path("diagonal"), "q", ["1/2", "2"], out_dir=tmp_path)
    with open(tmp_path / "rates.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["status"] for r in rows] == ["ok", "failed"]
    assert "ConfigError" in rows[1]["error"]
    assert (tmp_path / "q-2" / "error.json").exists()


def test_sweep_needs_values(tmp_path):
    with pytest.raises(InsufficientData):
        sweep(bundled_config_path("diagonal"), "q", [], out_dir=tmp_path)


# -- CLI ---------------------------------------------------------------------

def test_cli_run(tmp_path, capsys):
    assert main(["run", "affine2d", "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["summary"].endswith("summary.json")


def test_cli_check(capsys):
    assert main(["check", "diagonal"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["entries"]) == 7


def test_cli_sweep(tmp_path, capsys):
    assert main(["sweep", "diagonal", "--param", "q", "--values", "1/3,1/2",
                 "--out", str(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out) == {"runs": 2, "failed": 0}


def test_cli_sweep_failure_exit_code(tmp_path, capsys):
    assert main(["sweep", "diagonal", "--param", "q", "--values", "5",
                 "--out", str(tmp_path)]) == 1


def test_cli_empty_sweep(tmp_path, capsys):
    assert main(["sweep", "diagonal", "--param", "q", "--values", ",",
                 "--out", str(tmp_path)]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "InsufficientData"


def test_cli_config_error(tmp_path, capsys):
    data = _raw()
    data["schedule"]["bogus"] = 1
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(data))
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and err["key"] == "schedule.bogus"


def test_cli_missing_config(capsys):
    assert main(["check", "no_such_config"]) == 2
