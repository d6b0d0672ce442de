import csv
import json
import os
import re

import numpy as np
import pytest

from monoflow.cli import main
from monoflow.errors import ParseError, UnknownColumn, ValidationError
from monoflow.harness import (
    PRESETS,
    Series,
    emit_plot,
    load_config,
    load_preset,
    preset_names,
    run_experiment,
)
from monoflow.harness.acceptance import CRITERIA, SUITES, criterion_1, suite_run
from monoflow.harness.serialize import format_float
from monoflow.operators import resolvent

MINIMAL = {
    "operator": {"kind": "quadratic", "Q": [[1.0, 0.0], [0.0, 0.5]], "b": [0.0, 0.0]},
    "scheme": {"kind": "proximal"},
    "schedule": {"kind": "constant", "c": 1.0},
    "horizon": {"n_steps": 150},
    "start": [1.0, 1.0],
    "certificates": ["fejer", "velocity"],
}


def _text(**changes):
    cfg = dict(MINIMAL)
    cfg.update(changes)
    return json.dumps(cfg, indent=2)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- config parsing ---------------------------------------------------------------


def test_load_minimal_config():
    cfg = load_config(_text())
    assert cfg.scheme == "proximal" and cfg.horizon["n_steps"] == 150
    assert [c["name"] for c in cfg.certificates] == ["fejer", "velocity"]
    assert cfg.seed == 0 and cfg.outputs["csv"] is True


def test_euler_on_normal_cone_rejected():
    text = _text(operator={"kind": "normal_cone", "set": {"kind": "ball", "center": [0, 0], "radius": 1}},
                 scheme={"kind": "euler"})
    with pytest.raises(ValidationError):
        load_config(text)


def test_unknown_key_names_key_and_position():
    cfg = dict(MINIMAL)
    cfg["scheme"] = {"kind": "proximal", "params": {"stepsize": 1}}
    text = json.dumps(cfg, indent=2)
    with pytest.raises(ParseError) as info:
        load_config(text)
    assert "stepsize" in str(info.value)
    line = next(i for i, s in enumerate(text.splitlines(), 1) if "stepsize" in s)
    assert info.value.line == line


def test_zero_steps_rejected():
    with pytest.raises(ValidationError):
        load_config(_text(horizon={"n_steps": 0}))


def test_bad_json_reports_position():
    with pytest.raises(ParseError) as info:
        load_config('{"operator": ,}')
    assert info.value.line == 1


def test_every_preset_validates():
    assert set(preset_names()) == set(PRESETS)
    for name in preset_names():
        assert load_preset(name).name == name
    with pytest.raises(ValidationError):
        load_preset("no-such-preset")


# --- running experiments -----------------------------------------------------------


def test_rotation_average_csv_has_all_samples(tmp_path):
    art = run_experiment(load_preset("rotation-average"), tmp_path)
    assert art.ok
    rows = _rows(art.series_path)
    # header, the start point, then one row per step
    assert len(rows) == 1 + 10_001
    assert float(rows[1][rows[0].index("x0")]) == 1.0


def test_quadratic_prox_converges_and_certifies(tmp_path):
    art = run_experiment(load_preset("quadratic-prox"), tmp_path)
    rep = art.report
    assert rep["status"] == "ok" and rep["all_certificates_passed"]
    assert rep["convergence"]["verdict"]["kind"] == "converges"
    assert np.linalg.norm(rep["convergence"]["verdict"]["limit"]) < 1e-10


def test_each_certificate_reported_once(tmp_path):
    cfg = load_preset("quadratic-prox")
    rep = run_experiment(cfg, tmp_path).report
    names = [c["name"] for c in rep["certificates"]]
    assert sorted(names) == sorted(c["name"] for c in cfg.certificates)
    assert len(set(names)) == len(names)


def test_runs_are_byte_identical(tmp_path):
    cfg = load_preset("kobayashi-random")
    a = run_experiment(cfg, tmp_path / "a")
    b = run_experiment(cfg, tmp_path / "b")
    for fname in ("series.csv", "report.json"):
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()
    assert a.plot_paths and all(os.path.exists(p) for p in a.plot_paths + b.plot_paths)


def test_seed_override_changes_random_start(tmp_path):
    cfg = load_preset("kobayashi-random")
    a = run_experiment(cfg, tmp_path / "a", seed=1).report
    b = run_experiment(cfg, tmp_path / "b", seed=2).report
    assert a["config"]["seed"] == 1 and a["final_point"] != b["final_point"]


def test_run_errors_are_reported(tmp_path):
    text = _text(scheme={"kind": "reference_flow", "params": {"tol": 1e-12, "n_samples": 3}},
                 horizon={"t_end": 1.0}, schedule=None,
                 operator={"kind": "shifted", "alpha": 1.0,
                           "base": {"kind": "normal_cone", "set": {"kind": "ball", "center": [0, 0], "radius": 2}}},
                 certificates=[])
    cfg = load_config(text)
    art = run_experiment(cfg, tmp_path)
    assert not art.ok
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["status"] == "error" and rep["error"]["type"] == "BudgetExceeded"


# --- serialization and plotting ------------------------------------------------


def test_floats_use_17_significant_digits():
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(1 / 3)) == 1 / 3
    assert format_float(float("inf")) == "inf" and format_float(float("nan")) == "nan"


def test_report_floats_round_trip(tmp_path):
    art = run_experiment(load_preset("quadratic-prox"), tmp_path)
    rep = json.loads(open(art.report_path).read())
    assert rep["final_point"] == [float(v) for v in art.trajectory.final]


def test_plot_unknown_column(tmp_path):
    s = Series({"time": np.arange(5.0), "x0": np.ones(5)})
    with pytest.raises(UnknownColumn):
        emit_plot(s, ("time", "energy"), tmp_path / "p.svg")


def test_plot_is_800_by_600(tmp_path):
    s = Series({"time": np.arange(1.0, 50.0), "x0": np.exp(-np.arange(49.0))})
    emit_plot(s, ("time", "x0"), tmp_path / "p.svg", log_y=True, title="decay")
    svg = (tmp_path / "p.svg").read_text()
    assert re.search(r'<svg[^>]*width="800"[^>]*height="600"', svg)
    assert "<polyline" in svg


# --- CLI --------------------------------------------------------------------------


def test_cli_run_preset(tmp_path, capsys):
    assert main(["run", "--preset", "quadratic-prox", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS fejer" in out
    assert (tmp_path / "series.csv").exists() and (tmp_path / "report.json").exists()


def test_cli_run_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(_text())
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(_text(horizon={"n_steps": 0}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "bad")]) == 2


def test_cli_plot(tmp_path, capsys):
    main(["run", "--preset", "quadratic-prox", "--out", str(tmp_path)])
    csv_path = str(tmp_path / "series.csv")
    assert main(["plot", "--csv", csv_path, "--x", "time", "--y", "dist_S", "--log-y",
                 "--out", str(tmp_path / "d.svg")]) == 0
    assert (tmp_path / "d.svg").exists()
    assert main(["plot", "--csv", csv_path, "--x", "time", "--y", "energy", "--out", str(tmp_path / "e.svg")]) == 2
    assert "energy" in capsys.readouterr().err


def test_cli_unknown_suite_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["check", "--suite", "nightly"])
    assert info.value.code == 2


def test_cli_check_exit_code_follows_results(monkeypatch, tmp_path, capsys):
    import monoflow.cli as cli

    def fake(name, echo=None):
        return {"suite": name, "passed": False, "seconds": 0.0,
                "criteria": [{"id": "1", "passed": True}, {"id": "2", "passed": False}]}

    monkeypatch.setattr(cli, "suite_run", fake)
    out = tmp_path / "s.json"
    assert main(["check", "--suite", "fast", "--json", str(out)]) == 1
    assert json.loads(out.read_text())["suite"] == "fast"
    assert "1/2 passed" in capsys.readouterr().out


# --- acceptance machinery -----------------------------------------------------------


def test_suite_names_and_unknown_suite():
    assert SUITES == ("fast", "full")
    assert set(CRITERIA) == set(range(1, 19))
    with pytest.raises(ValueError):
        suite_run("nightly")


def test_broken_resolvent_is_caught():
    def doubled(op, lam, x):
        return 2.0 * resolvent(op, lam, x)

    results = criterion_1(resolvent_fn=doubled, n_pairs=100)
    assert not all(r.passed for r in results)
    assert all(r.passed for r in criterion_1(n_pairs=100))
