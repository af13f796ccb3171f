import csv
import io
import json
import math

import numpy as np
import pytest
from jsonschema import Draft202012Validator

from regobs.config import REPORT_SCHEMA, SCHEMA, default_parallelism, load_config, parse_config
from regobs.errors import ConfigError
from regobs.sweep import run_sweep

POINT_1D = {"kind": "pointwise-internal", "position": [0.5]}


def base_doc(**extra):
    doc = {"schema": 1, "domain": {"kind": "interval"}, "basis": {"N": 20}, "sensors": [POINT_1D]}
    doc.update(extra)
    return doc


def test_schema_is_valid_draft_2020_12():
    Draft202012Validator.check_schema(SCHEMA)
    Draft202012Validator.check_schema(REPORT_SCHEMA)


def test_defaults():
    cfg = parse_config({"schema": 1})
    assert (cfg.N, cfg.T, cfg.samples, cfg.seed) == (25, 1.0, 64, 42)
    assert cfg.resolved_method == "rank"
    regional = parse_config({"schema": 1, "region": {"bounds": [[0.25, 0.75]]}})
    assert regional.resolved_method == "gramian"


@pytest.mark.parametrize("doc,path", [
    ({"schema": 2}, "schema"),
    ({"schema": 1, "basis": {"N": 0}}, "basis/N"),
    ({"schema": 1, "thresholds": {"tau_rank": -1}}, "thresholds/tau_rank"),
    ({"schema": 1, "sensors": [{"kind": "laser"}]}, "sensors/0/kind"),
    ({"schema": 1, "sweep": {"axes": [{"start": 0.1, "stop": 0.9, "steps": 0}]}}, "sweep/axes/0/steps"),
    ({"schema": 1, "bogus": True}, "<root>"),
])
def test_schema_errors_report_field_paths(doc, path):
    with pytest.raises(ConfigError, match=path):
        parse_config(doc)


def test_region_outside_domain_rejected():
    with pytest.raises(ConfigError, match="region"):
        parse_config({"schema": 1, "region": {"bounds": [[0.6, 1.1]]}})


def test_missing_position_rejected():
    with pytest.raises(ConfigError, match="sensors/0/position"):
        parse_config({"schema": 1, "sensors": [{"kind": "pointwise-internal"}]})


def test_env_var_overrides_parallelism(monkeypatch):
    cfg = parse_config({"schema": 1, "parallelism": 3})
    monkeypatch.delenv("REGOBS_THREADS", raising=False)
    assert cfg.workers == 3
    monkeypatch.setenv("REGOBS_THREADS", "2")
    assert cfg.workers == 2 and default_parallelism() == 2
    monkeypatch.setenv("REGOBS_THREADS", "zero")
    with pytest.raises(ConfigError):
        default_parallelism()


def test_strategic_global_rank_exit_1(run_cli, write_config):
    code, out, _ = run_cli("strategic", "--config", write_config(base_doc(method="rank")))
    assert code == 1
    rep = json.loads(out)
    Draft202012Validator(REPORT_SCHEMA).validate(rep)
    modes = sorted(m for g in rep["failing_groups"] for m in g["modes"])
    assert modes == list(range(2, 21, 2))
    assert rep["seed"] == 42


def test_strategic_regional_centre_sensor(run_cli, write_config):
    # b = 1/2 is the centre of [1/4, 3/4]: antisymmetric regional states stay blind
    doc = base_doc(region={"bounds": [[0.25, 0.75]]}, basis={"N": 20, "N_region": 4})
    code, out, _ = run_cli("strategic", "--config", write_config(doc), "--method", "gramian")
    assert code == 1
    rep = json.loads(out)
    assert rep["kernel_witnesses"]
    assert max(w["output_sup"] for w in rep["kernel_witnesses"]) < 1e-8


def test_strategic_regional_off_centre_exit_0(run_cli, write_config, tmp_path):
    doc = base_doc(region={"bounds": [[0.25, 0.75]]}, basis={"N": 20, "N_region": 4},
                   sensors=[{"kind": "pointwise-internal", "position": [0.4]}])
    out_path = tmp_path / "report.json"
    code, out, _ = run_cli("strategic", "--config", write_config(doc), "--out", out_path, "--seed", 7)
    assert code == 0 and out == ""
    rep = json.loads(out_path.read_text())
    Draft202012Validator(REPORT_SCHEMA).validate(rep)
    assert rep["verdict"] == "strategic" and rep["seed"] == 7


def test_malformed_json_exit_2(run_cli, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    code, out, err = run_cli("strategic", "--config", p)
    assert code == 2 and out == "" and "malformed" in err


def test_schema_violation_exit_2(run_cli, write_config):
    code, out, err = run_cli("strategic", "--config", write_config({"schema": 1, "basis": {"N": -1}}))
    assert code == 2 and out == "" and "basis/N" in err


def test_usage_error_exit_2(run_cli):
    code, _, _ = run_cli("strategic")
    assert code == 2
    code, _, _ = run_cli("frobnicate", "--config", "x.json")
    assert code == 2


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def test_simulate_blind_mode(run_cli, write_config):
    code, out, _ = run_cli("simulate", "--config", write_config(base_doc(x0={"mode": 4})))
    header, data = read_csv(out)
    assert code == 0 and header == ["t", "y_1"]
    assert data.shape == (64, 2)
    assert np.max(np.abs(data[:, 1])) < 1e-14


def test_simulate_first_mode_and_two_sensors(run_cli, write_config):
    doc = base_doc(x0={"mode": 1}, sensors=[POINT_1D, {"kind": "pointwise-internal", "position": [0.25]}])
    code, out, _ = run_cli("simulate", "--config", write_config(doc))
    header, data = read_csv(out)
    assert header == ["t", "y_1", "y_2"]
    assert data[0, 0] == 0.0 and data[0, 1] == math.sqrt(2)


def test_simulate_csv_round_trips_bit_identical(run_cli, write_config):
    from regobs.runner import Bases, state_from_spec
    from regobs.sensors import simulate_output

    doc = base_doc(x0={"coefficients": list(np.linspace(1.0, -1.0, 20))},
                   sensors=[{"kind": "pointwise-internal", "position": [0.3141]}])
    path = write_config(doc)
    _, out, _ = run_cli("simulate", "--config", path)
    _, data = read_csv(out)
    cfg = load_config(path)
    bases = Bases(cfg)
    traj = simulate_output(state_from_spec(cfg.x0, bases), list(cfg.sensors), bases.times)
    assert np.array_equal(data[:, 0], bases.times.samples)
    assert np.array_equal(data[:, 1], traj.values[0])


def test_simulate_length_mismatch_exit_2(run_cli, write_config):
    code, _, err = run_cli("simulate", "--config", write_config(base_doc(x0={"coefficients": [1.0, 2.0]})))
    assert code == 2 and "expected 20" in err


def sweep_doc(N, steps=9):
    return base_doc(basis={"N": N}, method="rank",
                    sweep={"axes": [{"start": 0.1, "stop": 0.9, "steps": steps}]})


def test_sweep_n10_all_points_blind(run_cli, write_config, tmp_path):
    out = tmp_path / "sweep.csv"
    code, _, _ = run_cli("sweep", "--config", write_config(sweep_doc(10)), "--out", out)
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["x1", "verdict", "min_sv", "failing_groups"]
    assert len(rows) == 9
    assert all(r["verdict"] == "not-strategic" for r in rows)
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["strategic_count"] == 0 and len(summary["non_strategic_loci"]) == 9


def test_sweep_n9_strategic_points(run_cli, write_config, tmp_path):
    out = tmp_path / "sweep.csv"
    summary = tmp_path / "summary.json"
    run_cli("sweep", "--config", write_config(sweep_doc(9)), "--out", out, "--summary", summary)
    rows = list(csv.DictReader(out.open()))
    good = [round(float(r["x1"]), 12) for r in rows if r["verdict"] == "strategic"]
    # b = k/10 is blind to mode j iff j k / 10 is an integer for some j <= 9
    assert good == [0.1, 0.3, 0.7, 0.9]
    assert json.loads(summary.read_text())["strategic_fraction"] == pytest.approx(4 / 9)


def test_sweep_grid_outside_domain_exit_2(run_cli, write_config):
    doc = base_doc(method="rank", sweep={"axes": [{"start": 0.5, "stop": 1.2, "steps": 4}]})
    code, _, err = run_cli("sweep", "--config", write_config(doc))
    assert code == 2 and "outside" in err


def test_sweep_without_grid_exit_2(run_cli, write_config):
    code, _, err = run_cli("sweep", "--config", write_config(base_doc()))
    assert code == 2 and "sweep" in err


def test_sweep_independent_of_worker_count():
    doc = {
        "schema": 1, "domain": {"kind": "rectangle", "sides": [1, 1]}, "basis": {"N": 12},
        "method": "rank",
        "sensors": [{"kind": "pointwise-internal", "position": [0.2137, 0.6731]},
                    {"kind": "pointwise-internal", "position": [0.5, 0.5]}],
        "sweep": {"sensor": 1, "axes": [{"start": 0.05, "stop": 0.95, "steps": 7},
                                         {"start": 0.1, "stop": 0.9, "steps": 5}]},
    }
    cfg = parse_config(doc)
    serial = run_sweep(cfg, workers=1)
    parallel = run_sweep(cfg, workers=3)
    assert serial.to_csv() == parallel.to_csv()
    assert len(serial) == 35


def test_sweep_collision_is_reported_not_strategic():
    doc = {
        "schema": 1, "domain": {"kind": "interval"}, "basis": {"N": 5}, "method": "rank",
        "sensors": [{"kind": "pointwise-internal", "position": [0.3]},
                    {"kind": "pointwise-internal", "position": [0.6]}],
        "sweep": {"sensor": 1, "axes": [{"start": 0.3, "stop": 0.3, "steps": 1}]},
    }
    res = run_sweep(parse_config(doc), workers=1)
    assert not res.strategic[0] and res.failing_groups[0] == -1


def reconstruct_doc(x0, sensors, **extra):
    doc = base_doc(region={"bounds": [[0.25, 0.75]]}, basis={"N": 20, "N_region": 4},
                   sensors=sensors, x0=x0, ground_truth=x0)
    doc.update(extra)
    return doc


def test_reconstruct_round_trip(run_cli, write_config, tmp_path):
    x0 = {"region_coefficients": [1.0, -0.5, 0.3, 0.2]}
    sensors = [{"kind": "pointwise-internal", "position": [0.4]}]
    path = write_config(reconstruct_doc(x0, sensors))
    traj = tmp_path / "traj.csv"
    assert run_cli("simulate", "--config", path, "--out", traj)[0] == 0
    code, out, _ = run_cli("reconstruct", "--config", path, "--trajectory", traj)
    assert code == 0
    rep = json.loads(out)
    assert rep["rank"] == 4
    assert rep["errors"]["regional_solve_error"] < 1e-6
    np.testing.assert_allclose(rep["coefficients"], x0["region_coefficients"], atol=1e-6)


def test_reconstruct_zero_trajectory_underdetermined(run_cli, write_config, tmp_path):
    traj = tmp_path / "zero.csv"
    lines = ["t,y_1"] + [f"{float(t)!r},0" for t in np.linspace(0, 1, 16)]
    traj.write_text("\n".join(lines) + "\n")
    code, out, err = run_cli("reconstruct", "--config", write_config(base_doc()), "--trajectory", traj)
    assert code == 1 and out == "" and "underdetermined" in err


def test_reconstruct_header_mismatch_exit_2(run_cli, write_config, tmp_path):
    traj = tmp_path / "bad.csv"
    traj.write_text("t,y_1,y_2\n0,1,2\n1,1,2\n")
    code, _, err = run_cli("reconstruct", "--config", write_config(base_doc()), "--trajectory", traj)
    assert code == 2 and "header" in err


def test_reconstruct_ridge_with_ground_truth(run_cli, write_config, tmp_path):
    x0 = {"coefficients": [1.0, 0.5] + [0.0] * 18}
    doc = base_doc(basis={"N": 20}, sensors=[{"kind": "pointwise-internal", "position": [0.31]}],
                   x0=x0, ground_truth=x0, region={"bounds": [[0.2, 0.7]]}, reconstruct={"ridge": 1e-10})
    doc["basis"]["N_region"] = 3
    path = write_config(doc)
    traj = tmp_path / "traj.csv"
    run_cli("simulate", "--config", path, "--out", traj)
    code, out, _ = run_cli("reconstruct", "--config", path, "--trajectory", traj)
    rep = json.loads(out)
    assert code == 0 and rep["ridge"] == 1e-10
    g = rep["errors"]["global_estimate"]
    assert g["error_on_region"] <= g["error_on_domain"] and g["region_not_worse"]


def test_counterexample_defaults(run_cli):
    code, out, _ = run_cli("counterexample")
    assert code == 0
    rep = json.loads(out)
    assert (rep["alpha"], rep["b"], rep["N"], rep["T"]) == (0.25, 0.5, 20, 1.0)
    assert rep["global"]["verdict"] == "not-strategic"
    row = rep["tan_condition"][0]
    assert (row["i0"], row["j0"], row["equal"]) == (6, 4, False)


def test_counterexample_flags_override_config(run_cli, write_config):
    path = write_config({"schema": 1, "counterexample": {"alpha": 0.2, "N": 12}})
    code, out, _ = run_cli("counterexample", "--config", path, "--N", 14)
    rep = json.loads(out)
    assert code == 0 and rep["alpha"] == 0.2 and rep["N"] == 14


def test_counterexample_region_out_of_bounds_exit_2(run_cli):
    code, out, _ = run_cli("counterexample", "--alpha", 0.6, "--b", 0.5)
    assert code == 2 and out == ""


def test_console_script_installed():
    import subprocess
    import shutil

    exe = shutil.which("regobs")
    assert exe is not None
    proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "regobs" in proc.stdout


CONFIGS = __import__("pathlib").Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("name,command,code", [
    ("global_rank.json", "strategic", 1),
    ("regional_gramian.json", "strategic", 0),
    ("global_rank.json", "simulate", 0),
    ("sweep_1d.json", "sweep", 0),
])
def test_shipped_configs(run_cli, name, command, code, tmp_path):
    got, _, _ = run_cli(command, "--config", CONFIGS / name, "--out", tmp_path / "out")
    assert got == code
