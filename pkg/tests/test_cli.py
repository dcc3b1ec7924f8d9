import csv
import io
import json

import numpy as np
import pytest

from mdpcs.cli import main
from mdpcs.experiment import ConfigError, parse_config, run_experiment
from mdpcs.generate import generate_config


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True), encoding="utf-8")
    return path


def identical_parameters_config():
    """Two identical discount values: every comparison must be an equality."""
    cfg = generate_config("complements-random", 5)
    cfg["axis"] = {"kind": "discount", "values": [0.6, 0.6]}
    return cfg


def test_run_identical_parameters_exits_zero(tmp_path):
    path = write_config(tmp_path, identical_parameters_config())
    code = main(["run", str(path), "--out", str(tmp_path / "out")])
    assert code == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["exit_code"] == 0
    assert report["checks"]["parameter"]["status"] == "pass"


def test_run_walk_experiment_full_pipeline(tmp_path):
    path = write_config(tmp_path, generate_config("randomwalk-random", 2))
    out = tmp_path / "out"
    code = main(["run", str(path), "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["checks"]["transition"]["status"] == "pass"
    assert report["conditions"]["transition-map-conditions"]["holds"]

    text = (out / "trajectories.csv").read_text()
    assert "\r" not in text
    rows = list(csv.DictReader(io.StringIO(text)))
    assert set(rows[0]) == {"t", "param_id", "expected_decision", "mean_state"}
    horizon = max(int(r["t"]) for r in rows)
    params = sorted({r["param_id"] for r in rows})
    assert horizon == 20 and params == ["0", "1"]
    # the high-noise column dominates the low-noise column period by period
    by_param = {p: [float(r["expected_decision"]) for r in rows
                    if r["param_id"] == p] for p in params}
    diffs = np.array(by_param["1"]) - np.array(by_param["0"])
    assert np.all(diffs >= -1e-9)


def test_csv_values_are_canonical_17_digit_forms(tmp_path):
    path = write_config(tmp_path, generate_config("randomwalk-random", 4))
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO((out / "trajectories.csv").read_text())))
    for r in rows:
        for col in ("expected_decision", "mean_state"):
            assert r[col] == format(float(r[col]), ".17g")


def test_reports_are_reproducible_modulo_timing(tmp_path):
    cfg = generate_config("pricing-random", 9)
    path = write_config(tmp_path, cfg)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(path), "--out", str(out_a)]) == 0
    assert main(["run", str(path), "--out", str(out_b), "--jobs", "3"]) == 0
    ra = json.loads((out_a / "report.json").read_text())
    rb = json.loads((out_b / "report.json").read_text())
    ra.pop("timing")
    rb.pop("timing")
    assert json.dumps(ra, sort_keys=True) == json.dumps(rb, sort_keys=True)
    assert (out_a / "trajectories.csv").read_bytes() == \
        (out_b / "trajectories.csv").read_bytes()


def test_malformed_discount_exits_two(tmp_path, capsys):
    cfg = identical_parameters_config()
    cfg["model"]["params"]["beta"] = 1.5
    path = write_config(tmp_path, cfg)
    code = main(["run", str(path), "--out", str(tmp_path / "out")])
    assert code == 2
    assert "beta" in capsys.readouterr().err


def test_unparseable_json_exits_two(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["run", str(path)]) == 2
    assert "line" in capsys.readouterr().err


def test_missing_file_exits_two(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.json")]) == 2
    capsys.readouterr()


def test_conclusion_failure_exits_one(tmp_path):
    """A kernel pair ordered the wrong way: conclusion fails, exit 1."""
    cfg = generate_config("randomwalk-random", 6)
    params = cfg["model"]["params"]
    hi_noise = cfg["axis"]["override"]["noise"]
    cfg["model"]["params"] = dict(params, noise=hi_noise)
    cfg["axis"]["override"] = {"noise": params["noise"]}
    cfg["checks"] = ["transition"]
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    code = main(["run", str(path), "--out", str(out)])
    assert code == 1
    report = json.loads((out / "report.json").read_text())
    assert report["exit_code"] == 1
    assert report["checks"]["transition"]["status"].endswith("failed")


def test_horizon_and_tol_overrides(tmp_path):
    path = write_config(tmp_path, generate_config("randomwalk-random", 3))
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out), "--horizon", "5",
                 "--tol", "1e-7"]) == 0
    rows = list(csv.DictReader(io.StringIO((out / "trajectories.csv").read_text())))
    assert max(int(r["t"]) for r in rows) == 5


def test_generate_writes_deterministic_configs(tmp_path):
    out1, out2 = tmp_path / "g1", tmp_path / "g2"
    assert main(["generate", "complements-random", "2", "--seed", "7",
                 "--out", str(out1)]) == 0
    assert main(["generate", "complements-random", "2", "--seed", "7",
                 "--out", str(out2)]) == 0
    names = sorted(p.name for p in out1.iterdir())
    assert names == ["complements-random-0007.json", "complements-random-0008.json"]
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_generated_savings_config_runs_clean(tmp_path):
    path = write_config(tmp_path, generate_config("savings-random", 1))
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 0


def test_initial_state_axis_config(tmp_path):
    cfg = generate_config("pricing-random", 4)
    ref = cfg["model"]["params"]["reference_points"]
    cfg["axis"] = {"kind": "initial-state", "low": ref[1], "high": ref[-2]}
    cfg["checks"] = ["initial-state"]
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["checks"]["initial-state"]["status"] == "pass"


def test_config_validation_errors_name_fields():
    with pytest.raises(ConfigError, match="axis.kind"):
        parse_config({"model": {}, "axis": {"kind": "zodiac"}, "checks": ["parameter"]})
    with pytest.raises(ConfigError, match="checks"):
        parse_config({"model": {}, "axis": {"kind": "discount", "values": [0.1, 0.2]},
                      "checks": ["mystery"]})
    with pytest.raises(ConfigError, match="horizon"):
        parse_config({"model": {}, "axis": {"kind": "discount", "values": [0.1, 0.2]},
                      "checks": ["parameter"], "horizon": 0})


def test_incompatible_check_axis_pair_rejected():
    cfg = generate_config("complements-random", 0)
    cfg["checks"] = ["transition"]
    with pytest.raises(ConfigError, match="kernel axis"):
        run_experiment(cfg)
