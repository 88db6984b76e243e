import csv
import json

import pytest

from mpec.cli import main


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_zero_trials_is_a_usage_error(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"mode": "direct", "p": 1e-3, "trials": 0})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "trials" in capsys.readouterr().err


def test_missing_config_is_a_usage_error(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.json")]) == 2


def test_minimal_sweep_is_deterministic(tmp_path):
    cfg = write(tmp_path / "c.json", {"mode": "direct", "p": 1e-3, "trials": 10, "seed": 3})
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        outs.append((out / "results.csv").read_bytes())
    assert outs[0] == outs[1]
    rows = list(csv.DictReader(outs[0].decode().splitlines()))
    assert len(rows) == 1 and rows[0]["trials"] == "10"
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["census"] == 60345


def test_flags_override_file(tmp_path):
    cfg = write(tmp_path / "c.json", {"mode": "fixed", "i_range": [0, 1], "trials": 20,
                                      "seed": 1, "decoder": "standard"})
    assert main(["sweep", "--config", cfg, "--decoder", "mpec", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "results.csv").read_text().splitlines()))
    assert {r["decoder"] for r in rows} == {"mpec"} and len(rows) == 2


def test_verify_golden(tmp_path):
    assert main(["verify", "golden", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify-golden.json").read_text())
    assert all(c["ok"] for c in report["cases"].values())


def test_verify_boxcases_mutation_fails(tmp_path):
    assert main(["verify", "boxcases", "--max-match", "2", "--out", str(tmp_path)]) == 1
    assert json.loads((tmp_path / "verify-boxcases.json").read_text())["n_violations"] > 0


def test_verify_chain(tmp_path):
    assert main(["verify", "chain", "--schedules", "50", "--seed", "2", "--out", str(tmp_path)]) == 0


def rtable(path, rate, upto=12):
    lines = ["mode,decoder,p_or_i,trials,failures,rate,sigma"]
    lines += [f"fixed,mpec,{i},10,0,{rate},0" for i in range(upto + 1)]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def test_curve_all_zero(tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["curve", rtable(tmp_path / "r.csv", 0.0), "--points", "4", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 4 and all(float(r["p2"]) == 0 for r in rows)


def test_curve_missing_rate_is_usage_error(tmp_path):
    assert main(["curve", rtable(tmp_path / "r.csv", 0.0, upto=8)]) == 2


def test_census(tmp_path, capsys):
    assert main(["census", "--out", str(tmp_path / "census.json")]) == 0
    data = json.loads((tmp_path / "census.json").read_text())
    assert data["census"]["total"] == 60345 and data["reference_total"] == 72657


def test_bad_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["dance"])
    assert exc.value.code == 2
