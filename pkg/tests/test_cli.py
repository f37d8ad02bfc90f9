import csv
import json
import math
import subprocess
import sys

import pytest

from gemsim import cli


def _run(args, tmp_path, name="out.txt"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def test_run_defaults(tmp_path):
    code, text = _run(["run"], tmp_path)
    assert code == 0
    report = json.loads(text)
    assert report["model"] == "single-mode"
    assert report["phases_rad"]["11"] == pytest.approx(6328.9193703 * 5e-4, rel=1e-9)
    assert report["gate_model"]["split"] == "large-alpha"
    assert list(report)[:3] == ["model", "config", "planck_mass_kg"]


def test_floats_round_trip_exactly():
    value = 0.1 + 0.2
    text = cli.to_json({"x": value, "y": [1e-300, -0.0], "z": math.inf})
    parsed = json.loads(text)
    assert parsed["x"] == value
    assert parsed["y"] == [1e-300, 0.0]
    assert parsed["z"] is None
    assert "0.30000000000000004" in text


def test_run_multimode_csv(tmp_path):
    cfg = _write(tmp_path, "c.json", {"field": {"mode": "multimode"}})
    code, text = _run(["run", "--config", cfg, "--format", "csv"], tmp_path)
    assert code == 0
    rows = list(csv.DictReader(text.splitlines()))
    assert rows[0]["model"] == "multimode"
    assert float(rows[0]["witness"]) > 1.9
    assert "\r" not in text


def test_config_from_environment(tmp_path, monkeypatch):
    cfg = _write(tmp_path, "c.json", {"mass_kg": 2e-12})
    monkeypatch.setenv(cli.CONFIG_ENV, cfg)
    code, text = _run(["run"], tmp_path)
    assert code == 0
    assert json.loads(text)["config"]["mass_kg"] == 2e-12


@pytest.mark.parametrize("content", ["{not json", json.dumps({"mass_kg": -1}), json.dumps([1, 2])])
def test_invalid_config_exits_2_without_output(tmp_path, content, capsys):
    cfg = _write(tmp_path, "c.json", content)
    code, text = _run(["run", "--config", cfg], tmp_path)
    assert code == 2
    assert text is None
    assert "error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    code, _ = _run(["run", "--config", str(tmp_path / "nope.json")], tmp_path)
    assert code == 2


def test_compare_verdict(tmp_path):
    code, text = _run(["compare", "--observed-witness", "2.0"], tmp_path)
    assert code == 0
    result = json.loads(text)
    assert [r["tag"] for r in result["rows"]][0] == "quantum-linearized"
    assert result["verdict"]["consistent"] == ["quantum-linearized"]
    assert len(result["verdict"]["inconsistent"]) == 4


def test_compare_csv_columns(tmp_path):
    code, text = _run(["compare", "--format", "csv"], tmp_path)
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["tag", "phi_00_rad", "phi_01_rad", "phi_10_rad", "phi_11_rad",
                       "negativity", "witness", "entangling"]
    assert [r[-1] for r in rows[1:]] == ["1", "0", "0", "0", "0"]
    for r in rows[1:]:
        for cell in r[1:]:
            if cell:
                float(cell)


def test_sweep_rows_in_order(tmp_path):
    spec = _write(tmp_path, "s.json", {"parameter": "mass_kg", "values": [3e-12, 1e-12, 2e-12],
                                       "columns": ["phi_11_rad", "witness"]})
    code, text = _run(["sweep", "--spec", spec, "--format", "csv"], tmp_path)
    assert code == 0
    rows = list(csv.DictReader(text.splitlines()))
    assert [float(r["mass_kg"]) for r in rows] == [3e-12, 1e-12, 2e-12]
    assert list(rows[0]) == ["mass_kg", "phi_11_rad", "witness"]


def test_sweep_spec_inside_config(tmp_path):
    cfg = _write(tmp_path, "c.json", {"sweep": {"parameter": "phi11_rad",
                                                "range": {"start": 0, "stop": 6.283185307179586, "num": 5}}})
    code, text = _run(["sweep", "--config", cfg], tmp_path)
    assert code == 0
    rows = json.loads(text)["rows"]
    expected = [0.5 * (1 + math.cos(r["phi11_rad"] / 2) ** 2) for r in rows]
    assert [r["mass1_p0"] for r in rows] == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("spec", [
    {"parameter": "mass_kg", "values": []},
    {"parameter": "mass_kg"},
    {"parameter": "mass_kg", "values": [1e-12, -1]},
    {"parameter": "mass_kg", "values": [1e-12], "columns": ["nonsense"]},
    {"parameter": "phi11_rad", "values": [1.0, -1.0]},
])
def test_bad_sweep_exits_2_without_output(tmp_path, spec):
    path = _write(tmp_path, "s.json", spec)
    code, text = _run(["sweep", "--spec", path], tmp_path)
    assert code == 2
    assert text is None


def test_oracle_passes_by_default(tmp_path):
    code, text = _run(["oracle"], tmp_path)
    assert code == 0
    assert all(a["passed"] for a in json.loads(text)["audits"])


def test_oracle_undersized_cutoff_fails(tmp_path):
    code, text = _run(["oracle", "--n-max", "5"], tmp_path)
    assert code == 1
    audits = {a["name"]: a for a in json.loads(text)["audits"]}
    assert not audits["backend_equivalence"]["passed"]
    assert "cutoff-too-small" in audits["backend_equivalence"]["error"]


def test_bad_worker_count(tmp_path):
    assert cli.main(["run", "--workers", "0"]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gemsim", "run", "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("model,")
