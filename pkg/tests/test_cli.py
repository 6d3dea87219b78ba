import json
import subprocess
import sys

import pytest

from fogplan.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, main
from fogplan.params import ScenarioParams


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out.read_text() if out.exists() else ""


def test_toy_vanet_csv(tmp_path):
    code, text = run(tmp_path, "toy-vanet")
    assert code == EXIT_OK
    assert "scenario-1,20,8,45,73,1" in text
    assert "scenario-2,15,8,20,43,1/4" in text


def test_gen_topology_and_evaluate(tmp_path):
    cfg = tmp_path / "cfg.json"
    ScenarioParams(n_consumers=500, n_fogs=8, n_servers=2).dump(cfg)
    code, text = run(tmp_path, "gen-topology", "--config", str(cfg))
    assert code == EXIT_OK and json.loads(text)["seed"] == 0
    code, text = run(tmp_path, "evaluate", "--config", str(cfg), "--format", "json")
    assert code == EXIT_OK
    rows = json.loads(text)["rows"]
    assert [r[2] for r in rows] == ["fog", "cloud"]


def test_sweeps(tmp_path):
    code, text = run(tmp_path, "sweep", "--kind", "latency", "--values", "1000", "2000")
    assert code == EXIT_OK and text.count("\n") == 3
    code, text = run(tmp_path, "sweep", "--kind", "fne", "--format", "svg")
    assert code == EXIT_OK and text.startswith("<svg")
    code, text = run(tmp_path, "sweep", "--kind", "cost", "--variable", "arrival_rate",
                     "--values", "0.5", "1.0", "--pop", "6", "--generations", "2")
    assert code == EXIT_OK
    assert ",arrival_rate,0.5," in text


def test_optimize_and_estimate(tmp_path):
    code, text = run(tmp_path, "optimize", "--pop", "6", "--generations", "2")
    assert code == EXIT_OK and text.startswith("generation,")
    code, text = run(tmp_path, "estimate-pic", "--max-trials", "40")
    assert code == EXIT_OK and text.startswith("config_hash,seed,trial,")


def test_config_errors_exit_one(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"pi_c": 2.0}')
    assert main(["evaluate", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["evaluate", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad.write_text("{not json")
    assert main(["evaluate", "--config", str(bad)]) == EXIT_CONFIG


def test_infeasible_exit_two(tmp_path):
    # one BU per FCN cannot serve 80 consumers in 20 cities
    cfg = tmp_path / "tight.json"
    from fogplan.params import pilot_params
    pilot_params(bus_per_fog=1, n_fogs=20).dump(cfg)
    code, _ = run(tmp_path, "optimize", "--config", str(cfg), "--pop", "4",
                  "--generations", "1")
    assert code == EXIT_INFEASIBLE


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fogplan", "toy-vanet", "--no-optimize"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "improvement 41.09%" in res.stderr
