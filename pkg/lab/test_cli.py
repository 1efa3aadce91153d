#!/usr/bin/env python3
"""
End-to-end tests for the attractor-lab command line
"""
import json
import sys
from pathlib import Path

import pandas as pd
import pytest

# Add the lab directory to Python path
sys.path.insert(0, str(Path(__file__).parent))

import main
from commands.certify import CertificateDocument


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def run_cli(tmp_path, command, payload, out="out", *extra):
    config = write_config(tmp_path, payload)
    return main.run([command, "--config", str(config), "--out", str(tmp_path / out), "--quiet", *extra])


LINEAR = {"preset": "linear", "B": [[0.5]], "a": 2.0, "p": 1.0}


# certify

def test_certify_closed_form(tmp_path):
    code = run_cli(tmp_path, "certify", {"alpha": 1.0, "beta": 0.0, "b_norm": 0.0, "tau": 2.0})
    assert code == 0
    text = (tmp_path / "out" / "certificate.json").read_text()
    document = CertificateDocument.model_validate(json.loads(text))
    assert document.frak_c == pytest.approx(0.36788, abs=1e-5)
    assert document.satisfied


def test_certify_unit_norm_fails(tmp_path):
    assert run_cli(tmp_path, "certify", {"alpha": 1.0, "beta": 0.0, "b_norm": 1.0, "tau": 2.0}) == 2
    assert (tmp_path / "out" / "certificate.json").exists()


def test_malformed_config_reports_line(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "alpha": 1.0,\n  "beta": \n}')
    code = main.run(["certify", "--config", str(path), "--out", str(tmp_path / "out")])
    assert code == 1
    assert "line" in capsys.readouterr().err


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    code = run_cli(tmp_path, "certify", {"alpha": 1.0, "beta": 0.0, "b_norm": 0.0, "tau": 2.0, "bogus": 1})
    assert code == 1
    assert "certify: error:" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    code = main.run(["certify", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path / "out")])
    assert code == 1


def test_missing_required_flag_exits_one(tmp_path, capsys):
    code = main.run(["certify", "--out", str(tmp_path / "out")])
    assert code == 1
    err = capsys.readouterr().err
    assert "--config" in err
    assert "usage:" in err
    assert not (tmp_path / "out").exists()


def test_unknown_subcommand_exits_one(tmp_path, capsys):
    config = write_config(tmp_path, {"alpha": 1.0, "beta": 0.0, "b_norm": 0.0, "tau": 2.0})
    code = main.run(["bogus", "--config", str(config), "--out", str(tmp_path / "out")])
    assert code == 1
    assert "invalid choice" in capsys.readouterr().err


def test_non_integer_seed_exits_one(tmp_path):
    config = write_config(tmp_path, {"alpha": 1.0, "beta": 0.0, "b_norm": 0.0, "tau": 2.0})
    code = main.run(["certify", "--config", str(config), "--out", str(tmp_path / "out"), "--seed", "x"])
    assert code == 1


def test_certify_brayton_miranker_with_falsification(tmp_path):
    payload = {
        "system": {
            "preset": "brayton_miranker", "q": 0.1, "m": 0.1, "p": 1.0,
            "b": 1.0, "c": 1.0, "alphas": [1.0, 1.0], "tau": 5.0,
        },
        "brayton_miranker": {"alpha_prime": 1.0, "epsilon": 0.05},
        "falsify": {"radius": 10.0, "samples": 2000},
    }
    assert run_cli(tmp_path, "certify", payload) == 0
    document = json.loads((tmp_path / "out" / "certificate.json").read_text())
    assert document["brayton_miranker"]["pass"] is True
    assert not document["falsification"]["falsified"]
    assert document["stability"]["schur_cohn_stable"]


# simulate

def test_simulate_is_byte_reproducible(tmp_path):
    payload = {"system": LINEAR, "history": {"kind": "constant", "value": [1.0]}, "T": 5.0, "h": 0.05}
    assert run_cli(tmp_path, "simulate", payload, "first") == 0
    assert run_cli(tmp_path, "simulate", payload, "second") == 0
    first = (tmp_path / "first" / "trajectory.csv").read_bytes()
    assert first == (tmp_path / "second" / "trajectory.csv").read_bytes()

    frame = pd.read_csv(tmp_path / "first" / "trajectory.csv")
    assert frame["t"].iloc[-1] == pytest.approx(5.0)


def test_simulate_blowup_exit_code(tmp_path, capsys):
    payload = {
        "system": {"preset": "linear", "B": [[0.0]], "a": -10.0},
        "history": {"kind": "constant", "value": [1.0]},
        "T": 5.0,
        "h": 0.05,
        "tolerances": {"blowup_threshold": 1000.0},
    }
    assert run_cli(tmp_path, "simulate", payload) == 3
    assert "simulate: error:" in capsys.readouterr().err


# measure

def test_measure_writes_report_and_snapshots(tmp_path):
    payload = {"system": LINEAR, "T": 40.0, "h": 0.05, "dump_snapshots": True}
    assert run_cli(tmp_path, "measure", payload) == 0
    document = json.loads((tmp_path / "out" / "measure.json").read_text())
    assert document["snapshots"] > 0
    assert len(document["observables"]) > 0
    assert document["snapshots_file"] == "snapshots.csv"
    assert (tmp_path / "out" / document["snapshots_file"]).exists()
    for summary in document["observables"]:
        assert summary["mean"] == summary["time_average"]
        assert summary["stderr"] is None


def test_measure_without_snapshot_dump(tmp_path):
    payload = {"system": LINEAR, "T": 20.0, "h": 0.05}
    assert run_cli(tmp_path, "measure", payload) == 0
    document = json.loads((tmp_path / "out" / "measure.json").read_text())
    assert document["snapshots_file"] is None
    assert not (tmp_path / "out" / "snapshots.csv").exists()


def test_measure_reports_ensemble_mean_and_stderr(tmp_path):
    payload = {
        "system": LINEAR,
        "T": 20.0,
        "h": 0.05,
        "observables": [{"kind": "point", "theta": 0.0}],
        "ensemble": {"n_traj": 4},
    }
    assert run_cli(tmp_path, "measure", payload) == 0
    summary = json.loads((tmp_path / "out" / "measure.json").read_text())["observables"][0]
    assert summary["mean"] == summary["ensemble"]["mean"]
    assert summary["stderr"] == summary["ensemble"]["stderr"]
    assert summary["stderr"] >= 0.0


def test_history_length_mismatch_is_invalid(tmp_path, capsys):
    payload = {"system": LINEAR, "history": {"kind": "constant", "value": [1.0, 2.0]}, "T": 2.0, "h": 0.05}
    assert run_cli(tmp_path, "simulate", payload) == 1
    assert "simulate: error:" in capsys.readouterr().err


def test_observable_component_out_of_range_is_invalid(tmp_path, capsys):
    payload = {"system": LINEAR, "T": 20.0, "h": 0.05, "observables": [{"kind": "point", "component": 1}]}
    assert run_cli(tmp_path, "measure", payload) == 1
    assert "component" in capsys.readouterr().err


# telegraph

def test_telegraph_static_field(tmp_path):
    payload = {
        "L": 1.0, "C": 1.0, "R0": 1.0, "E": 2.0,
        "V0": {"kind": "sine", "offset": 2.0, "amplitude": 0.5, "mode": 1},
        "I0": {"kind": "polynomial", "coefficients": [0.0, 0.3, -0.3]},
        "T": 3.0, "h": 0.05, "nx": 4,
    }
    assert run_cli(tmp_path, "telegraph", payload) == 0
    field = pd.read_csv(tmp_path / "out" / "field.csv")
    assert list(field.columns) == ["t", "x", "V", "I"]
    assert len(field) == 305
    document = json.loads((tmp_path / "out" / "telegraph.json").read_text())
    assert document["cross_validation"]["compatible"]


# memory

def test_memory_diagnostics(tmp_path):
    payload = {
        "eigenvalues": [1.0, 4.0],
        "nu": 1.0,
        "forcing": [0.5, 0.0],
        "kernel": {"family": "exponential", "mu0": 1.0, "delta": 1.0},
        "u0": [1.0, -0.5],
        "T": 3.0,
        "h": 0.01,
    }
    assert run_cli(tmp_path, "memory", payload) == 0
    for name in ("diagnostics.csv", "kernel.json", "memory.json"):
        assert (tmp_path / "out" / name).exists()
    document = json.loads((tmp_path / "out" / "memory.json").read_text())
    assert document["energy"]["holds"]
    assert document["tail_bound"]["holds"]
    assert document["tail_bound"]["fitted"] <= document["tail_bound"]["constant"]
