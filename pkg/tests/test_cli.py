"""Command-line behavior: exit codes, JSON output, and determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest

from mdlselect.dataset import Dataset, load_csv
from mdlselect.simlab import SimConfig, generate_linear, save_csv


def run_cli(*argv):
    return subprocess.run(
        [sys.executable, "-m", "mdlselect", *argv],
        capture_output=True,
        text=True,
    )


def _write_exact_signal_csv(path, n=40, p=5, seed=100):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    y = 2.0 * X[:, 0]
    save_csv(Dataset(y, X), path)


def _write_curved_signal_csv(path, n=120, p=4, seed=200):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, p))
    y = 3.0 * (2.0 * X[:, 0] - 1.0) ** 2 + 0.1 * rng.standard_normal(n)
    save_csv(Dataset(y, X), path)


def _linear_config(tmp_path, **overrides):
    obj = {
        "design": "linear",
        "n": 40,
        "p": 8,
        "d": 2,
        "b": 3.0,
        "error_law": "gaussian",
        "replications": 2,
        "seed": 404,
        "methods": ["mdl-linear"],
    }
    obj.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(obj))
    return path


class TestFitCommand:
    def test_exact_signal_fixture(self, tmp_path):
        csv = tmp_path / "data.csv"
        _write_exact_signal_csv(csv)
        proc = run_cli("fit", "--input", str(csv), "--response", "y")
        assert proc.returncode == 0, proc.stderr
        out = json.loads(proc.stdout)
        assert out["selected"]["names"] == ["x1"]
        assert out["selected"]["indices"] == [1]
        assert out["method"] == "mdl-linear"
        assert out["coefficients"][0] == pytest.approx(2.0, abs=1e-8)
        assert out["criterion_curve"][0][0] == 0

    def test_robust_method_flag(self, tmp_path):
        csv = tmp_path / "data.csv"
        _write_exact_signal_csv(csv)
        proc = run_cli(
            "fit", "--input", str(csv), "--response", "y", "--method", "robust-mdl"
        )
        assert proc.returncode == 0, proc.stderr
        out = json.loads(proc.stdout)
        assert out["method"] == "mdl-robust"
        assert out["selected"]["names"] == ["x1"]

    def test_missing_response_flag_exits_2(self, tmp_path):
        csv = tmp_path / "data.csv"
        _write_exact_signal_csv(csv)
        proc = run_cli("fit", "--input", str(csv))
        assert proc.returncode == 2
        assert "error:" in proc.stderr
        assert "--response" in proc.stderr

    def test_missing_input_file_exits_2(self, tmp_path):
        proc = run_cli(
            "fit", "--input", str(tmp_path / "nope.csv"), "--response", "y"
        )
        assert proc.returncode == 2
        assert proc.stderr.startswith("error:")

    def test_unknown_flag_rejected(self, tmp_path):
        csv = tmp_path / "data.csv"
        _write_exact_signal_csv(csv)
        proc = run_cli("fit", "--input", str(csv), "--response", "y", "--bogus")
        assert proc.returncode == 2

    def test_output_file_and_seed_determinism(self, tmp_path):
        csv = tmp_path / "data.csv"
        _write_exact_signal_csv(csv)
        outs = []
        for name in ("a.json", "b.json"):
            path = tmp_path / name
            proc = run_cli(
                "fit",
                "--input", str(csv),
                "--response", "y",
                "--seed", "7",
                "--output", str(path),
            )
            assert proc.returncode == 0, proc.stderr
            obj = json.loads(path.read_text())
            assert obj["seed"] == 7
            obj.pop("timings_ms")
            outs.append(json.dumps(obj, sort_keys=True).encode())
        assert outs[0] == outs[1]


class TestFitAdditiveCommand:
    def test_component_grid_output(self, tmp_path):
        csv = tmp_path / "curve.csv"
        _write_curved_signal_csv(csv)
        proc = run_cli("fit-additive", "--input", str(csv), "--response", "y")
        assert proc.returncode == 0, proc.stderr
        out = json.loads(proc.stdout)
        assert out["method"] == "mdl-additive"
        assert out["selected"]["names"] == ["x1"]
        assert out["basis_dim"] == 9
        assert len(out["groups"]) == 1
        group = out["groups"][0]
        assert group["covariate"] == 1
        assert group["name"] == "x1"
        assert len(group["grid"]) == 100 and len(group["values"]) == 100
        assert group["domain"][0] < group["domain"][1]
        lo, hi = group["domain"]
        assert group["grid"][0] == pytest.approx(lo)
        assert group["grid"][-1] == pytest.approx(hi)

    def test_robust_flag_and_narrow_basis(self, tmp_path):
        csv = tmp_path / "curve.csv"
        _write_curved_signal_csv(csv, n=90)
        proc = run_cli(
            "fit-additive",
            "--input", str(csv),
            "--response", "y",
            "--robust",
            "--basis-dim", "6",
            "--degree", "2",
        )
        assert proc.returncode == 0, proc.stderr
        out = json.loads(proc.stdout)
        assert out["method"] == "mdl-additive-robust"
        assert out["basis_dim"] == 6
        assert out["degree"] == 2


class TestSimulateCommand:
    def test_round_trips_a_replication(self, tmp_path):
        cfg_path = _linear_config(tmp_path, replications=1)
        data = tmp_path / "rep.csv"
        truth = tmp_path / "truth.json"
        proc = run_cli(
            "simulate",
            "--config", str(cfg_path),
            "--rep", "1",
            "--output", str(data),
            "--truth-output", str(truth),
        )
        assert proc.returncode == 0, proc.stderr
        loaded = load_csv(str(data), "y")
        cfg = SimConfig.from_dict(json.loads(cfg_path.read_text()))
        want, beta = generate_linear(cfg, rep=1)
        assert np.array_equal(loaded.X, want.X)
        assert np.array_equal(np.asarray(loaded.y), np.asarray(want.y))
        t = json.loads(truth.read_text())
        assert t["design"] == "linear"
        assert t["support"] == [1, 2]
        assert t["beta"] == [float(v) for v in beta]

    def test_bad_config_json_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        proc = run_cli(
            "simulate", "--config", str(bad), "--output", str(tmp_path / "x.csv")
        )
        assert proc.returncode == 2
        assert proc.stderr.startswith("error:")
        assert "JSON" in proc.stderr


class TestBenchCommand:
    def test_report_and_rep_dump(self, tmp_path):
        cfg_path = _linear_config(tmp_path)
        report = tmp_path / "report.json"
        reps = tmp_path / "reps.csv"
        proc = run_cli(
            "bench",
            "--config", str(cfg_path),
            "--output", str(report),
            "--dump-reps", str(reps),
        )
        assert proc.returncode == 0, proc.stderr
        obj = json.loads(report.read_text())
        assert obj["replications_used"] == 2
        assert obj["failures"] == []
        metrics = obj["metrics"]["mdl-linear"]
        assert metrics["fn"] == 0.0 and metrics["fp"] == 0.0 and metrics["f1"] == 1.0
        assert "seconds" not in metrics
        lines = reps.read_text().strip().splitlines()
        assert lines[0] == "rep,method,fn,fp,f1,mse,seconds"
        assert len(lines) == 3

    def test_metric_fields_byte_identical_across_runs(self, tmp_path):
        cfg_path = _linear_config(tmp_path)
        blobs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            proc = run_cli("bench", "--config", str(cfg_path), "--output", str(out))
            assert proc.returncode == 0, proc.stderr
            obj = json.loads(out.read_text())
            blobs.append(
                json.dumps(
                    {"config": obj["config"], "metrics": obj["metrics"]},
                    sort_keys=True,
                ).encode()
            )
        assert blobs[0] == blobs[1]

    def test_strict_mode_surfaces_failures(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(
            json.dumps(
                {
                    "design": "additive",
                    "n": 10,
                    "p": 5,
                    "d": 4,
                    "replications": 2,
                    "seed": 6,
                    "methods": ["mdl-additive"],
                }
            )
        )
        out = tmp_path / "report.json"
        proc = run_cli(
            "bench", "--config", str(cfg_path), "--output", str(out), "--strict"
        )
        assert proc.returncode == 3
        assert "error:" in proc.stderr
        assert "2 replication(s) failed" in proc.stderr
        obj = json.loads(out.read_text())
        assert len(obj["failures"]) == 2


class TestOracleCommand:
    def test_candidate_count_and_selection(self, tmp_path):
        csv = tmp_path / "data.csv"
        _write_exact_signal_csv(csv)
        proc = run_cli(
            "oracle",
            "--input", str(csv),
            "--response", "y",
            "--max-size", "2",
        )
        assert proc.returncode == 0, proc.stderr
        out = json.loads(proc.stdout)
        assert out["n_candidates"] == 1 + 5 + 10
        assert out["selected"]["names"] == ["x1"]

    def test_budget_refusal_exits_2(self, tmp_path):
        rng = np.random.default_rng(1)
        csv = tmp_path / "wide.csv"
        save_csv(Dataset(rng.standard_normal(10), rng.standard_normal((10, 30))), csv)
        proc = run_cli(
            "oracle",
            "--input", str(csv),
            "--response", "y",
            "--max-size", "15",
        )
        assert proc.returncode == 2
        assert proc.stderr.startswith("error:")
        assert "budget" in proc.stderr
