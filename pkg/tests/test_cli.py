import csv
import hashlib
import json
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

import edrlab.metrics as metrics
from edrlab.cli import main
from edrlab.explorer import make_estimator
from edrlab.inequalities import EDRReport, evaluate_report
from edrlab.models import build_cnot_model

from conftest import PLUS
from test_models import explicit_doc


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestEval:
    def test_cnot_report(self, tmp_path):
        out = tmp_path / "report.json"
        code = main(["eval", "--builder", "cnot", "--state", "plus", "--estimator", "optimal",
                     "--out", str(out)])
        assert code == 0
        rep = EDRReport.from_json(out.read_text())
        eq4 = rep.result("EQ4")
        assert eq4.slack == 0 and eq4.premise_ok
        m = build_cnot_model()
        ref = evaluate_report(m, PLUS, make_estimator(m, PLUS, "optimal"), state_label="plus")
        assert rep == ref

    def test_stdout_and_model_file(self, tmp_path, capsys):
        model = tmp_path / "m.json"
        model.write_text(json.dumps({"builder": "random", "params": {"d_obj": 3, "d_probe": 2, "seed": 1}}))
        before = digest(model)
        assert main(["eval", "--model", str(model), "--state", "[1, [0, 1], 0]", "--estimator", "identity"]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["model"] == "random-3x2-1" and d["estimator"]["provenance"] == "identity"
        assert digest(model) == before

    def test_estimator_file(self, tmp_path, capsys):
        f = tmp_path / "f.json"
        f.write_text(json.dumps({"provenance": "custom", "readouts": [-1, 1], "values": [-0.5, 0.5]}))
        before = digest(f)
        assert main(["eval", "--builder", "cnot", "--state", "zero", "--estimator", f"file:{f}"]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["metrics"]["epsilon_xt"] == pytest.approx(0.5, abs=1e-15)
        assert digest(f) == before

    def test_gaussian_state_and_set(self, capsys):
        code = main(["eval", "--builder", "von_neumann", "--set", "probe_width=1.0",
                     "--set", "half_width=8", "--state", "gauss:0,1", "--estimator", "identity"])
        assert code == 0
        d = json.loads(capsys.readouterr().out)
        eq18 = [r for r in d["inequalities"] if r["id"] == "EQ18"][0]
        assert abs(eq18["slack"]) <= 1e-3


class TestValidate:
    def test_non_hermitian(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        x0 = np.array([[1, 0.032], [0, -1]])
        bad.write_text(json.dumps(explicit_doc(build_cnot_model(), x0=x0)))
        before = digest(bad)
        assert main(["validate", "--model", str(bad)]) == 3
        err = capsys.readouterr().err
        assert err.startswith("error:") and "x0 not Hermitian" in err
        assert digest(bad) == before

    def test_valid(self, tmp_path, capsys):
        good = tmp_path / "good.json"
        good.write_text(json.dumps(explicit_doc(build_cnot_model())))
        assert main(["validate", "--model", str(good)]) == 0
        assert capsys.readouterr().out.startswith("ok:")

    def test_eval_rejects_invalid_model(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(explicit_doc(build_cnot_model(), U=2 * np.eye(4))))
        assert main(["eval", "--model", str(bad)]) == 3
        assert "U not unitary" in capsys.readouterr().err

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{ not json")
        assert main(["validate", "--model", str(bad)]) == 3
        assert "bad.json:1:3" in capsys.readouterr().err


class TestSweepCommand:
    def test_equality_curve(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(["sweep", "--builder", "von_neumann", "--param", "probe_width", "--from", "0.5",
                     "--to", "2", "--steps", "16", "--log", "--estimator", "identity", "--out", str(out)])
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 16
        assert all(abs(float(r["slack_EQ18"])) <= 1e-3 for r in rows)


class TestSampleSearch:
    def test_sample(self, capsys):
        assert main(["sample", "--builder", "cnot", "--state", "plus", "--n", "1000", "--seed", "7",
                     "--estimator", "optimal"]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["n_samples"] == 1000 and d["empirical_eps_xt"] == 0.0

    def test_search(self, capsys):
        assert main(["search", "--builder", "identity", "--objective", "EQ2", "--budget", "400"]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["best_slack"] <= -1 + 1e-6 and len(d["trace"]) == d["evaluations"] <= 400


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ["eval"],
        ["eval", "--builder", "nope"],
        ["eval", "--builder", "cnot", "--set", "oops"],
        ["eval", "--builder", "cnot", "--estimator", "median"],
        ["eval", "--builder", "cnot", "--state", "up"],
        ["eval", "--model", "/nonexistent/model.json"],
        ["eval", "--builder", "cnot", "--model", "x.json"],
        ["frobnicate"],
        ["sweep", "--builder", "von_neumann", "--param", "probe_width", "--from", "2", "--to", "1",
         "--steps", "3"],
        ["search", "--builder", "cnot", "--objective", "EQ2", "--vars", "nothing"],
    ])
    def test_usage(self, argv, capsys):
        assert main(argv) == 2
        assert "error" in capsys.readouterr().err

    def test_precondition(self, capsys):
        assert main(["eval", "--builder", "von_neumann", "--set", "probe_width=0.1"]) == 3
        assert capsys.readouterr().err.startswith("error:")

    def test_numerical_breach(self, monkeypatch, capsys):
        real = metrics.per_readout_error

        def skewed(*args):
            return [replace(r, error=r.error + 0.1) for r in real(*args)]

        monkeypatch.setattr(metrics, "per_readout_error", skewed)
        assert main(["eval", "--builder", "cnot", "--state", "plus"]) == 4
        err = capsys.readouterr().err
        assert err.startswith("error: numerical invariant breach") and "routes disagree" in err


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "edrlab", "eval", "--builder", "identity",
                           "--state", "sy+", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    d = json.loads(out.read_text())
    assert d["non_informative"] is True
