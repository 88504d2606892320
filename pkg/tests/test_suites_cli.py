import json
import os
import subprocess
import sys

import numpy as np
import pytest

from semiq.cli import build_geometry, main
from semiq.errors import ConfigError
from semiq.suites import emit_report, run_suite


FLAT_CONFIG = {
    "dim": 2,
    "metric": [["1", "0"], ["0", "1"]],
    "poisson": [["0", "1"], ["-1", "0"]],
    "connection": "levi-civita",
    "box": 1.0,
    "name": "config-flat",
}

CURVED_CONFIG = {
    "dim": 2,
    "metric": [["exp(2*x1)", "0"], ["0", "exp(2*x1)"]],
    "poisson": [["0", "exp(-2*x1)"], ["-exp(-2*x1)", "0"]],
    "connection": "levi-civita",
    "box": 0.8,
    "name": "config-conformal",
}


class TestRunSuite:
    def test_unknown_suite(self, flat1):
        with pytest.raises(ConfigError):
            run_suite("nope", flat1)

    def test_flat_dga_residuals_tiny(self, flat1):
        r = run_suite("dga", flat1, points=10, seed=1, tol=1e-12)
        assert r.all_passed
        for c in r.checks:
            assert c.max_abs_classical <= 1e-12 and c.max_abs_lambda <= 1e-12

    def test_cpn_classical_compat_passes(self, cpn2):
        r = run_suite("classical-compat", cpn2, points=30, seed=42, tol=1e-8)
        assert r.all_passed

    def test_torsion_counterexample_fails_qlc(self, torsion2):
        r = run_suite("qlc", torsion2, points=25, seed=7, tol=1e-8)
        assert not r.all_passed
        rec = next(c for c in r.checks if c.check == "qlc-residual")
        assert rec.max_abs_classical > 1e-3

    def test_determinism_byte_identical(self, cpn1):
        a = emit_report(run_suite("metric", cpn1, points=6, seed=5))
        b = emit_report(run_suite("metric", cpn1, points=6, seed=5))
        assert a.encode() == b.encode()

    def test_json_roundtrip(self, flat1):
        r = run_suite("classical-compat", flat1, points=5, seed=2)
        doc = emit_report(r)
        parsed = json.loads(doc)
        assert parsed[0]["suite"] == "classical-compat"
        assert parsed[0]["seed"] == 2
        assert parsed[0]["points"] == 5
        assert parsed[0]["elapsed_ms"] is None
        assert all(c["passed"] for c in parsed[0]["checks"])
        assert emit_report(r) == doc

    def test_config_geometry_suites(self, tmp_path):
        path = tmp_path / "conf.json"
        path.write_text(json.dumps(CURVED_CONFIG))
        G = build_geometry(str(path))
        assert G.deriv_mode == "jets"
        r = run_suite("classical-compat", G, points=10, seed=3)
        assert r.all_passed                    # default tol 1e-6 for parsed mode
        r2 = run_suite("dga", G, points=6, seed=3)
        assert r2.all_passed


class TestCli:
    def test_exit_code_contract(self, capsys):
        assert main(["check", "flat", "--n", "1", "--points", "4", "--seed", "1"]) == 0
        capsys.readouterr()
        assert main(["check", "flat-torsion", "--points", "4", "--seed", "1"]) == 1
        err = capsys.readouterr().err
        assert "qlc-residual" in err

    def test_unknown_geometry(self, capsys):
        assert main(["check", "torus"]) == 2
        assert "unknown geometry" in capsys.readouterr().err

    def test_report_file_and_env_dir(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("SEMIQ_REPORT_DIR", str(tmp_path))
        code = main(["check", "flat", "--points", "3", "--seed", "4",
                     "--report", "out/r.json"])
        assert code == 0
        data = json.loads((tmp_path / "out" / "r.json").read_text())
        assert data[0]["geometry"] == "flat(n=1)"
        capsys.readouterr()

    def test_eval_star(self, capsys):
        assert main(["eval", "star", "--geometry", "cpn", "--n", "1",
                     "--a", "z1", "--b", "conj(z1)", "--at", "0.3,0.1"]) == 0
        out = capsys.readouterr().out
        assert "0.605" in out

    def test_evolve(self, capsys):
        assert main(["evolve", "--geometry", "flat", "--n", "1",
                     "--H", "x2^2/2", "--a", "x1", "--at", "0.1,0.5"]) == 0
        out = capsys.readouterr().out
        assert "adot" in out

    def test_subprocess_byte_identical_reports(self, tmp_path):
        env = dict(os.environ)
        outs = []
        for name in ("a.json", "b.json"):
            p = tmp_path / name
            r = subprocess.run(
                [sys.executable, "-m", "semiq", "check", "flat", "--n", "1",
                 "--points", "4", "--seed", "9", "--report", str(p)],
                capture_output=True, env=env, cwd="/root/pkg")
            assert r.returncode == 0, r.stderr
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]
