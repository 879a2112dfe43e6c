import glob
import json
import os

import numpy as np
import pytest

from dnch import cli
from dnch.cli import EXIT_CODES, main, parse_config
from dnch.errors import ConfigurationError, InvariantViolation
from dnch.io import read_table

ZERO = {
    "grid": {"dim": 1, "n": 17},
    "psi": {"kind": "double_well"},
    "beta": {"kind": "sign_play", "rho": 1.0},
    "T": 0.05,
}

BENCH = {
    **ZERO,
    "u0": {"kind": "cosine", "mean": 0.0, "amplitude": 0.5, "mode": 1},
    "g": {"kind": "separable", "amplitude": 0.5, "mode": 2, "time": "sin", "rate": 3.0},
}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def csv_files(out):
    return sorted(glob.glob(os.path.join(out, "**", "*.csv"), recursive=True))


class TestParse:
    def test_defaults(self):
        cfg = parse_config(json.dumps(ZERO))
        p, s = cfg.params, cfg.solver
        assert (p.sigma, p.M, p.alpha, s.lam, s.tau) == (1.0, 1.0, 1.0, 1e-3, 1e-2)
        assert cfg.experiment == "run"

    def test_lambda_range(self):
        with pytest.raises(ConfigurationError, match="λ ∈ \\(0,1\\)"):
            parse_config(json.dumps({**ZERO, "solver": {"lambda": 1.5}}))

    def test_duplicate_key_location(self):
        text = '{\n  "T": 0.1,\n  "grid": {"dim": 1, "n": 17},\n  "T": 0.2\n}'
        with pytest.raises(ConfigurationError, match="line 4"):
            parse_config(text)

    def test_all_violations_reported(self):
        doc = {**ZERO, "sigma": -1.0, "solver": {"lambda": 2.0, "tau": 0.9}, "bogus": 1}
        with pytest.raises(ConfigurationError) as err:
            parse_config(json.dumps(doc))
        text = "\n".join(err.value.violations)
        assert "sigma" in text and "λ ∈ (0,1)" in text and "bogus" in text

    def test_tau_bound(self):
        with pytest.raises(ConfigurationError, match="sigma/\\(2K\\)"):
            parse_config(json.dumps({**ZERO, "solver": {"tau": 0.9}}))

    def test_no_expression_sources(self):
        with pytest.raises(ConfigurationError):
            parse_config(json.dumps({**ZERO, "g": {"kind": "expression", "text": "sin(x)"}}))

    def test_document_round_trip(self):
        cfg = parse_config(json.dumps(BENCH))
        again = parse_config(json.dumps(cfg.document))
        assert again.document == cfg.document


class TestMain:
    def test_zero_data_run(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["run", "--config", write(tmp_path, ZERO), "--out", out]) == 0
        _, data = read_table(os.path.join(out, "series_energy.csv"), ("t", "energy"))
        assert np.all(data[:, 1] == 0.25)
        manifest = json.load(open(os.path.join(out, "manifest.json")))
        assert manifest["status"] == "ok" and manifest["code_version"]
        assert "total" in manifest["timings"]
        json.loads(capsys.readouterr().out)

    def test_config_error_writes_nothing(self, tmp_path):
        out = tmp_path / "out"
        doc = {**ZERO, "solver": {"tau": 0.9}}
        assert main(["run", "--config", write(tmp_path, doc), "--out", str(out)]) == EXIT_CODES["config"]
        assert not out.exists()

    def test_missing_config_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == EXIT_CODES["config"]

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["run", "--config", write(tmp_path, ZERO), "--out", str(blocker / "sub")]) == EXIT_CODES["io"]

    def test_single_lambda_sweep(self, tmp_path):
        out = str(tmp_path / "out")
        doc = {**BENCH, "sweep": {"lambdas": [0.01]}}
        assert main(["sweep-lambda", "--config", write(tmp_path, doc), "--out", out]) == 0
        header, data = read_table(os.path.join(out, "lambda_sweep.csv"))
        assert data.shape[0] == 0

    def test_rerun_from_manifest_is_byte_identical(self, tmp_path):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["run", "--config", write(tmp_path, BENCH), "--out", a, "--dump-every", "2"]) == 0
        assert main(["run", "--config", os.path.join(a, "manifest.json"), "--out", b]) == 0
        fa, fb = csv_files(a), csv_files(b)
        assert [os.path.relpath(p, a) for p in fa] == [os.path.relpath(p, b) for p in fb]
        assert len(fa) > 10
        for x, y in zip(fa, fb):
            assert open(x, "rb").read() == open(y, "rb").read()

    def test_every_csv_parses_under_its_header(self, tmp_path):
        out = str(tmp_path / "out")
        assert main(["run", "--config", write(tmp_path, BENCH), "--out", out, "--emit-plots"]) == 0
        assert glob.glob(os.path.join(out, "*.gp"))
        for path in csv_files(out):
            header, data = read_table(path)
            assert data.shape[1] == len(header)
            write_back = tmp_path / "copy.csv"
            from dnch.io import write_table

            write_table(write_back, header, data.tolist())
            assert read_table(write_back, header)[1].tolist() == data.tolist()

    def test_check(self, tmp_path):
        out = str(tmp_path / "out")
        assert main(["check", "--config", write(tmp_path, BENCH), "--out", out]) == 0
        summary = json.load(open(os.path.join(out, "manifest.json")))["summary"]
        assert summary["mass_ledger_with_boundary_reaction"]["value"] <= 1e-10
        assert summary["mass_ledger_literal_passed"] is False

    def test_contdep(self, tmp_path):
        out = str(tmp_path / "out")
        doc = {**BENCH, "beta": {"kind": "cubic"}, "u0": {"kind": "cosine", "mean": 0.5, "amplitude": 0.4, "mode": 1},
               "contdep": {"scales": [1.0, 0.5]}}
        assert main(["contdep", "--config", write(tmp_path, doc), "--out", out, "--jobs", "2"]) == 0
        _, data = read_table(os.path.join(out, "contdep.csv"), ("scale", "lhs", "rhs", "ratio", "confined"))
        assert data[0, 1] > data[1, 1] > 0

    def test_mms_needs_single_valued_beta(self, tmp_path):
        assert main(["mms", "--config", write(tmp_path, BENCH), "--out", str(tmp_path / "o")]) == EXIT_CODES["config"]

    def test_solver_failure_exit_code(self, tmp_path):
        doc = {**BENCH, "solver": {"newton_max": 1, "newton_tol": 1e-14}}
        out = str(tmp_path / "out")
        assert main(["run", "--config", write(tmp_path, doc), "--out", out]) == EXIT_CODES["solver"]
        assert json.load(open(os.path.join(out, "manifest.json")))["status"] == "solver"

    def test_invariant_exit_code(self, tmp_path, monkeypatch):
        import dnch.diagnostics

        def boom(*args):
            raise InvariantViolation("forced")

        monkeypatch.setattr(dnch.diagnostics, "check_step_invariants", boom)
        out = str(tmp_path / "out")
        assert main(["run", "--config", write(tmp_path, BENCH), "--out", out]) == EXIT_CODES["invariant"]

    def test_distinct_codes(self):
        codes = [EXIT_CODES[k] for k in ("config", "solver", "invariant")]
        assert codes == [2, 3, 4]
