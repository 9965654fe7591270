"""End-to-end CLI tests: JSON output schemas, exit codes, artifact
determinism, and the run-pipeline manifest.

All invocations go through main(argv) in-process (stdout captured with
capsys) except the environment-flag test, which needs a fresh interpreter.
"""

from __future__ import annotations

import hashlib
import json
import os
import subprocess
import sys

import pytest

from hypescape import read_paths
from hypescape.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    out = json.loads(captured.out) if captured.out.strip() else None
    err = json.loads(captured.err) if captured.err.strip() else None
    return code, out, err


def _sha256(path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestClassify:
    CASES = [
        (["--family", "sqrtloglog", "--param", "2.0"], "convergent", "analytic_exponent"),
        (["--family", "sqrtloglog", "--param", "1.0"], "divergent", "analytic_exponent"),
        (["--family", "constant", "--param", "1.0"], "divergent", "analytic_exponent"),
        (["--family", "kolmogorov_erdos", "--param", "4.0"], "convergent", "analytic_exponent"),
        (["--family", "custom", "--knots-t", "16,100,1000,10000",
          "--knots-g", "1,1,1,1"], "divergent", "numeric_trend"),
    ]

    @pytest.mark.parametrize("argv, verdict, method", CASES)
    def test_verdicts(self, capsys, argv, verdict, method):
        code, out, _ = _run(capsys, ["classify", *argv])
        assert code == EXIT_OK
        assert out["verdict"] == verdict
        assert out["method"] == method
        assert out["shift"] is None
        assert out["tail_estimates"]

    def test_shift_invariance_and_record(self, capsys):
        code, plain, _ = _run(capsys, ["classify", "--family", "sqrtloglog",
                                       "--param", "2.0"])
        assert code == EXIT_OK
        code, shifted, _ = _run(capsys, ["classify", "--family", "sqrtloglog",
                                         "--param", "2.0", "--shift", "3",
                                         "--direction", "minus"])
        assert code == EXIT_OK
        assert shifted["verdict"] == plain["verdict"]
        assert shifted["shift"]["n"] == 3.0
        assert shifted["shift"]["direction"] == "minus"
        assert shifted["shift"]["effective_t0"] >= plain["t0"]

    def test_out_dir_artifact_matches_stdout(self, capsys, tmp_path):
        code, out, _ = _run(capsys, ["classify", "--family", "constant",
                                     "--param", "1.0", "--out-dir", str(tmp_path)])
        assert code == EXIT_OK
        on_disk = json.loads((tmp_path / "classify.json").read_text())
        assert on_disk == out

    def test_custom_without_knots_is_config_error(self, capsys):
        code, _, err = _run(capsys, ["classify", "--family", "custom"])
        assert code == EXIT_CONFIG
        assert err["error"] == "ConfigError"
        assert err["exit_code"] == EXIT_CONFIG


class TestSimulate:
    def test_summary_schema(self, capsys):
        code, out, _ = _run(capsys, ["simulate", "--kind", "radial", "--d", "3",
                                     "--horizon", "20", "--paths", "5",
                                     "--seed", "9", "--preset", "medium"])
        assert code == EXIT_OK
        assert out["kind"] == "radial"
        assert out["n_paths"] == 5
        assert len(out["terminal"]) == 5
        assert out["n_times"] > 200
        assert out["backend"] in ("numba", "numpy")
        assert all(v > 0 for v in out["terminal"])

    def test_deterministic_artifacts(self, capsys, tmp_path):
        argv = ["simulate", "--kind", "radial", "--d", "3", "--horizon", "20",
                "--paths", "5", "--seed", "9", "--preset", "medium",
                "--format", "bin"]
        code_a, out_a, _ = _run(capsys, [*argv, "--out-dir", str(tmp_path / "a")])
        code_b, out_b, _ = _run(capsys, [*argv, "--out-dir", str(tmp_path / "b")])
        assert code_a == code_b == EXIT_OK
        fa = tmp_path / "a" / "paths_radial.bin"
        fb = tmp_path / "b" / "paths_radial.bin"
        assert _sha256(fa) == _sha256(fb)
        assert out_a["terminal"] == out_b["terminal"]

    def test_csv_output_readable(self, capsys, tmp_path):
        code, out, _ = _run(capsys, ["simulate", "--kind", "bm", "--horizon", "5",
                                     "--paths", "3", "--out-dir", str(tmp_path),
                                     "--format", "csv"])
        assert code == EXIT_OK
        bundle = read_paths(tmp_path / "paths_bm1d.csv")
        assert bundle.kind == "bm1d"
        assert bundle.n_paths == 3
        summary = json.loads((tmp_path / "simulate_summary.json").read_text())
        assert summary["paths_file"].endswith("paths_bm1d.csv")

    def test_missing_horizon_is_config_error(self, capsys):
        code, _, err = _run(capsys, ["simulate", "--paths", "3"])
        assert code == EXIT_CONFIG
        assert err["error"] == "ConfigError"


@pytest.fixture(scope="module")
def radial_paths_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_paths")
    code = main(["simulate", "--kind", "radial", "--d", "3", "--horizon", "100",
                 "--paths", "50", "--seed", "12", "--preset", "medium",
                 "--out-dir", str(out), "--format", "bin"])
    assert code == EXIT_OK
    return out / "paths_radial.bin"


class TestAnalysisCommands:
    def test_envelope_upper(self, capsys, radial_paths_file):
        code, out, _ = _run(capsys, ["envelope", "--paths-file",
                                     str(radial_paths_file), "--mode", "upper",
                                     "--family", "sqrtloglog", "--param", "3.0",
                                     "--d", "3", "--t-start", "16"])
        assert code == EXIT_OK
        assert out["kind"] == "radial_upper"
        assert out["n_paths"] == 50
        assert out["refined_checks"] == 0  # loaded bundles carry no increments
        assert 0.0 <= out["ci"][0] <= out["fraction"] <= out["ci"][1] <= 1.0

    def test_envelope_bm_mode_rejects_radial_file(self, capsys, radial_paths_file):
        code, _, err = _run(capsys, ["envelope", "--paths-file",
                                     str(radial_paths_file), "--mode",
                                     "bm-two-sided", "--family", "constant",
                                     "--param", "1.0", "--t-start", "16"])
        assert code == EXIT_CONFIG
        assert err["error"] == "ConfigError"

    def test_lil(self, capsys, radial_paths_file):
        code, out, _ = _run(capsys, ["lil", "--paths-file", str(radial_paths_file),
                                     "--d", "3", "--t-start", "16"])
        assert code == EXIT_OK
        assert out["n_paths"] == 50
        assert set(out["quantiles"]) == {"q10", "q25", "q50", "q75", "q90"}
        assert len(out["suprema"]) == 50

    def test_drift(self, capsys, radial_paths_file):
        code, out, _ = _run(capsys, ["drift", "--paths-file",
                                     str(radial_paths_file)])
        assert code == EXIT_OK
        assert out["n_paths"] == 50
        assert out["horizon"] == 100.0
        assert out["ci"][0] <= out["mean"] <= out["ci"][1]

    def test_missing_paths_file_is_io_error(self, capsys, tmp_path):
        code, _, err = _run(capsys, ["drift", "--paths-file",
                                     str(tmp_path / "nope.bin")])
        assert code == EXIT_IO
        assert err["exit_code"] == EXIT_IO

    def test_crosscheck_schema(self, capsys):
        code, out, _ = _run(capsys, ["crosscheck", "--d", "3", "--t", "1.0",
                                     "--paths", "300", "--seed", "2",
                                     "--preset", "medium"])
        assert code == EXIT_OK
        assert set(out) == {"alpha", "d", "n_paths", "p_value", "reject",
                            "seed", "statistic", "t"}
        assert 0.0 <= out["p_value"] <= 1.0
        assert out["seed"] == 2
        assert isinstance(out["reject"], bool)


RUN_CONFIG = {
    "seed": 21,
    "format": "bin",
    "simulate": {"kind": "radial", "d": 3, "horizon": 120.0, "paths": 60,
                 "preset": "medium"},
    "classify": {"family": "sqrtloglog", "param": 3.0},
    "envelope": {"mode": "upper", "t_start": 50.0, "family": "sqrtloglog",
                 "param": 1.0},
    "lil": {"t_start": 16.0},
    "drift": {},
}


def _write_config(tmp_path, cfg) -> str:
    p = tmp_path / "config.json"
    p.write_text(json.dumps(cfg))
    return str(p)


class TestRunPipeline:
    def test_end_to_end(self, capsys, tmp_path):
        cfg_path = _write_config(tmp_path, RUN_CONFIG)
        out_dir = tmp_path / "out"
        code, manifest, _ = _run(capsys, ["run", "--config", cfg_path,
                                          "--out-dir", str(out_dir)])
        assert code == EXIT_OK
        assert manifest["tool"] == "hypescape"
        assert manifest["seed"] == 21  # taken from the config file
        assert manifest["stages"] == ["simulate", "classify", "envelope",
                                      "lil", "drift"]
        expected = {"paths_radial", "classify", "envelope", "lil", "drift",
                    "simulate_summary"}
        assert set(manifest["artifacts"]) == expected
        for name, entry in manifest["artifacts"].items():
            path = out_dir / os.path.basename(entry["path"])
            assert path.exists()
            assert _sha256(path) == entry["sha256"]
            assert path.stat().st_size == entry["bytes"]
        on_disk = json.loads((out_dir / "run_manifest.json").read_text())
        assert on_disk == manifest
        envelope = json.loads((out_dir / "envelope.json").read_text())
        assert envelope["kind"] == "radial_upper"
        assert envelope["refined_checks"] > 0  # in-memory bundle refines
        classify = json.loads((out_dir / "classify.json").read_text())
        assert classify["verdict"] == "convergent"

    def test_byte_determinism_across_runs(self, capsys, tmp_path):
        cfg_path = _write_config(tmp_path, RUN_CONFIG)
        hashes = []
        for name in ("one", "two"):
            code, manifest, _ = _run(capsys, ["run", "--config", cfg_path,
                                              "--out-dir", str(tmp_path / name)])
            assert code == EXIT_OK
            hashes.append({k: v["sha256"] for k, v in manifest["artifacts"].items()})
        assert hashes[0] == hashes[1]

    def test_seed_flag_overrides_config(self, capsys, tmp_path):
        cfg_path = _write_config(tmp_path, RUN_CONFIG)
        code, base, _ = _run(capsys, ["run", "--config", cfg_path,
                                      "--out-dir", str(tmp_path / "base")])
        assert code == EXIT_OK
        code, other, _ = _run(capsys, ["run", "--config", cfg_path,
                                       "--seed", "22",
                                       "--out-dir", str(tmp_path / "other")])
        assert code == EXIT_OK
        assert other["seed"] == 22
        assert (other["artifacts"]["paths_radial"]["sha256"]
                != base["artifacts"]["paths_radial"]["sha256"])

    def test_bm_pipeline_two_sided(self, capsys, tmp_path):
        cfg = {
            "seed": 4,
            "simulate": {"kind": "bm", "d": 2, "horizon": 200.0, "paths": 40,
                         "preset": "medium"},
            "envelope": {"mode": "bm-two-sided", "t_start": 16.0,
                         "family": "sqrtloglog", "param": 3.0},
        }
        cfg_path = _write_config(tmp_path, cfg)
        code, manifest, _ = _run(capsys, ["run", "--config", cfg_path,
                                          "--out-dir", str(tmp_path / "bm")])
        assert code == EXIT_OK
        envelope = json.loads((tmp_path / "bm" / "envelope.json").read_text())
        assert envelope["kind"] == "bm_two_sided"

    @pytest.mark.parametrize("cfg, fragment", [
        ([1, 2, 3], "JSON object"),
        ({"seed": 1, "bogus": {}}, "unknown config keys"),
        ({"seed": 1}, "no stages"),
        ({"classify": {"family": "constant", "param": 1.0},
          "envelope": {"mode": "upper", "t_start": 16.0,
                       "family": "constant", "param": 1.0}},
         "needs the simulate stage"),
    ])
    def test_config_errors(self, capsys, tmp_path, cfg, fragment):
        cfg_path = _write_config(tmp_path, cfg)
        code, _, err = _run(capsys, ["run", "--config", cfg_path,
                                     "--out-dir", str(tmp_path / "x")])
        assert code == EXIT_CONFIG
        assert fragment in err["message"]

    def test_invalid_json_is_config_error(self, capsys, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        code, _, err = _run(capsys, ["run", "--config", str(p),
                                     "--out-dir", str(tmp_path / "x")])
        assert code == EXIT_CONFIG
        assert "not valid JSON" in err["message"]

    def test_missing_config_is_io_error(self, capsys, tmp_path):
        code, _, err = _run(capsys, ["run", "--config",
                                     str(tmp_path / "absent.json"),
                                     "--out-dir", str(tmp_path / "x")])
        assert code == EXIT_IO
        assert err["exit_code"] == EXIT_IO


class TestMisc:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert "hypescape" in capsys.readouterr().out

    def test_no_command_is_config_error(self, capsys):
        code, _, err = _run(capsys, [])
        assert code == EXIT_CONFIG

    def test_threads_must_be_positive(self, capsys):
        code, _, err = _run(capsys, ["crosscheck", "--d", "3", "--t", "1.0",
                                     "--paths", "100", "--threads", "0"])
        assert code == EXIT_CONFIG
        assert "threads" in err["message"]

    def test_backend_env_flag_reaches_cli(self):
        env = dict(os.environ, HYPESCAPE_KERNELS="numpy")
        proc = subprocess.run(
            [sys.executable, "-m", "hypescape", "simulate", "--horizon", "2",
             "--paths", "2", "--preset", "coarse"],
            capture_output=True, text=True, env=env, timeout=120,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["backend"] == "numpy"
