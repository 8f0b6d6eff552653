import hashlib
import json
import math

import pytest

from mcoal.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION, RunConfig, main


def run(argv):
    return main(argv)


class TestGenerate:
    def test_er(self, tmp_path):
        out = tmp_path / "er"
        assert run(["generate", "--family", "er", "--n", "1000", "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["sigma1"] == summary["sigma2"] == summary["kappa"] == 1000
        assert len((out / "masses.csv").read_text().splitlines()) == 1001

    def test_ger(self, tmp_path):
        out = tmp_path / "ger"
        code = run(
            ["generate", "--family", "ger", "--n", "9", "--m", "3", "--theta", "2", "--out", str(out)]
        )
        assert code == EXIT_OK
        masses = (out / "masses.csv").read_text().splitlines()[1:]
        assert [float(m) for m in masses[:3]] == [2.0, 2.0, 2.0]
        assert json.loads((out / "summary.json").read_text())["kappa"] == 12

    def test_nr_pareto_quantiles(self, tmp_path):
        out = tmp_path / "nr"
        code = run(
            ["generate", "--family", "nr", "--dist", "pareto", "--a", "3", "--n", "4", "--out", str(out)]
        )
        assert code == EXIT_OK
        masses = [float(m) for m in (out / "masses.csv").read_text().splitlines()[1:]]
        w = [4.0 ** (1 / 3), 2.0 ** (1 / 3), (4 / 3) ** (1 / 3)]
        ell = sum(w)
        assert masses == pytest.approx([x / math.sqrt(ell) for x in w], rel=1e-12)

    def test_unknown_family_is_usage_error(self, tmp_path):
        assert run(["generate", "--family", "zzz", "--out", str(tmp_path)]) == EXIT_USAGE


class TestSimulate:
    def test_refuses_critical_horizon(self, tmp_path):
        args = ["simulate", "--family", "er", "--n", "50", "--c", "1.2", "--reps", "1", "--out", str(tmp_path / "x")]
        assert run(args) == EXIT_USAGE
        assert run(args + ["--allow-critical"]) == EXIT_OK

    def test_rerun_is_byte_identical(self, tmp_path):
        base = ["simulate", "--family", "er", "--n", "100", "--c", "0.5", "--grid", "4",
                "--reps", "3", "--seed", "5"]
        digests = []
        for name, workers in (("a", "1"), ("b", "2")):
            out = tmp_path / name
            assert run(base + ["--out", str(out), "--workers", workers]) == EXIT_OK
            digests.append(
                {
                    f.name: hashlib.sha256(f.read_bytes()).hexdigest()
                    for f in sorted(out.glob("traj_*.csv"))
                }
            )
        assert digests[0] == digests[1]
        assert len(digests[0]) == 3

    def test_manifest_contents(self, tmp_path):
        out = tmp_path / "run"
        assert run(
            ["simulate", "--family", "er", "--n", "80", "--c", "0.4", "--reps", "2",
             "--seed", "9", "--out", str(out)]
        ) == EXIT_OK
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["master_seed"] == 9
        assert manifest["trajectory_seeds"] == [
            {"entropy": 9, "spawn_key": [0]},
            {"entropy": 9, "spawn_key": [1]},
        ]
        assert manifest["files"] == ["traj_00000.csv", "traj_00001.csv"]
        config = RunConfig.from_flat_text(manifest["config"])
        assert config.config_hash() == manifest["config_hash"]

    def test_full_record_csv_header(self, tmp_path):
        out = tmp_path / "full"
        assert run(
            ["simulate", "--family", "er", "--n", "30", "--c", "0.5", "--reps", "1",
             "--record", "full", "--out", str(out)]
        ) == EXIT_OK
        lines = (out / "traj_00000.csv").read_text().splitlines()
        assert lines[0] == "event_index,time,K,S2"
        assert lines[1] == "0,0.0,30,30.0"


class TestAnalyze:
    @pytest.fixture()
    def run_dir(self, tmp_path):
        out = tmp_path / "run"
        assert run(
            ["simulate", "--family", "er", "--n", "500", "--c", "0.6", "--grid", "5",
             "--reps", "60", "--seed", "21", "--out", str(out)]
        ) == EXIT_OK
        return out

    def test_analyze_writes_artifacts(self, run_dir):
        assert run(["analyze", str(run_dir), "--fluid-tol", "0.05"]) == EXIT_OK
        assert (run_dir / "ensemble_summary.csv").exists()
        assert (run_dir / "fluid_curve.csv").exists()
        assert (run_dir / "variance_curve.csv").exists()
        reports = json.loads((run_dir / "test_reports.json").read_text())
        assert reports[0]["name"] == "fluid_limit"
        assert reports[0]["verdict"] == "pass"
        header = (run_dir / "ensemble_summary.csv").read_text().splitlines()[0]
        assert header == "t,mean_scaled_K,fluid,mean_Z,var_Z,se_mean,se_var"

    def test_conflicting_flag_refused(self, run_dir):
        assert run(["analyze", str(run_dir), "--n", "400"]) == EXIT_USAGE

    def test_tampered_manifest_refused(self, run_dir):
        manifest = json.loads((run_dir / "manifest.json").read_text())
        manifest["config"] = manifest["config"].replace("n = 500", "n = 400")
        (run_dir / "manifest.json").write_text(json.dumps(manifest))
        assert run(["analyze", str(run_dir)]) == EXIT_USAGE

    def test_missing_dir_is_io_error(self, tmp_path):
        assert run(["analyze", str(tmp_path / "nope")]) == EXIT_IO

    def test_dir_without_manifest_is_io_error(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert run(["analyze", str(empty)]) == EXIT_IO

    def test_failed_fluid_test_exits_verification(self, run_dir):
        # impossible tolerance forces a fluid-test failure
        assert run(["analyze", str(run_dir), "--fluid-tol", "1e-12"]) == EXIT_VERIFICATION

    def test_analyze_full_record_run(self, tmp_path):
        out = tmp_path / "full"
        assert run(
            ["simulate", "--family", "er", "--n", "300", "--c", "0.5", "--grid", "4",
             "--reps", "40", "--seed", "8", "--record", "full", "--out", str(out)]
        ) == EXIT_OK
        assert run(["analyze", str(out), "--fluid-tol", "0.05"]) == EXIT_OK
        assert (out / "test_reports.json").exists()


class TestOracle:
    def test_oracle_cross_check(self, tmp_path):
        out = tmp_path / "oracle"
        code = run(
            ["oracle", "--family", "er", "--n", "5", "--t", "0.3", "--reps", "20000",
             "--seed", "3", "--out", str(out)]
        )
        assert code == EXIT_OK
        lines = (out / "k_prob.csv").read_text().splitlines()
        assert lines[0] == "k,prob"
        assert len(lines) == 6
        report = json.loads((out / "oracle_report.json").read_text())
        assert set(report["tv"]) == {
            "engine_vs_exact",
            "percolation_vs_exact",
            "engine_vs_percolation",
        }

    def test_oracle_large_instance_usage_error(self, tmp_path):
        assert run(["oracle", "--family", "er", "--n", "12", "--t", "0.1"]) == EXIT_USAGE


class TestConfigFile:
    def test_file_plus_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# experiment\n"
            "family = er\n"
            "n = 120\n"
            "c = 0.5\n"
            "reps = 2\n"
            "seed = 4\n"
        )
        out = tmp_path / "out"
        assert run(["simulate", "--config", str(cfg), "--reps", "3", "--out", str(out)]) == EXIT_OK
        manifest = json.loads((out / "manifest.json").read_text())
        config = RunConfig.from_flat_text(manifest["config"])
        assert config.n == 120
        assert config.reps == 3  # flag wins

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bogus = 1\n")
        assert run(["simulate", "--config", str(cfg)]) == EXIT_USAGE


class TestVerify:
    def test_quick_profile_passes(self, capsys):
        assert run(["verify", "--profile", "quick"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.count("PASS") >= 12

    def test_failing_criterion_exits_verification(self, monkeypatch):
        from mcoal import acceptance
        from mcoal.analysis import TestReport

        def broken(profile=acceptance.FULL, master_seed=acceptance.DEFAULT_SEED):
            return TestReport("broken", 1.0, None, 0.0, "fail")

        monkeypatch.setattr(acceptance, "CRITERIA", [broken])
        assert run(["verify", "--profile", "quick"]) == EXIT_VERIFICATION


def test_version_flag():
    assert run(["--version"]) == 0


def test_usage_error_exit_code():
    assert run(["simulate", "--no-such-flag"]) == EXIT_USAGE
