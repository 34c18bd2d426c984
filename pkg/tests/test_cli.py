import json
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "ivpbounds.cli"]


def run_cli(*args):
    return subprocess.run(
        CLI + list(args), capture_output=True, text=True, timeout=300
    )


class TestVerifySubcommands:
    def test_verify_spline_passes(self):
        proc = run_cli("verify-spline", "--r", "2")
        assert proc.returncode == 0
        assert "suite: pass" in proc.stdout

    def test_verify_spline_negative_control_exits_one(self):
        proc = run_cli("verify-spline", "--r", "1", "--negative-control")
        assert proc.returncode == 1
        assert "FAIL" in proc.stdout

    def test_verify_reduction_passes(self):
        proc = run_cli("verify-reduction", "--k", "3", "--n", "4")
        assert proc.returncode == 0

    def test_verify_reduction_negative_control_exits_one(self):
        proc = run_cli("verify-reduction", "--k", "2", "--n", "4", "--negative-control")
        assert proc.returncode == 1

    def test_reduction_json_export(self, tmp_path):
        out = tmp_path / "plan.json"
        proc = run_cli(
            "verify-reduction", "--k", "2", "--n", "4", "--out", str(out), "--format", "json"
        )
        assert proc.returncode == 0
        payload = json.loads(out.read_text())
        assert payload["weights"] == [-4.0, 4.0]
        assert payload["suite"]["passed"] is True

    def test_strict_profile_accepted(self):
        proc = run_cli("verify-spline", "--r", "1", "--tolerance-profile", "strict")
        assert proc.returncode == 0


class TestRates:
    def test_det_run_prints_fit(self):
        proc = run_cli("rates", "--mode", "det", "--r", "1", "--k", "1", "--grid", "16:256", "--trials", "1")
        assert proc.returncode == 0
        assert "fitted max exponent" in proc.stdout

    def test_rand_run_with_output(self, tmp_path):
        out = tmp_path / "rates.csv"
        proc = run_cli(
            "rates", "--mode", "rand", "--r", "1", "--k", "1", "--grid", "32:128",
            "--trials", "3", "--seed", "5", "--out", str(out),
        )
        assert proc.returncode == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "cost,error_mean,error_rms,error_max,trials"
        assert len(lines) == 4

    def test_output_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["rates", "--mode", "rand", "--r", "1", "--k", "2", "--grid", "32:128",
                "--trials", "3", "--seed", "7"]
        assert run_cli(*args, "--out", str(a)).returncode == 0
        assert run_cli(*args, "--out", str(b)).returncode == 0
        assert a.read_bytes() == b.read_bytes()


class TestAdversary:
    def test_oracle_mode(self):
        proc = run_cli(
            "adversary", "--setting", "rand", "--k", "1", "--r", "1", "--n", "4",
            "--trials", "10", "--oracle",
        )
        assert proc.returncode == 0
        assert "observed RMS mean error" in proc.stdout

    def test_quant_setting_labeled(self):
        proc = run_cli(
            "adversary", "--setting", "quant", "--k", "1", "--r", "1", "--n", "4",
            "--trials", "5", "--cells", "16", "--mc-samples", "2",
        )
        assert proc.returncode == 0
        assert "analysis only" in proc.stdout


class TestBoundsCalc:
    def test_quant(self):
        proc = run_cli("bounds-calc", "--setting", "quant", "--kn", "1000", "--eps1", "0.01")
        assert proc.returncode == 0
        assert "= 100" in proc.stdout

    def test_rand(self):
        proc = run_cli("bounds-calc", "--setting", "rand", "--kn", "1000", "--eps1", "0.01")
        assert "= 1000" in proc.stdout

    def test_json_output(self, tmp_path):
        out = tmp_path / "bound.json"
        proc = run_cli(
            "bounds-calc", "--setting", "quant", "--kn", "10", "--eps1", "1.0",
            "--out", str(out), "--format", "json",
        )
        assert proc.returncode == 0
        assert json.loads(out.read_text())["bound_argument"] == 1


class TestExitCodes:
    def test_unknown_command_is_parameter_error(self):
        assert run_cli("frobnicate").returncode == 2

    def test_bad_choice_is_parameter_error(self):
        proc = run_cli("rates", "--mode", "nope", "--r", "1", "--k", "1", "--grid", "16:64")
        assert proc.returncode == 2

    def test_semantic_parameter_error(self):
        proc = run_cli("rates", "--mode", "det", "--r", "0", "--k", "1", "--grid", "16:64")
        assert proc.returncode == 2
        assert "parameter error" in proc.stderr

    def test_io_error_exit_three(self, tmp_path):
        out = tmp_path / "missing" / "dir" / "x.csv"
        proc = run_cli(
            "rates", "--mode", "det", "--r", "1", "--k", "1", "--grid", "16:64",
            "--trials", "1", "--out", str(out),
        )
        assert proc.returncode == 3
        assert "i/o error" in proc.stderr
