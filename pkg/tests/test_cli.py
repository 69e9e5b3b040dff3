import json
import math

import pytest

from subordinate import Trajectory, compose
from subordinate.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRates:
    def test_poisson_csv(self, capsys):
        code, out, _ = run_cli(
            capsys, "rates", "--family", "poisson", "--alpha", "1", "--state", "0",
            "--kmax", "5",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "s,k,q"
        k1 = dict((line.split(",")[1], line.split(",")[2]) for line in lines[1:6])
        assert float(k1["1"]) == pytest.approx(math.exp(-1.0), abs=1e-15)
        assert lines[-2] == "s,lambda_S"
        assert float(lines[-1].split(",")[1]) == pytest.approx(1 - math.exp(-1.0), abs=1e-15)

    def test_json_format(self, capsys):
        code, out, _ = run_cli(
            capsys, "rates", "--family", "linear_death", "--delta", "0.7", "--d0", "10",
            "--state", "3", "--format", "json",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["s"] == 3
        assert float(payload["lambda_S"]) == pytest.approx(1 - math.exp(-0.7 * 7), abs=1e-12)

    def test_invalid_alpha_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "rates", "--family", "poisson", "--alpha", "-1")
        assert code == 2
        assert "error" in err

    def test_missing_family_exits_2(self, capsys):
        code, _, _ = run_cli(capsys, "rates")
        assert code == 2

    def test_unknown_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_inline_spec_equivalent_to_flags(self, capsys):
        _, out_flags, _ = run_cli(
            capsys, "rates", "--family", "poisson", "--alpha", "1.5", "--kmax", "4"
        )
        spec = json.dumps({"family": "poisson", "params": {"alpha": 1.5}, "initial_state": 0})
        _, out_spec, _ = run_cli(capsys, "rates", "--spec", spec, "--kmax", "4")
        assert out_flags == out_spec


class TestMoments:
    def test_csv_columns(self, capsys):
        code, out, _ = run_cli(
            capsys, "moments", "--family", "linear_death", "--delta", "0.7", "--d0", "10",
            "--states", "0,9,10",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "s,mu,sigma2,D,err"
        first = lines[1].split(",")
        assert float(first[1]) == pytest.approx(10 * (1 - math.exp(-0.7)), abs=1e-10)
        last = lines[3].split(",")
        assert last[3] == ""  # absorbing state has no dispersion index


class TestSimulateAndCompose:
    def test_simulate_reproducible_bytes(self, capsys):
        args = [
            "simulate", "--family", "poisson", "--alpha", "2", "--t-end", "3",
            "--seed", "42",
        ]
        _, out_a, _ = run_cli(capsys, *args)
        _, out_b, _ = run_cli(capsys, *args)
        assert out_a == out_b
        assert out_a.splitlines()[0] == "time,state"

    def test_compose_files_round_trip(self, capsys, tmp_path):
        base_path = tmp_path / "base.json"
        clock_path = tmp_path / "clock.json"
        run_cli(
            capsys, "simulate", "--family", "poisson", "--alpha", "1.5", "--t-end", "20",
            "--seed", "7", "--format", "json", "--output", str(base_path),
        )
        run_cli(
            capsys, "simulate", "--family", "poisson", "--alpha", "1", "--t-end", "4",
            "--seed", "7", "--stream", "1", "--format", "json",
            "--output", str(clock_path),
        )
        code, out, _ = run_cli(
            capsys, "compose", "--base", str(base_path), "--clock", str(clock_path),
            "--format", "json",
        )
        assert code == 0
        composed = Trajectory.from_json(out)
        base = Trajectory.from_json(base_path.read_text())
        clock = Trajectory.from_json(clock_path.read_text())
        assert composed == compose(base, clock)

    def test_compose_horizon_error_exits_2(self, capsys, tmp_path):
        base_path = tmp_path / "base.json"
        clock_path = tmp_path / "clock.json"
        base_path.write_text(Trajectory(0, (), 0.5).to_json())
        clock_path.write_text(Trajectory(0, ((1.0, 1), (1.5, 1)), 2.0).to_json())
        code, _, err = run_cli(
            capsys, "compose", "--base", str(base_path), "--clock", str(clock_path)
        )
        assert code == 2
        assert "extend" in err


class TestVerify:
    def test_small_suite_passes_and_emits_json_lines(self, capsys):
        code, out, _ = run_cli(
            capsys, "verify", "--suite", "holding", "--seed", "42", "--reps", "4000",
            "--no-timestamp",
        )
        assert code == 0
        records = [json.loads(line) for line in out.strip().splitlines()]
        assert all(
            set(rec) == {"check", "estimate", "reference", "se", "pass"} for rec in records
        )
        assert all(rec["pass"] for rec in records)

    def test_no_timestamp_outputs_identical(self, capsys):
        args = [
            "verify", "--suite", "jumps", "--seed", "9", "--reps", "2000", "--no-timestamp",
        ]
        _, out_a, _ = run_cli(capsys, *args)
        _, out_b, _ = run_cli(capsys, *args)
        assert out_a == out_b

    def test_timestamp_key_present_by_default(self, capsys):
        code, out, _ = run_cli(
            capsys, "verify", "--suite", "jumps", "--seed", "9", "--reps", "1000"
        )
        assert code == 0
        assert all("timestamp" in json.loads(line) for line in out.strip().splitlines())

    def test_failing_check_exits_1(self, capsys, monkeypatch):
        from subordinate import montecarlo
        from subordinate.montecarlo import Comparison, EstimateReport

        def fake(*args, **kwargs):
            bad = Comparison("rigged", 1.0, 0.0, 0.1, 0.2, False)
            return EstimateReport("interevent", (bad,), 1, 0)

        monkeypatch.setattr("subordinate.cli.estimate_interevent", fake)
        code, out, _ = run_cli(
            capsys, "verify", "--suite", "holding", "--seed", "1", "--reps", "10",
            "--no-timestamp",
        )
        assert code == 1
        assert json.loads(out.strip().splitlines()[0])["pass"] is False


class TestSir:
    def test_runs_from_config_file(self, capsys, tmp_path):
        config = {
            "population": 500,
            "contact_rate": 1.2,
            "recovery_rate": 0.4,
            "step": 0.05,
            "initial": {"S": 495, "I": 5, "R": 0},
        }
        path = tmp_path / "sir.json"
        path.write_text(json.dumps(config))
        code, out, _ = run_cli(
            capsys, "sir", "--config", str(path), "--t-end", "1", "--seed", "3",
            "--record-every", "5",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "t,S,I,R,N_SI,N_IR"
        for line in lines[1:]:
            fields = line.split(",")
            assert int(fields[1]) + int(fields[2]) + int(fields[3]) == 500

    def test_bad_config_exits_2(self, capsys, tmp_path):
        path = tmp_path / "sir.json"
        path.write_text(json.dumps({"population": 10}))
        code, _, _ = run_cli(capsys, "sir", "--config", str(path), "--t-end", "1", "--seed", "1")
        assert code == 2
