import json

import pytest

from catprobe.cli import CliError, _parse_budget, run_cli


@pytest.fixture()
def synth_dataset(tmp_path):
    path = tmp_path / "data.jsonl"
    assert run_cli([
        "synth", "--kind", "classification", "--seed", "3",
        "--features", "5", "--candidates", "3", "--count", "30",
        "--label-noise", "0.0", "--out", str(path),
    ]) == 0
    return path


class TestBudgetParsing:
    def test_absolute(self):
        assert _parse_budget("5", 20) == 5

    def test_fraction_floors(self):
        assert _parse_budget("35%", 20) == 7
        assert _parse_budget("35%", 9) == 3  # floor(3.15)

    def test_fraction_minimum_one(self):
        assert _parse_budget("1%", 5) == 1

    def test_zero_rejected(self):
        with pytest.raises(CliError):
            _parse_budget("0", 20)

    def test_bad_fraction_rejected(self):
        with pytest.raises(CliError):
            _parse_budget("150%", 20)


class TestSynthTrain:
    def test_synth_writes_dataset(self, synth_dataset):
        lines = synth_dataset.read_text().splitlines()
        assert len(lines) == 30
        rec = json.loads(lines[0])
        assert len(rec["values"]) == 5

    def test_train_then_assess_builtin(self, tmp_path, synth_dataset):
        model = tmp_path / "model.npz"
        assert run_cli(["train", "--dataset", str(synth_dataset),
                        "--epochs", "40", "--out", str(model)]) == 0
        report = tmp_path / "report.json"
        rc = run_cli([
            "assess", "--dataset", str(synth_dataset),
            "--oracle", f"builtin:{model}", "--algo", "fsgs",
            "--budget", "2", "--report", str(report),
        ])
        assert rc == 0
        payload = json.loads(report.read_text())
        assert payload["mode"] == "classification"
        assert payload["after"]["acc"] <= payload["before"]["acc"]


class TestAssess:
    def test_happy_path_truth_oracle(self, tmp_path, synth_dataset):
        report = tmp_path / "report.json"
        rc = run_cli([
            "assess", "--dataset", str(synth_dataset),
            "--oracle", "truth:linear:3", "--algo", "fsgs",
            "--budget", "3", "--time-limit", "60",
            "--report", str(report),
        ])
        assert rc == 0 and report.exists()

    def test_default_alpha_echoed(self, tmp_path, synth_dataset):
        report = tmp_path / "report.json"
        assert run_cli([
            "assess", "--dataset", str(synth_dataset),
            "--oracle", "truth:linear:3", "--algo", "ucbs",
            "--budget", "2", "--report", str(report),
        ]) == 0
        payload = json.loads(report.read_text())
        assert payload["config"]["ucb_alpha"] == 2.0

    def test_budget_zero_exits_one(self, tmp_path, synth_dataset):
        rc = run_cli([
            "assess", "--dataset", str(synth_dataset),
            "--oracle", "truth:linear:3", "--budget", "0",
            "--report", str(tmp_path / "r.json"),
        ])
        assert rc == 1

    def test_unknown_oracle_spec_exits_one(self, tmp_path, synth_dataset):
        rc = run_cli([
            "assess", "--dataset", str(synth_dataset),
            "--oracle", "psychic:ball", "--budget", "2",
            "--report", str(tmp_path / "r.json"),
        ])
        assert rc == 1

    def test_missing_dataset_exits_two(self, tmp_path):
        rc = run_cli([
            "assess", "--dataset", str(tmp_path / "nope.jsonl"),
            "--oracle", "truth:parity", "--budget", "2",
            "--report", str(tmp_path / "r.json"),
        ])
        assert rc == 2

    def test_unreachable_remote_exits_two(self, tmp_path, synth_dataset,
                                          monkeypatch):
        monkeypatch.setenv("CATPROBE_REMOTE_TIMEOUT", "0.2")
        rc = run_cli([
            "assess", "--dataset", str(synth_dataset),
            "--oracle", "remote:http://127.0.0.1:1", "--budget", "2",
            "--report", str(tmp_path / "r.json"),
        ])
        assert rc == 2

    def test_unknown_flag_exits_one(self, tmp_path, synth_dataset):
        rc = run_cli([
            "assess", "--dataset", str(synth_dataset),
            "--oracle", "truth:parity", "--frobnicate",
            "--report", str(tmp_path / "r.json"),
        ])
        assert rc == 1

    def test_byte_identical_reports(self, tmp_path, synth_dataset):
        args = [
            "assess", "--dataset", str(synth_dataset),
            "--oracle", "truth:linear:3", "--algo", "sgs",
            "--budget", "35%", "--seed", "7", "--workers", "2",
        ]
        r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert run_cli(args + ["--report", str(r1)]) == 0
        assert run_cli(args + ["--report", str(r2)]) == 0
        assert r1.read_bytes() == r2.read_bytes()

    def test_outcomes_file(self, tmp_path, synth_dataset):
        outs = tmp_path / "outcomes.jsonl"
        assert run_cli([
            "assess", "--dataset", str(synth_dataset),
            "--oracle", "truth:linear:3", "--budget", "2",
            "--report", str(tmp_path / "r.json"), "--outcomes", str(outs),
        ]) == 0
        assert len(outs.read_text().splitlines()) == 30

    def test_config_file_with_flag_precedence(self, tmp_path, synth_dataset):
        cfg = tmp_path / "assess.cfg"
        cfg.write_text(
            "algo = ucbs\nbudget = 2\nseed = 5\n"
            f"oracle = truth:linear:3\ndataset = {synth_dataset}\n"
        )
        report = tmp_path / "r.json"
        assert run_cli([
            "assess", "--config", str(cfg), "--algo", "fsgs",
            "--report", str(report),
        ]) == 0
        payload = json.loads(report.read_text())
        assert payload["config"]["algorithm"] == "fsgs"  # flag wins
        assert payload["config"]["seed"] == 5  # file value applied


class TestSessionModes:
    def test_log_window_and_session_modes(self, tmp_path):
        data = tmp_path / "sessions.jsonl"
        assert run_cli([
            "synth", "--kind", "log_sessions", "--seed", "4", "--vocab", "12",
            "--count", "6", "--abnormal-fraction", "0.5", "--out", str(data),
        ]) == 0
        model = tmp_path / "predictor.npz"
        assert run_cli(["train", "--dataset", str(data), "--window", "6",
                        "--epochs", "10", "--out", str(model)]) == 0
        win_report = tmp_path / "win.json"
        assert run_cli([
            "assess", "--dataset", str(data), "--oracle", f"builtin:{model}",
            "--mode", "log_window", "--window", "6", "--budget", "2",
            "--report", str(win_report),
        ]) == 0
        assert json.loads(win_report.read_text())["mode"] == "log_window"
        sess_report = tmp_path / "sess.json"
        assert run_cli([
            "assess", "--dataset", str(data), "--oracle", f"builtin:{model}",
            "--mode", "session", "--window", "6", "--budget", "2",
            "--window-fraction", "0.2", "--report", str(sess_report),
        ]) == 0
        payload = json.loads(sess_report.read_text())
        assert payload["mode"] == "session"
        assert payload["unit_summary"]["sessions"] == 6


class TestReportCommand:
    def test_render_round_trip(self, tmp_path, synth_dataset, capsys):
        machine = tmp_path / "r.json"
        assert run_cli([
            "assess", "--dataset", str(synth_dataset),
            "--oracle", "truth:linear:3", "--budget", "2",
            "--report", str(machine),
        ]) == 0
        out = tmp_path / "human.txt"
        assert run_cli(["report", "--input", str(machine), "--out", str(out)]) == 0
        assert "Robustness diagnostic report" in out.read_text()

    def test_missing_input_exits_two(self, tmp_path):
        assert run_cli(["report", "--input", str(tmp_path / "nope.json")]) == 2
