import json
import os

import pytest
from click.testing import CliRunner

from fairguide.cli import main

from conftest import DATA, REPO

CONFIGS = REPO / "src" / "fairguide" / "configs"


@pytest.fixture
def runner():
    return CliRunner()


def test_ingest_writes_pool(runner, tmp_path):
    out = tmp_path / "income.json"
    result = runner.invoke(main, [
        "ingest", "--config", str(CONFIGS / "income.yaml"),
        "--csv", str(DATA / "income.csv"),
        "--out", str(out), "--seed", "7",
    ])
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert len(data["profiles"]) == 300
    assert "112 privileged" in result.output


def test_ingest_bad_csv_exit_1(runner, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("age,label\n40,1\n")
    result = runner.invoke(main, [
        "ingest", "--config", str(CONFIGS / "income.yaml"),
        "--csv", str(bad), "--out", str(tmp_path / "x.json"),
    ])
    assert result.exit_code == 1
    assert "error" in result.output


def test_ingest_missing_file_exit_2(runner, tmp_path):
    result = runner.invoke(main, [
        "ingest", "--config", str(CONFIGS / "income.yaml"),
        "--csv", str(tmp_path / "nope.csv"),
        "--out", str(tmp_path / "x.json"),
    ])
    assert result.exit_code == 2  # click usage error for missing paths


def _ingest(runner, data_root):
    os.makedirs(data_root / "pools", exist_ok=True)
    result = runner.invoke(main, [
        "ingest", "--config", str(CONFIGS / "income.yaml"),
        "--csv", str(DATA / "income.csv"),
        "--out", str(data_root / "pools" / "income.json"), "--seed", "7",
    ])
    assert result.exit_code == 0, result.output


def test_simulate_report_replay_round_trip(runner, tmp_path):
    _ingest(runner, tmp_path)
    guid = tmp_path / "guidance.json"
    result = runner.invoke(main, [
        "simulate", "--data-dir", str(tmp_path), "--task", "income",
        "--condition", "guidance", "--students", "3", "--seed", "7",
        "--compliance", "0.8", "--out", str(guid),
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads(guid.read_text())
    assert len(payload["reports"]) == 3
    assert all(r["n_responses"] == 300 for r in payload["reports"])

    bf = tmp_path / "feedback.json"
    result = runner.invoke(main, [
        "simulate", "--data-dir", str(tmp_path), "--task", "income",
        "--condition", "bias_feedback", "--students", "3", "--seed", "19",
        "--out", str(bf),
    ])
    assert result.exit_code == 0, result.output

    cmp_out = tmp_path / "cmp.json"
    result = runner.invoke(main, [
        "report", str(guid), str(bf), "--out", str(cmp_out), "--by-task",
    ])
    assert result.exit_code == 0, result.output
    assert "Mann-Whitney" in result.output
    data = json.loads(cmp_out.read_text())
    assert set(data["pooled"]["arms"]) == {
        "bias_feedback", "fair_machine_guidance",
    }
    assert "income" in data["per_task"]
    assert 0 < data["pooled"]["tests"]["improvement"]["p"] <= 1

    # replay each recorded session and compare to the live report
    sessions_dir = tmp_path / "sessions"
    live = {r["session_id"]: r for r in payload["reports"]}
    live.update({r["session_id"]: r for r in json.loads(bf.read_text())["reports"]})
    replayed = 0
    for name in os.listdir(sessions_dir):
        sid = name[:-len(".jsonl")]
        result = runner.invoke(main, [
            "replay", "--log", str(sessions_dir / name),
        ])
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        assert report == live[sid]
        replayed += 1
    assert replayed == 6


def test_simulate_deterministic_reports(runner, tmp_path):
    _ingest(runner, tmp_path)
    outs = []
    for name in ("a.json", "b.json"):
        result = runner.invoke(main, [
            "simulate", "--data-dir", str(tmp_path), "--task", "income",
            "--condition", "guidance", "--students", "2", "--seed", "5",
            "--out", str(tmp_path / name),
        ])
        assert result.exit_code == 0, result.output
        reports = json.loads((tmp_path / name).read_text())["reports"]
        outs.append([{k: v for k, v in r.items() if k != "session_id"}
                     for r in reports])
    assert outs[0] == outs[1]


def test_replay_missing_log_exit_2(runner, tmp_path):
    result = runner.invoke(main, ["replay", "--log", str(tmp_path / "x.jsonl")])
    assert result.exit_code == 2
