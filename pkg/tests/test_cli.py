"""CLI tests: subcommands, config layering, seed env var, exit codes."""

import csv
import json
import os

import numpy as np
import pytest

from cotrack.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_VALIDATION,
    main,
)
from cotrack.learn import load_params


def run(argv):
    return main(argv)


def test_gen_data_writes_scene_files(tmp_path):
    out = tmp_path / "data"
    assert run(["gen-data", "--out", str(out), "--task", "push_box"]) \
        == EXIT_OK
    for suffix in ("robot", "object", "motion"):
        p = out / f"push_box_{suffix}.json"
        assert p.exists()
        json.loads(p.read_text())


def test_validate_bundled_task():
    assert run(["validate", "--task", "door_hinge"]) == EXIT_OK


def test_validate_explicit_files(tmp_path):
    out = tmp_path / "data"
    run(["gen-data", "--out", str(out), "--task", "push_box"])
    assert run(["validate",
                "--robot", str(out / "push_box_robot.json"),
                "--object", str(out / "push_box_object.json"),
                "--motion", str(out / "push_box_motion.json")]) == EXIT_OK


def test_validate_rejects_corrupt_file(tmp_path):
    out = tmp_path / "data"
    run(["gen-data", "--out", str(out), "--task", "push_box"])
    bad = out / "bad_motion.json"
    doc = json.loads((out / "push_box_motion.json").read_text())
    del doc["frames"][0]["joint_pos"]
    bad.write_text(json.dumps(doc))
    assert run(["validate",
                "--robot", str(out / "push_box_robot.json"),
                "--object", str(out / "push_box_object.json"),
                "--motion", str(bad)]) == EXIT_VALIDATION


def test_missing_scene_is_config_error():
    assert run(["validate"]) == EXIT_CONFIG


def test_unknown_flag_is_config_error():
    assert run(["validate", "--task", "push_box", "--nope"]) == EXIT_CONFIG


def test_train_eval_roundtrip(tmp_path, capsys):
    out = tmp_path / "run"
    code = run(["train", "--task", "push_box", "--out", str(out),
                "--updates", "2", "--rollout-steps", "16", "--envs", "1",
                "--hidden", "8", "--seed", "0"])
    assert code == EXIT_OK
    assert (out / "checkpoint.npz").exists()
    assert (out / "log.jsonl").exists()
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["action_scale"] == 0.25

    capsys.readouterr()
    code = run(["eval", "--task", "push_box",
                "--checkpoint", str(out / "checkpoint.npz"),
                "--episodes", "1", "--seed", "0"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert 0.0 <= doc["success_rate"] <= 1.0
    assert doc["episodes"] == 1


def test_config_layering_file_then_flag(tmp_path, capsys):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"action_scale": 0.4,
                                    "term_min_steps": 30}))
    out = tmp_path / "run"
    code = run(["train", "--task", "push_box", "--out", str(out),
                "--updates", "1", "--rollout-steps", "8", "--envs", "1",
                "--hidden", "4", "--config", str(cfg_file),
                "--set", "action_scale=0.1"])
    assert code == EXIT_OK
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["action_scale"] == 0.1  # flag beats file
    assert resolved["term_min_steps"] == 30  # file beats default


def test_bad_config_values_exit_2(tmp_path):
    out = tmp_path / "x"
    assert run(["train", "--task", "push_box", "--out", str(out),
                "--updates", "1", "--set", "no_such=1"]) == EXIT_CONFIG
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text("{not json")
    assert run(["train", "--task", "push_box", "--out", str(out),
                "--updates", "1", "--config", str(cfg_file)]) == EXIT_CONFIG


def test_seed_env_var_and_flag_priority(tmp_path, monkeypatch):
    monkeypatch.setenv("COTRACK_SEED", "17")
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    out3 = tmp_path / "c"
    for out in (out1, out2):
        assert run(["train", "--task", "push_box", "--out", str(out),
                    "--updates", "1", "--rollout-steps", "8", "--envs", "1",
                    "--hidden", "4"]) == EXIT_OK
    assert run(["train", "--task", "push_box", "--out", str(out3),
                "--updates", "1", "--rollout-steps", "8", "--envs", "1",
                "--hidden", "4", "--seed", "99"]) == EXIT_OK
    p1, _ = load_params(out1 / "checkpoint.npz")
    p2, _ = load_params(out2 / "checkpoint.npz")
    p3, _ = load_params(out3 / "checkpoint.npz")
    assert np.array_equal(p1.flat(), p2.flat())  # env seed is deterministic
    assert not np.array_equal(p1.flat(), p3.flat())  # flag overrides env


def test_bad_seed_env_var_is_config_error(tmp_path, monkeypatch):
    monkeypatch.setenv("COTRACK_SEED", "not-a-number")
    assert run(["train", "--task", "push_box", "--out", str(tmp_path / "x"),
                "--updates", "1"]) == EXIT_CONFIG


def test_ablate_without_training_and_export(tmp_path):
    out_csv = tmp_path / "table.csv"
    code = run(["ablate", "--task", "push_box", "--out", str(out_csv),
                "--updates", "0", "--seeds", "1", "--episodes", "1",
                "--variants", "full,no_interaction_reward"])
    assert code == EXIT_OK
    rows = list(csv.DictReader(open(out_csv)))
    assert [r["variant"] for r in rows] == ["full", "no_interaction_reward"]

    # export a training log
    run_dir = tmp_path / "run"
    run(["train", "--task", "push_box", "--out", str(run_dir),
         "--updates", "2", "--rollout-steps", "8", "--envs", "1",
         "--hidden", "4"])
    log_csv = tmp_path / "log.csv"
    assert run(["export", "--log", str(run_dir / "log.jsonl"),
                "--out", str(log_csv)]) == EXIT_OK
    rows = list(csv.DictReader(open(log_csv)))
    assert len(rows) == 2 and "mean_reward" in rows[0]


def test_export_missing_log_is_config_error(tmp_path):
    assert run(["export", "--log", str(tmp_path / "none.jsonl"),
                "--out", str(tmp_path / "o.csv")]) == EXIT_CONFIG
