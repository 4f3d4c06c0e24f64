"""Evaluation-harness tests on the bundled tasks."""

import csv

import numpy as np
import pytest

from cotrack.env import EnvConfig
from cotrack.evalharness import (
    AblationSpec,
    default_ablations,
    export_metrics,
    rollout_eval,
    run_ablation,
)
from cotrack.tasks import list_tasks, load_task


@pytest.fixture(scope="module")
def push_box():
    t = load_task("push_box")
    return t.build_world(), t.motion


def test_zero_action_policy_succeeds_on_bundled_tasks():
    """The references are feasible: pure reference tracking succeeds."""

    for name in list_tasks():
        t = load_task(name)
        m = rollout_eval(t.build_world(), t.motion, EnvConfig(), params=None,
                         episodes=2, seed=0)
        assert m.success_rate == 1.0, name
        assert m.term_counts.get("motion_end", 0) == 2
        assert m.object_err_pos < 0.2


def test_rollout_eval_metrics_are_finite(push_box):
    world, motion = push_box
    m = rollout_eval(world, motion, EnvConfig(), params=None, episodes=2)
    for v in (m.joint_err_mean, m.joint_err_std, m.body_err_mean,
              m.body_err_std, m.object_err_pos, m.object_err_ori,
              m.ep_len_mean):
        assert np.isfinite(v)
    assert m.episodes == 2
    assert sum(m.term_counts.values()) == 2


def test_default_ablations_cover_all_flags():
    specs = default_ablations()
    names = [s.name for s in specs]
    assert names[0] == "full"
    assert len(specs) == 5
    cfg = EnvConfig()
    for s in specs[1:]:
        varied = s.apply(cfg)
        assert varied != cfg


def test_ablation_spec_rejects_unknown_field():
    with pytest.raises(KeyError):
        AblationSpec("bad", {"no_such_flag": False}).apply(EnvConfig())


def test_run_ablation_and_export(push_box, tmp_path):
    world, motion = push_box
    specs = (AblationSpec("full", {}),
             AblationSpec("no_interaction", {"use_interaction_reward": False}))
    table = run_ablation(world, motion, EnvConfig(),
                         train_fn=lambda cfg, seed: None, specs=specs,
                         seeds=(0, 1), eval_episodes=1)
    assert len(table.results) == 4
    assert table.variants() == ["full", "no_interaction"]
    assert all(0.0 <= r <= 1.0 for r in table.success_rates("full"))

    path = tmp_path / "ablation.csv"
    export_metrics(str(path), table)
    with open(path) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    assert rows[0]["variant"] == "full"
    assert set(rows[0]) >= {"variant", "seed", "success_rate",
                            "joint_err_mean", "term_motion_end"}
    assert float(rows[0]["success_rate"]) == 1.0
