"""Pilot for the residual-action study on kneel_lift."""
import sys, time, dataclasses
import numpy as np
from cotrack.tasks import load_task
from cotrack.env import CoTrackEnv, EnvConfig
from cotrack.learn import train, TrainConfig, PPOConfig
from cotrack.evalharness import rollout_eval

updates = int(sys.argv[1]) if len(sys.argv) > 1 else 150
seeds = [int(s) for s in (sys.argv[2].split(",") if len(sys.argv) > 2 else [0])]

t = load_task("kneel_lift")
world = t.build_world()
base = EnvConfig()
variants = [
    ("residual", base),
    ("non_residual", dataclasses.replace(base, use_residual_action=False)),
    ("non_residual_no_track",
     dataclasses.replace(base, use_residual_action=False,
                         use_body_track_termination=False)),
]
for variant, cfg in variants:
    for seed in seeds:
        def factory(i, cfg=cfg, seed=seed):
            return CoTrackEnv(world, t.motion, cfg, seed=seed * 100 + i)
        tc = TrainConfig(updates=updates, rollout_steps=256, seed=seed,
                         ppo=PPOConfig(lr=1e-3))
        t0 = time.perf_counter()
        params, hist = train(factory, tc, n_envs=4)
        # evaluate every variant under the same config it trained with, so
        # tracking error reflects what the policy actually does;
        # errors accumulate over however long the episode survives
        m = rollout_eval(world, t.motion, cfg, params, episodes=2, seed=seed)
        track = m.joint_err_mean + m.body_err_mean
        print(f"{variant:22s} seed {seed}: track_err {track:.4f} "
              f"(joint {m.joint_err_mean:.4f} body {m.body_err_mean:.4f}) "
              f"success {m.success_rate:.2f} eplen {m.ep_len_mean:.0f} "
              f"({time.perf_counter()-t0:.0f}s)", flush=True)
