"""Pilot for the interaction-reward study on corrupted push_box."""
import sys, time, dataclasses
import numpy as np
from cotrack.tasks import load_task
from cotrack.refmotion import corrupt_reference
from cotrack.env import CoTrackEnv, EnvConfig
from cotrack.learn import train, TrainConfig, PPOConfig
from cotrack.evalharness import rollout_eval

updates = int(sys.argv[1]) if len(sys.argv) > 1 else 60
seeds = [int(s) for s in (sys.argv[2].split(",") if len(sys.argv) > 2 else [0])]

t = load_task("push_box")
world = t.build_world()
cm = corrupt_reference(t.motion, eef_offset=(-0.1, 0.0), window=(0.1, 0.95),
                       robot=t.robot)
base = EnvConfig()
eval_cfg = dataclasses.replace(base, use_contact_termination=False)

for variant, cfg in [("with_ir", base),
                     ("no_ir", dataclasses.replace(base, use_interaction_reward=False))]:
    for seed in seeds:
        def factory(i, cfg=cfg, seed=seed):
            return CoTrackEnv(world, cm, cfg, seed=seed * 100 + i)
        tc = TrainConfig(updates=updates, rollout_steps=256, seed=seed,
                         ppo=PPOConfig(lr=1e-3))
        t0 = time.perf_counter()
        params, hist = train(factory, tc, n_envs=4)
        m = rollout_eval(world, cm, eval_cfg, params, episodes=2, seed=seed)
        print(f"{variant} seed {seed}: success {m.success_rate:.2f} "
              f"obj_ori_err {m.object_err_ori:.3f} "
              f"train_ret_last {np.mean([h['ep_return_mean'] for h in hist[-5:]]):.1f} "
              f"({time.perf_counter()-t0:.0f}s)", flush=True)
