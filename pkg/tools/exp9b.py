"""Long instrumented run: does interaction-seeking emerge on corrupted push_box?"""
import sys, time, dataclasses
import numpy as np
from cotrack.tasks import load_task
from cotrack.refmotion import corrupt_reference
from cotrack.env import CoTrackEnv, EnvConfig
from cotrack.learn import train, TrainConfig, PPOConfig
from cotrack.learn.train import RolloutCollector
from cotrack.evalharness import rollout_eval

updates = int(sys.argv[1])
variant = sys.argv[2]  # with_ir | no_ir
seed = int(sys.argv[3])
lr = float(sys.argv[4]) if len(sys.argv) > 4 else 1e-3

t = load_task("push_box")
world = t.build_world()
cm = corrupt_reference(t.motion, eef_offset=(-0.1, 0.0), window=(0.1, 0.95),
                       robot=t.robot)
cfg = EnvConfig() if variant == "with_ir" else dataclasses.replace(
    EnvConfig(), use_interaction_reward=False)
eval_cfg = dataclasses.replace(EnvConfig(), use_contact_termination=False)

def factory(i):
    return CoTrackEnv(world, cm, cfg, seed=seed * 100 + i)

chunk = 100
params = None
t0 = time.perf_counter()
for done in range(0, updates, chunk):
    tc = TrainConfig(updates=chunk, rollout_steps=256, seed=seed + done,
                     ppo=PPOConfig(lr=lr))
    params, hist = train(factory, tc, n_envs=4, params=params)
    m = rollout_eval(world, cm, eval_cfg, params, episodes=2, seed=seed)
    ret = np.mean([h.get("ep_return_mean", 0) for h in hist[-5:]])
    print(f"{variant} seed {seed} upd {done+chunk}: succ {m.success_rate:.2f} "
          f"obj_ori {m.object_err_ori:.3f} ret {ret:.0f} "
          f"({time.perf_counter()-t0:.0f}s)", flush=True)
