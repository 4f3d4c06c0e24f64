"""Single-shot training curves with periodic offline eval, corrupted push_box."""
import sys, time, dataclasses
import numpy as np
from cotrack.tasks import load_task
from cotrack.refmotion import corrupt_reference
from cotrack.env import CoTrackEnv, EnvConfig
from cotrack.learn import PPOConfig, init_policy
from cotrack.learn.ppo import PPOLearner
from cotrack.learn.train import RolloutCollector, _obs_vector
from cotrack.evalharness import rollout_eval

updates = int(sys.argv[1])
variant = sys.argv[2]
seed = int(sys.argv[3])
every = 50

t = load_task("push_box")
world = t.build_world()
cm = corrupt_reference(t.motion, eef_offset=(-0.1, 0.0), window=(0.1, 0.95),
                       robot=t.robot)
cfg = EnvConfig() if variant == "with_ir" else dataclasses.replace(
    EnvConfig(), use_interaction_reward=False)
eval_cfg = dataclasses.replace(EnvConfig(), use_contact_termination=False)

envs = [CoTrackEnv(world, cm, cfg, seed=seed * 100 + i) for i in range(4)]
obs0 = _obs_vector(envs[0].reset())
params = init_policy(obs0.shape[0], envs[0].action_size, hidden=(64, 64),
                     seed=seed)
learner = PPOLearner(params, PPOConfig(lr=1e-3))
collector = RolloutCollector(envs, seed=seed + 1000)
rng = np.random.default_rng(seed + 2000)
t0 = time.perf_counter()
for u in range(1, updates + 1):
    batch, _ = collector.collect(learner.params, 256)
    learner.update(batch["obs"], batch["actions"], batch["old_logp"],
                   batch["advantages"], batch["returns"], rng)
    if u % every == 0:
        m = rollout_eval(world, cm, eval_cfg, learner.params, episodes=2,
                         seed=seed)
        ls = float(np.mean(learner.params.log_std))
        print(f"{variant} seed {seed} upd {u}: succ {m.success_rate:.2f} "
              f"obj_ori {m.object_err_ori:.3f} log_std {ls:+.2f} "
              f"({time.perf_counter()-t0:.0f}s)", flush=True)
