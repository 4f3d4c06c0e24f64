"""Point-mass: PPO vs PD oracle."""
import sys
import numpy as np
from cotrack.env import PointMassEnv
from cotrack.learn import train, TrainConfig, PPOConfig
from cotrack.learn.nets import policy_mean

def rollout(env, policy, episodes=20, seed=123):
    rets = []
    for e in range(episodes):
        obs = env.reset(seed=seed + e)
        total, done = 0.0, False
        while not done:
            obs, r, done, _ = env.step(policy(obs))
            total += r
        rets.append(total)
    return float(np.mean(rets))

env = PointMassEnv(seed=0)
oracle = rollout(env, lambda o: np.array([np.clip(10.0 * o[0] - 1.0 * o[1], -1, 1)]))
print("oracle return", oracle)

updates = int(sys.argv[1]) if len(sys.argv) > 1 else 300
for seed in (0, 1, 2):
    tc = TrainConfig(updates=updates, rollout_steps=256, seed=seed,
                     ppo=PPOConfig(lr=1e-3))
    params, hist = train(lambda i: PointMassEnv(seed=100 + i), tc, n_envs=2)
    ret = rollout(env, lambda o: policy_mean(params, o[None, :])[0])
    print(f"seed {seed}: return {ret:.2f} ratio {ret/oracle:.3f}", flush=True)
