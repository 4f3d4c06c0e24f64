"""Rollout collection and the PPO training loop."""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .gae import compute_gae
from .nets import PolicyParams, init_policy, policy_value, sample_action, save_params
from .ppo import PPOConfig, PPOLearner


@dataclass
class TrainConfig:
    updates: int = 100
    rollout_steps: int = 128
    hidden: tuple = (64, 64)
    seed: int = 0
    ppo: PPOConfig = field(default_factory=PPOConfig)
    log_path: str | None = None
    checkpoint_path: str | None = None
    checkpoint_every: int = 50
    deterministic_eval_every: int = 0


def _obs_vector(obs):
    return obs.as_vector() if hasattr(obs, "as_vector") else np.asarray(obs)


def _step_env(env, action):
    """Normalize the different env step signatures to (obs, r, done)."""

    obs, reward, done, _info = env.step(action)
    if hasattr(reward, "total"):
        reward = reward.total
    if hasattr(done, "terminated"):
        done = done.terminated
    return _obs_vector(obs), float(reward), bool(done)


class RolloutCollector:
    """On-policy rollouts over a list of sequential env instances."""

    def __init__(self, envs, seed=0):
        self.envs = envs
        self.rng = np.random.default_rng(seed)
        self.obs = [_obs_vector(e.reset()) for e in envs]
        self.ep_returns = [0.0] * len(envs)
        self.ep_lens = [0] * len(envs)
        self.finished_returns = []
        self.finished_lens = []

    def collect(self, params: PolicyParams, steps: int):
        """``steps`` per env; returns a flat batch dict plus episode stats."""

        n_envs = len(self.envs)
        obs_buf, act_buf, logp_buf, rew_buf, done_buf, val_buf = (
            [], [], [], [], [], [])
        for _ in range(steps):
            obs = np.stack(self.obs)
            a, logp, v = sample_action(params, obs, self.rng)
            rewards = np.zeros(n_envs)
            dones = np.zeros(n_envs)
            next_obs = []
            for i, env in enumerate(self.envs):
                o, r, d = _step_env(env, a[i])
                rewards[i] = r
                self.ep_returns[i] += r
                self.ep_lens[i] += 1
                if d:
                    dones[i] = 1.0
                    self.finished_returns.append(self.ep_returns[i])
                    self.finished_lens.append(self.ep_lens[i])
                    self.ep_returns[i] = 0.0
                    self.ep_lens[i] = 0
                    o = _obs_vector(env.reset())
                next_obs.append(o)
            obs_buf.append(obs)
            act_buf.append(a)
            logp_buf.append(logp)
            rew_buf.append(rewards)
            done_buf.append(dones)
            val_buf.append(v)
            self.obs = next_obs

        last_v = policy_value(params, np.stack(self.obs))
        adv = np.zeros((steps, n_envs))
        ret = np.zeros((steps, n_envs))
        rew = np.stack(rew_buf)
        val = np.stack(val_buf)
        don = np.stack(done_buf)
        for i in range(n_envs):
            adv[:, i], ret[:, i] = compute_gae(
                rew[:, i], val[:, i], don[:, i], last_v[i])
        batch = {
            "obs": np.concatenate(obs_buf),
            "actions": np.concatenate(act_buf),
            "old_logp": np.concatenate(logp_buf),
            # (steps, envs) flattened step-major to match the concatenations
            "advantages": adv.reshape(-1),
            "returns": ret.reshape(-1),
        }
        stats = {
            "mean_reward": float(rew.mean()),
            "episodes": len(self.finished_returns),
        }
        if self.finished_returns:
            stats["ep_return_mean"] = float(np.mean(self.finished_returns[-20:]))
            stats["ep_len_mean"] = float(np.mean(self.finished_lens[-20:]))
        return batch, stats


def config_hash(cfg: TrainConfig) -> str:
    blob = json.dumps(asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def train(env_factory, cfg: TrainConfig, n_envs: int = 1,
          params: PolicyParams | None = None, progress=None):
    """PPO training over envs from ``env_factory(seed)``.

    Returns (params, history). Writes a JSONL log and .npz checkpoints if
    the corresponding paths are set.
    """

    envs = [env_factory(cfg.seed + i) for i in range(n_envs)]
    probe = envs[0]
    obs0 = _obs_vector(probe.reset())
    obs_size = obs0.shape[0]
    action_size = getattr(probe, "action_size", None)
    if action_size is None:
        raise ValueError("envs must expose action_size")

    if params is None:
        params = init_policy(obs_size, action_size, hidden=tuple(cfg.hidden),
                             seed=cfg.seed)
    learner = PPOLearner(params, cfg.ppo)
    collector = RolloutCollector(envs, seed=cfg.seed + 1000)
    update_rng = np.random.default_rng(cfg.seed + 2000)

    log_file = None
    if cfg.log_path:
        os.makedirs(os.path.dirname(cfg.log_path) or ".", exist_ok=True)
        log_file = open(cfg.log_path, "a")

    history = []
    start = time.time()
    try:
        for update in range(cfg.updates):
            batch, roll_stats = collector.collect(learner.params,
                                                  cfg.rollout_steps)
            stats = learner.update(
                batch["obs"], batch["actions"], batch["old_logp"],
                batch["advantages"], batch["returns"], update_rng)
            record = {"update": update, "elapsed": time.time() - start,
                      **roll_stats, **stats}
            history.append(record)
            if log_file:
                log_file.write(json.dumps(record) + "\n")
                log_file.flush()
            if progress:
                progress(record)
            if (cfg.checkpoint_path
                    and (update + 1) % cfg.checkpoint_every == 0):
                _save_checkpoint(cfg, learner.params, update)
    finally:
        if log_file:
            log_file.close()
    if cfg.checkpoint_path:
        _save_checkpoint(cfg, learner.params, cfg.updates - 1)
    return learner.params, history


def _save_checkpoint(cfg: TrainConfig, params: PolicyParams, update: int):
    os.makedirs(os.path.dirname(cfg.checkpoint_path) or ".", exist_ok=True)
    save_params(cfg.checkpoint_path, params,
                extra={"update": update,
                       "config_hash_hex": np.frombuffer(
                           bytes.fromhex(config_hash(cfg)), dtype=np.uint8)})
