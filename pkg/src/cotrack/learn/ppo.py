"""Clipped-surrogate PPO update with a hand-rolled Adam optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nets import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    PolicyParams,
    gaussian_entropy,
    mlp_backward,
    mlp_forward,
)


@dataclass
class PPOConfig:
    gamma: float = 0.99
    lam: float = 0.95
    clip_eps: float = 0.2
    lr: float = 3e-4
    epochs: int = 5
    minibatches: int = 4
    entropy_coef: float = 0.005
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    normalize_advantages: bool = True


class Adam:
    """Adam over an arbitrary pytree-like list of arrays."""

    def __init__(self, shapes, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params_flat, grads_flat):
        self.t += 1
        out = []
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for i, (p, g) in enumerate(zip(params_flat, grads_flat)):
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            mhat = self.m[i] / b1c
            vhat = self.v[i] / b2c
            out.append(p - self.lr * mhat / (np.sqrt(vhat) + self.eps))
        return out


def _flatten_params(params: PolicyParams):
    flat = [a for w, b in params.pi for a in (w, b)]
    flat += [a for w, b in params.vf for a in (w, b)]
    flat.append(params.log_std)
    return flat


def _unflatten_params(template: PolicyParams, flat):
    n_pi = len(template.pi)
    n_vf = len(template.vf)
    pi = [(flat[2 * i], flat[2 * i + 1]) for i in range(n_pi)]
    off = 2 * n_pi
    vf = [(flat[off + 2 * i], flat[off + 2 * i + 1]) for i in range(n_vf)]
    return PolicyParams(pi=pi, vf=vf, log_std=flat[-1])


def ppo_loss_and_grads(params: PolicyParams, obs, actions, old_logp,
                       advantages, returns, cfg: PPOConfig):
    """Loss value, gradients and diagnostics for one minibatch.

    Policy loss: -mean(min(r*A, clip(r)*A)) with r = exp(logp - old_logp).
    Value loss: 0.5 * mean((V - returns)^2), scaled by ``value_coef``.
    Entropy bonus subtracts ``entropy_coef * H``.
    """

    n = obs.shape[0]
    log_std = np.clip(params.log_std, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)

    mu, pi_cache = mlp_forward(params.pi, obs)
    z = (actions - mu) / std
    logp = (-0.5 * z * z - log_std - 0.5 * np.log(2.0 * np.pi)).sum(axis=1)
    ratio = np.exp(logp - old_logp)
    clipped = np.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)
    surr1 = ratio * advantages
    surr2 = clipped * advantages
    use_surr1 = surr1 <= surr2
    policy_loss = -np.mean(np.minimum(surr1, surr2))

    # d(policy_loss)/d(logp): only unclipped samples carry gradient
    dl_dlogp = np.where(use_surr1, -ratio * advantages / n, 0.0)
    # dlogp/dmu = z / std; dlogp/dlog_std = z^2 - 1 (per dim)
    grad_mu = dl_dlogp[:, None] * (z / std)
    grad_log_std = (dl_dlogp[:, None] * (z * z - 1.0)).sum(axis=0)

    entropy = gaussian_entropy(log_std)
    # dH/dlog_std = 1 per dim; live only inside the clamp range
    in_range = ((params.log_std > LOG_STD_MIN)
                & (params.log_std < LOG_STD_MAX)).astype(float)
    grad_log_std = (grad_log_std - cfg.entropy_coef) * in_range

    pi_grads, _ = mlp_backward(params.pi, pi_cache, grad_mu)

    v, vf_cache = mlp_forward(params.vf, obs)
    v = v[:, 0]
    v_err = v - returns
    value_loss = 0.5 * float(np.mean(v_err ** 2))
    grad_v = (cfg.value_coef * v_err / n)[:, None]
    vf_grads, _ = mlp_backward(params.vf, vf_cache, grad_v)

    total_loss = (policy_loss + cfg.value_coef * value_loss
                  - cfg.entropy_coef * entropy)
    grads = [a for g in pi_grads for a in g]
    grads += [a for g in vf_grads for a in g]
    grads.append(grad_log_std)

    stats = {
        "policy_loss": float(policy_loss),
        "value_loss": value_loss,
        "entropy": entropy,
        "approx_kl": float(np.mean(old_logp - logp)),
        "clip_frac": float(np.mean(~use_surr1)),
    }
    return float(total_loss), grads, stats


def _clip_grads(grads, max_norm):
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        grads = [g * scale for g in grads]
    return grads, norm


@dataclass
class PPOLearner:
    """Owns the parameters and Adam state; applies PPO updates to batches."""

    params: PolicyParams
    cfg: PPOConfig = field(default_factory=PPOConfig)

    def __post_init__(self):
        shapes = [p.shape for p in _flatten_params(self.params)]
        self.opt = Adam(shapes, lr=self.cfg.lr)

    def update(self, obs, actions, old_logp, advantages, returns, rng):
        """Run epochs x minibatches of clipped-PPO SGD; returns mean stats."""

        cfg = self.cfg
        n = obs.shape[0]
        if cfg.normalize_advantages and n > 1:
            advantages = ((advantages - advantages.mean())
                          / (advantages.std() + 1e-8))
        all_stats = []
        for _ in range(cfg.epochs):
            perm = rng.permutation(n)
            splits = np.array_split(perm, cfg.minibatches)
            for idx in splits:
                if len(idx) == 0:
                    continue
                loss, grads, stats = ppo_loss_and_grads(
                    self.params, obs[idx], actions[idx], old_logp[idx],
                    advantages[idx], returns[idx], cfg)
                grads, norm = _clip_grads(grads, cfg.max_grad_norm)
                flat = _flatten_params(self.params)
                flat = self.opt.step(flat, grads)
                self.params = _unflatten_params(self.params, flat)
                stats["grad_norm"] = norm
                stats["loss"] = loss
                all_stats.append(stats)
        keys = all_stats[0].keys()
        return {k: float(np.mean([s[k] for s in all_stats])) for k in keys}
