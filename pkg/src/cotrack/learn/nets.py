"""Small MLPs with hand-written backprop on plain numpy arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOG_STD_MIN = -4.0
LOG_STD_MAX = 1.0


def init_mlp(sizes, rng, final_scale=0.01):
    """Orthogonal-ish init: scaled Gaussian layers, small final layer."""

    params = []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        scale = final_scale if i == len(sizes) - 2 else np.sqrt(2.0 / n_in)
        w = rng.normal(0.0, scale, (n_in, n_out))
        b = np.zeros(n_out)
        params.append((w, b))
    return params


def mlp_forward(params, x):
    """Forward pass with tanh hidden activations; returns (out, cache)."""

    h = np.atleast_2d(np.asarray(x, dtype=float))
    cache = [h]
    for i, (w, b) in enumerate(params):
        z = h @ w + b
        h = np.tanh(z) if i < len(params) - 1 else z
        cache.append(h)
    return h, cache


def mlp_backward(params, cache, grad_out):
    """Backprop ``grad_out`` (dL/dout) through the net.

    Returns (param_grads, grad_input); grads sum over the batch.
    """

    grads = [None] * len(params)
    g = np.atleast_2d(np.asarray(grad_out, dtype=float))
    for i in reversed(range(len(params))):
        w, _ = params[i]
        h_in = cache[i]
        if i < len(params) - 1:
            # cache[i + 1] holds tanh(z); d tanh = 1 - tanh^2
            g = g * (1.0 - cache[i + 1] ** 2)
        grads[i] = (h_in.T @ g, g.sum(axis=0))
        g = g @ w.T
    return grads, g


@dataclass
class PolicyParams:
    """Diagonal-Gaussian policy net plus a separate value net."""

    pi: list  # list of (w, b)
    vf: list
    log_std: np.ndarray

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            pi=[(w.copy(), b.copy()) for w, b in self.pi],
            vf=[(w.copy(), b.copy()) for w, b in self.vf],
            log_std=self.log_std.copy(),
        )

    def flat(self) -> np.ndarray:
        parts = [p.ravel() for w, b in self.pi for p in (w, b)]
        parts += [p.ravel() for w, b in self.vf for p in (w, b)]
        parts.append(self.log_std.ravel())
        return np.concatenate(parts)


def init_policy(obs_size, action_size, hidden=(64, 64), seed=0,
                init_log_std=-0.5) -> PolicyParams:
    rng = np.random.default_rng(seed)
    pi = init_mlp((obs_size, *hidden, action_size), rng)
    vf = init_mlp((obs_size, *hidden, 1), rng, final_scale=1.0)
    return PolicyParams(pi=pi, vf=vf,
                        log_std=np.full(action_size, float(init_log_std)))


def policy_mean(params: PolicyParams, obs):
    out, _ = mlp_forward(params.pi, obs)
    return out


def policy_value(params: PolicyParams, obs):
    out, _ = mlp_forward(params.vf, obs)
    return out[:, 0]


def clamped_log_std(params: PolicyParams) -> np.ndarray:
    return np.clip(params.log_std, LOG_STD_MIN, LOG_STD_MAX)


def sample_action(params: PolicyParams, obs, rng):
    """Sample a ~ N(mu(obs), diag(std^2)); returns (action, logp, value)."""

    mu = policy_mean(params, obs)
    log_std = clamped_log_std(params)
    std = np.exp(log_std)
    noise = rng.standard_normal(mu.shape)
    a = mu + std * noise
    logp = gaussian_logp(a, mu, log_std)
    v = policy_value(params, obs)
    return a, logp, v


def gaussian_logp(a, mu, log_std):
    """Log density of a diagonal Gaussian, summed over action dims."""

    std = np.exp(log_std)
    z = (a - mu) / std
    return (-0.5 * z * z - log_std - 0.5 * np.log(2.0 * np.pi)).sum(axis=-1)


def gaussian_entropy(log_std) -> float:
    return float(np.sum(log_std + 0.5 * np.log(2.0 * np.pi * np.e)))


def save_params(path, params: PolicyParams, extra=None):
    arrays = {"log_std": params.log_std,
              "n_pi": np.array(len(params.pi)),
              "n_vf": np.array(len(params.vf))}
    for i, (w, b) in enumerate(params.pi):
        arrays[f"pi_w{i}"] = w
        arrays[f"pi_b{i}"] = b
    for i, (w, b) in enumerate(params.vf):
        arrays[f"vf_w{i}"] = w
        arrays[f"vf_b{i}"] = b
    for k, v in (extra or {}).items():
        arrays[f"extra_{k}"] = np.asarray(v)
    np.savez(path, **arrays)


def load_params(path):
    data = np.load(path, allow_pickle=False)
    pi = [(data[f"pi_w{i}"], data[f"pi_b{i}"])
          for i in range(int(data["n_pi"]))]
    vf = [(data[f"vf_w{i}"], data[f"vf_b{i}"])
          for i in range(int(data["n_vf"]))]
    extra = {k[len("extra_"):]: data[k] for k in data.files
             if k.startswith("extra_")}
    return PolicyParams(pi=pi, vf=vf, log_std=data["log_std"]), extra
