"""Generalized advantage estimation over (possibly truncated) trajectories."""

from __future__ import annotations

import numpy as np


def compute_gae(rewards, values, dones, last_value, gamma=0.99, lam=0.95):
    """GAE(lambda) advantages and returns for one rollout stream.

    ``dones[t]`` marks the end of an episode after step ``t``; the value
    chain and the advantage recursion both stop at those boundaries.

    Args:
        rewards: (T,) rewards.
        values: (T,) value estimates for the visited states.
        dones: (T,) 0/1 episode-end flags.
        last_value: bootstrap value for the state after step T-1.

    Returns:
        (advantages, returns), both (T,).
    """

    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=float)
    T = len(rewards)
    adv = np.zeros(T)
    next_value = float(last_value)
    next_adv = 0.0
    for t in reversed(range(T)):
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        next_adv = delta + gamma * lam * nonterminal * next_adv
        adv[t] = next_adv
        next_value = values[t]
    returns = adv + values
    return adv, returns
