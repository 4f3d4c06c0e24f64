"""1D point-mass target-tracking toy environment.

A minimal sanity environment for the learning stack: the agent applies a
bounded force to a unit mass and is rewarded for staying near a moving
target. A PD controller solves it, so policy-gradient training should too.
"""

from __future__ import annotations

import math

import numpy as np


class PointMassEnv:
    """Track a sinusoidal target with a force-controlled unit point mass."""

    obs_size = 2
    action_size = 1

    def __init__(self, seed: int = 0, horizon: int = 120, dt: float = 0.05,
                 force_scale: float = 5.0, target_amp: float = 0.5,
                 target_freq: float = 0.25):
        self.rng = np.random.default_rng(seed)
        self.horizon = horizon
        self.dt = dt
        self.force_scale = force_scale
        self.target_amp = target_amp
        self.target_freq = target_freq
        self._needs_reset = True

    def _target(self, t: float) -> float:
        return self.target_amp * math.sin(
            2.0 * math.pi * self.target_freq * t + self._phase0)

    def reset(self, seed=None):
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.pos = float(self.rng.uniform(-0.5, 0.5))
        self.vel = 0.0
        self.t = 0.0
        self.step_count = 0
        self._phase0 = float(self.rng.uniform(0.0, 2.0 * math.pi))
        self._needs_reset = False
        return self._obs()

    def _obs(self):
        return np.array([self._target(self.t) - self.pos, self.vel])

    def step(self, action):
        if self._needs_reset:
            raise RuntimeError("env must be reset before stepping")
        a = float(np.clip(np.asarray(action, dtype=float).reshape(-1)[0],
                          -1.0, 1.0))
        force = self.force_scale * a
        self.vel += force * self.dt
        self.pos += self.vel * self.dt
        self.t += self.dt
        self.step_count += 1
        err = abs(self._target(self.t) - self.pos)
        reward = math.exp(-err / 0.25)
        done = self.step_count >= self.horizon
        if done:
            self._needs_reset = True
        return self._obs(), reward, done, {}
