"""Policy optimization: numpy MLPs, GAE, and PPO."""

from .gae import compute_gae
from .nets import (
    PolicyParams,
    clamped_log_std,
    gaussian_entropy,
    gaussian_logp,
    init_policy,
    load_params,
    mlp_backward,
    mlp_forward,
    policy_mean,
    policy_value,
    sample_action,
    save_params,
)
from .ppo import Adam, PPOConfig, PPOLearner, ppo_loss_and_grads
from .train import RolloutCollector, TrainConfig, config_hash, train

__all__ = [
    "compute_gae",
    "PolicyParams",
    "clamped_log_std",
    "gaussian_entropy",
    "gaussian_logp",
    "init_policy",
    "load_params",
    "mlp_backward",
    "mlp_forward",
    "policy_mean",
    "policy_value",
    "sample_action",
    "save_params",
    "Adam",
    "PPOConfig",
    "PPOLearner",
    "ppo_loss_and_grads",
    "RolloutCollector",
    "TrainConfig",
    "config_hash",
    "train",
]
