"""RL environment: observations, rewards, termination, and the env itself."""

from .config import (
    EnvConfig,
    config_from_dict,
    config_from_json,
    config_to_json,
    with_overrides,
)
from .cotrack_env import CoTrackEnv, apply_action, reference_body_velocities
from .observation import Observation, build_observation, observation_size
from .pointmass import PointMassEnv
from .rewards import (
    RewardBreakdown,
    RewardTerm,
    compute_reward,
    eef_interaction_inputs,
    interaction_reward,
    object_pose_error,
    robot_body_errors,
)
from .termination import TerminationResult, check_termination

__all__ = [
    "EnvConfig",
    "config_from_dict",
    "config_from_json",
    "config_to_json",
    "with_overrides",
    "CoTrackEnv",
    "apply_action",
    "reference_body_velocities",
    "Observation",
    "build_observation",
    "observation_size",
    "PointMassEnv",
    "RewardBreakdown",
    "RewardTerm",
    "compute_reward",
    "eef_interaction_inputs",
    "interaction_reward",
    "object_pose_error",
    "robot_body_errors",
    "TerminationResult",
    "check_termination",
]
