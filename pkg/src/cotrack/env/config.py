"""Environment configuration: kernel widths, weights, thresholds, switches."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from ..sim_core.types import ValidationError


@dataclass(frozen=True)
class EnvConfig:
    # interaction reward kernel
    sigma_pos: float = 0.1  # m
    sigma_frc: float = 10.0  # N
    f_thres: float = 20.0  # N

    # tracking kernel widths
    sigma_body_local: float = 0.3
    sigma_root_pos: float = 0.3
    sigma_root_ori: float = 0.6
    sigma_body_vel: float = 1.0
    sigma_joint: float = 0.5
    sigma_object_pos: float = 0.2
    sigma_object_ori: float = 0.2

    # reward weights
    w_body_local_pose: float = 2.0
    w_root_global_pose: float = 1.0
    w_body_global_vel: float = 1.0
    w_joint_tracking: float = 1.0
    w_object_pose: float = 2.0
    w_interaction: float = 5.0
    w_action_rate: float = 0.1
    w_joint_pos_limits: float = 10.0
    w_joint_vel: float = 5.0e-4
    w_torque_limits: float = 0.01
    w_feet_impact: float = 1.0
    w_feet_slip: float = 0.5
    w_feet_air_time: float = 5.0

    # termination thresholds
    term_pos_threshold: float = 0.5  # m
    term_ori_threshold: float = 1.2  # rad
    term_min_steps: int = 25
    contact_term_pos: float = 0.2  # m
    contact_term_force: float = 1.0  # N
    body_err_reduce: str = "max"  # or "mean"

    # ablation switches
    use_interaction_reward: bool = True
    use_contact_termination: bool = True
    use_residual_action: bool = True
    use_body_track_termination: bool = True

    # action transform
    action_scale: float = 0.25  # rad per unit action

    # reference state initialization perturbations (uniform half widths)
    rsi_pos_noise: float = 0.05
    rsi_ang_noise: float = 0.05
    rsi_vel_noise: float = 0.1
    rsi_obj_noise: float = 0.05
    phase0_max: float = 0.9

    # domain randomization
    use_domain_randomization: bool = True
    dr_mass_range: tuple[float, float] = (0.8, 1.2)
    dr_inertia_range: tuple[float, float] = (0.8, 1.2)
    dr_friction_range: tuple[float, float] = (0.7, 1.3)

    # stepping
    physics_dt: float = 1.0 / 120.0
    decimation: int = 4
    episode_horizon: int = 1000

    # regularization details
    soft_torque_ratio: float = 0.9
    soft_limit_margin: float = 0.05  # rad inside the hard limits
    feet_impact_threshold: float = 200.0  # N
    air_time_range: tuple[float, float] = (0.1, 0.5)  # s

    @property
    def control_dt(self) -> float:
        return self.physics_dt * self.decimation

    def validate(self) -> None:
        for name in ("sigma_pos", "sigma_frc", "f_thres", "sigma_body_local",
                     "sigma_root_pos", "sigma_root_ori", "sigma_body_vel",
                     "sigma_joint", "sigma_object_pos", "sigma_object_ori",
                     "physics_dt", "action_scale"):
            if not getattr(self, name) > 0:
                raise ValidationError(name, "must be > 0")
        if self.term_min_steps < 0:
            raise ValidationError("term_min_steps", "must be >= 0")
        if self.decimation < 1:
            raise ValidationError("decimation", "must be >= 1")
        if self.body_err_reduce not in ("max", "mean"):
            raise ValidationError("body_err_reduce", "must be 'max' or 'mean'")
        if not 0.0 <= self.phase0_max <= 1.0:
            raise ValidationError("phase0_max", "must lie in [0, 1]")


_TUPLE_FIELDS = ("dr_mass_range", "dr_inertia_range", "dr_friction_range",
                 "air_time_range")


def config_to_json(cfg: EnvConfig) -> str:
    return json.dumps(asdict(cfg), indent=2)


def config_from_dict(doc: dict) -> EnvConfig:
    known = {f.name for f in fields(EnvConfig)}
    for key in doc:
        if key not in known:
            raise ValidationError(key, "unknown EnvConfig field")
    kwargs = dict(doc)
    for name in _TUPLE_FIELDS:
        if name in kwargs:
            kwargs[name] = tuple(kwargs[name])
    cfg = EnvConfig(**kwargs)
    cfg.validate()
    return cfg


def config_from_json(text: str) -> EnvConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError("<document>", f"malformed JSON: {e}") from e
    return config_from_dict(doc)


def with_overrides(cfg: EnvConfig, **overrides) -> EnvConfig:
    out = replace(cfg, **overrides)
    out.validate()
    return out
