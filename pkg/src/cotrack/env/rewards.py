"""Co-tracking reward stack: tracking kernels, interaction term, penalties."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..refmotion import ReferenceFrame, anchor_world, wrap_angle
from ..sim_core import ContactReport, SimState, WorldModel, eef_contact_force, fk_robot
from ..sim_core.types import ValidationError
from .config import EnvConfig


@dataclass(frozen=True)
class RewardTerm:
    raw: float
    weight: float
    weighted: float


@dataclass(frozen=True)
class RewardBreakdown:
    body_local_pose: RewardTerm
    root_global_pose: RewardTerm
    body_global_vel: RewardTerm
    joint_tracking: RewardTerm
    object_pose: RewardTerm
    interaction: RewardTerm
    action_rate: RewardTerm
    joint_pos_limits: RewardTerm
    joint_vel: RewardTerm
    torque_limits: RewardTerm
    feet_impact: RewardTerm
    feet_slip: RewardTerm
    feet_air_time: RewardTerm
    total: float

    def terms(self) -> dict[str, RewardTerm]:
        return {k: getattr(self, k) for k in (
            "body_local_pose", "root_global_pose", "body_global_vel",
            "joint_tracking", "object_pose", "interaction", "action_rate",
            "joint_pos_limits", "joint_vel", "torque_limits", "feet_impact",
            "feet_slip", "feet_air_time")}


def interaction_reward(eef_positions, contact_anchor_world, contact_forces,
                       contact_flags, cfg: EnvConfig) -> float:
    """Contact-promoting reward in [0, 1].

    Per flagged end-effector: proximity kernel times a force kernel capped
    at 1 above the force threshold, averaged over the flagged set. Returns
    0 when nothing is flagged.
    """

    if cfg.sigma_pos <= 0 or cfg.sigma_frc <= 0 or cfg.f_thres <= 0:
        raise ValidationError("sigma_pos/sigma_frc/f_thres", "must be > 0")
    n_c = sum(1 for f in contact_flags if f == 1)
    if n_c == 0:
        return 0.0
    total = 0.0
    for i, flag in enumerate(contact_flags):
        if flag != 1:
            continue
        px, pz = eef_positions[i]
        tx, tz = contact_anchor_world[i]
        dist = math.hypot(px - tx, pz - tz)
        pos_term = math.exp(-dist / cfg.sigma_pos)
        frc_term = min(math.exp((contact_forces[i] - cfg.f_thres)
                                / cfg.sigma_frc), 1.0)
        total += pos_term * frc_term
    return total / n_c


def robot_body_errors(world: WorldModel, state: SimState,
                      frame: ReferenceFrame):
    """Per-body local position/orientation errors vs the reference.

    Positions are expressed in each side's own root frame, so the
    comparison is root-aligned.
    """

    ref_poses = fk_robot(world.robot, frame.robot_root_pos,
                         frame.robot_root_ori, frame.joint_pos)
    bx, bz, bth = float(state.x[0]), float(state.z[0]), float(state.theta[0])
    c, s = math.cos(bth), math.sin(bth)
    rx, rz, rth = frame.robot_root_pos[0], frame.robot_root_pos[1], frame.robot_root_ori
    rc, rs = math.cos(rth), math.sin(rth)
    pos_errs = []
    ori_errs = []
    for i in world.robot_body_ids:
        dx = float(state.x[i]) - bx
        dz = float(state.z[i]) - bz
        local = (c * dx + s * dz, -s * dx + c * dz)
        rdx = ref_poses[i][0] - rx
        rdz = ref_poses[i][1] - rz
        ref_local = (rc * rdx + rs * rdz, -rs * rdx + rc * rdz)
        pos_errs.append(math.hypot(local[0] - ref_local[0],
                                   local[1] - ref_local[1]))
        ori_errs.append(abs(wrap_angle(
            (float(state.theta[i]) - bth) - (ref_poses[i][2] - rth))))
    return pos_errs, ori_errs


def object_pose_error(world: WorldModel, state: SimState,
                      frame: ReferenceFrame):
    ob = world.object_body
    if ob is None:
        return 0.0, 0.0, 0.0
    pos_err = math.hypot(float(state.x[ob]) - frame.object_pos[0],
                         float(state.z[ob]) - frame.object_pos[1])
    ori_err = abs(wrap_angle(float(state.theta[ob]) - frame.object_ori))
    joint_err = 0.0
    if world.object_model.kind == "hinged" and frame.object_joint is not None:
        joint_err = abs(world.object_joint_angle(float(state.theta[ob]))
                        - frame.object_joint)
    return pos_err, ori_err, joint_err


def eef_interaction_inputs(world: WorldModel, state: SimState,
                           report: ContactReport, frame: ReferenceFrame):
    """(positions, anchor targets, forces, flags) aligned by eef index."""

    obj = world.object_model
    ob = world.object_body
    obj_name = world.bodies[ob].name if ob is not None else None
    positions = []
    targets = []
    forces = []
    flags = []
    for i, eid in enumerate(world.eef_ids):
        positions.append((float(state.x[eid]), float(state.z[eid])))
        flag = frame.contact_flags[i] if i < len(frame.contact_flags) else 0
        aid = (frame.contact_anchor_ids[i]
               if i < len(frame.contact_anchor_ids) else None)
        if flag == 1 and aid is not None and ob is not None:
            targets.append(anchor_world(
                obj, (float(state.x[ob]), float(state.z[ob])),
                float(state.theta[ob]), aid))
            forces.append(eef_contact_force(
                report, world, world.bodies[eid].name, obj_name))
            flags.append(1)
        else:
            targets.append((0.0, 0.0))
            forces.append(0.0)
            flags.append(0)
    return positions, targets, forces, flags


def _foot_contact_forces(world: WorldModel, report: ContactReport):
    names = {world.bodies[i].name: i for i in world.feet_ids}
    normal = {n: 0.0 for n in names}
    tangent_speed = {n: 0.0 for n in names}
    for c in report.contacts:
        for n in names:
            if n in (c.body_a, c.body_b):
                normal[n] += c.force
    return normal


def compute_reward(
    world: WorldModel,
    state: SimState,
    contact_report: ContactReport,
    frame: ReferenceFrame,
    prev_action: np.ndarray,
    action: np.ndarray,
    cfg: EnvConfig,
    ref_body_vel=None,
    air_time_bonus: float = 0.0,
) -> RewardBreakdown:
    """Weighted reward stack for one control step.

    Tracking terms use exponential kernels of the respective errors;
    regularization terms enter with negative sign. ``ref_body_vel`` is the
    finite-difference reference velocity per robot body (zeros if absent);
    ``air_time_bonus`` counts qualifying touchdowns this step.
    """

    pos_errs, _ = robot_body_errors(world, state, frame)
    body_local_raw = math.exp(-(sum(pos_errs) / len(pos_errs))
                              / cfg.sigma_body_local)

    root_pos_err = math.hypot(float(state.x[0]) - frame.robot_root_pos[0],
                              float(state.z[0]) - frame.robot_root_pos[1])
    root_ori_err = abs(wrap_angle(float(state.theta[0]) - frame.robot_root_ori))
    root_raw = math.exp(-root_pos_err / cfg.sigma_root_pos
                        - root_ori_err / cfg.sigma_root_ori)

    if ref_body_vel is None:
        ref_body_vel = [(0.0, 0.0)] * len(world.robot_body_ids)
    vel_errs = [
        math.hypot(float(state.vx[i]) - ref_body_vel[i][0],
                   float(state.vz[i]) - ref_body_vel[i][1])
        for i in world.robot_body_ids
    ]
    vel_raw = math.exp(-(sum(vel_errs) / len(vel_errs)) / cfg.sigma_body_vel)

    nj = world.n_joints
    if nj:
        joint_err = float(np.mean(np.abs(
            state.joint_pos - np.asarray(frame.joint_pos))))
    else:
        joint_err = 0.0
    joint_raw = math.exp(-joint_err / cfg.sigma_joint)

    opos, oori, ojoint = object_pose_error(world, state, frame)
    object_raw = math.exp(-opos / cfg.sigma_object_pos
                          - (oori + ojoint) / cfg.sigma_object_ori)

    if cfg.use_interaction_reward:
        inter_raw = interaction_reward(
            *eef_interaction_inputs(world, state, contact_report, frame), cfg)
        inter_weight = cfg.w_interaction
    else:
        inter_raw = 0.0
        inter_weight = 0.0

    a = np.asarray(action, dtype=float)
    pa = np.asarray(prev_action, dtype=float)
    action_rate_raw = float(np.mean((a - pa) ** 2)) if a.size else 0.0

    limit_raw = 0.0
    torque_raw = 0.0
    for k, j in enumerate(world.joints):
        lo, hi = j.limits
        q = float(state.joint_pos[k])
        limit_raw += max(0.0, q - (hi - cfg.soft_limit_margin))
        limit_raw += max(0.0, (lo + cfg.soft_limit_margin) - q)
        soft = cfg.soft_torque_ratio * j.torque_limit
        torque_raw += max(0.0, abs(float(state.applied_torque[k])) - soft)

    joint_vel_raw = float(np.mean(state.joint_vel ** 2)) if nj else 0.0

    impact_raw = 0.0
    slip_raw = 0.0
    foot_forces = _foot_contact_forces(world, contact_report)
    for i in world.feet_ids:
        name = world.bodies[i].name
        f = foot_forces.get(name, 0.0)
        excess = max(0.0, f - cfg.feet_impact_threshold)
        # bounded in [0, 1] per foot so force spikes cannot swamp tracking
        impact_raw += min(excess / cfg.feet_impact_threshold, 1.0) ** 2
        if f > 1.0:
            slip_raw += abs(float(state.vx[i]))

    def pos_term(raw, w):
        return RewardTerm(raw, w, w * raw)

    def neg_term(raw, w):
        return RewardTerm(raw, w, -w * raw)

    terms = {
        "body_local_pose": pos_term(body_local_raw, cfg.w_body_local_pose),
        "root_global_pose": pos_term(root_raw, cfg.w_root_global_pose),
        "body_global_vel": pos_term(vel_raw, cfg.w_body_global_vel),
        "joint_tracking": pos_term(joint_raw, cfg.w_joint_tracking),
        "object_pose": pos_term(object_raw, cfg.w_object_pose),
        "interaction": pos_term(inter_raw, inter_weight),
        "action_rate": neg_term(action_rate_raw, cfg.w_action_rate),
        "joint_pos_limits": neg_term(limit_raw, cfg.w_joint_pos_limits),
        "joint_vel": neg_term(joint_vel_raw, cfg.w_joint_vel),
        "torque_limits": neg_term(torque_raw, cfg.w_torque_limits),
        "feet_impact": neg_term(impact_raw, cfg.w_feet_impact),
        "feet_slip": neg_term(slip_raw, cfg.w_feet_slip),
        "feet_air_time": pos_term(air_time_bonus, cfg.w_feet_air_time),
    }
    total = sum(t.weighted for t in terms.values())
    return RewardBreakdown(total=total, **terms)
