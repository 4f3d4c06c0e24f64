"""The co-tracking RL environment tying sim, reference motion and rewards."""

from __future__ import annotations

import math

import numpy as np

from ..refmotion import ReferenceMotion, sample
from ..sim_core import WorldModel, apply_randomization, initial_state, step as sim_step
from ..sim_core.engine import ContactReport
from .config import EnvConfig
from .observation import Observation, build_observation, observation_size
from .rewards import RewardBreakdown, compute_reward
from .termination import TerminationResult, check_termination


def reference_body_velocities(world, motion, phase, dphi=1e-3):
    """Finite-difference world velocity of every robot body at ``phase``."""

    from ..sim_core import fk_robot

    lo = max(0.0, phase - dphi)
    hi = min(1.0, phase + dphi)
    if hi <= lo:
        return [(0.0, 0.0)] * len(world.robot_body_ids)
    fa = sample(motion, lo)
    fb = sample(motion, hi)
    dt = (hi - lo) * motion.duration
    pa = fk_robot(world.robot, fa.robot_root_pos, fa.robot_root_ori, fa.joint_pos)
    pb = fk_robot(world.robot, fb.robot_root_pos, fb.robot_root_ori, fb.joint_pos)
    return [((pb[i][0] - pa[i][0]) / dt, (pb[i][1] - pa[i][1]) / dt)
            for i in world.robot_body_ids]


def apply_action(cfg: EnvConfig, world: WorldModel, action, ref_joint_pos,
                 default_joint_pos=None):
    """Map a policy action to PD joint targets.

    Residual mode offsets the reference joint positions by a scaled action.
    The ablated mode interprets the action as an absolute target spanning
    the full joint range. Targets are clamped to joint limits.
    """

    a = np.asarray(action, dtype=float)
    if a.shape != (world.n_joints,):
        raise ValueError(f"expected action of length {world.n_joints}, "
                         f"got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("action contains non-finite values")
    a = np.clip(a, -1.0, 1.0)
    if cfg.use_residual_action:
        targets = np.asarray(ref_joint_pos, dtype=float) + cfg.action_scale * a
    else:
        lo = np.array([j.limits[0] for j in world.joints])
        hi = np.array([j.limits[1] for j in world.joints])
        targets = 0.5 * (lo + hi) + 0.5 * (hi - lo) * a
    targets = np.asarray(targets, dtype=float)
    for k, j in enumerate(world.joints):
        targets[k] = min(j.limits[1], max(j.limits[0], targets[k]))
    return targets


class CoTrackEnv:
    """Single-instance environment; owns its world and state exclusively."""

    def __init__(self, world: WorldModel, motion: ReferenceMotion,
                 cfg: EnvConfig, seed: int = 0, eval_mode: bool = False):
        cfg.validate()
        self.base_world = world
        self.motion = motion
        self.cfg = cfg
        self.eval_mode = eval_mode
        self.rng = np.random.default_rng(seed)
        self.world = world
        self.n_joints = world.n_joints
        self.n_eefs = len(world.eef_ids)
        self.obs_size = observation_size(self.n_joints, self.n_eefs)
        self.action_size = self.n_joints
        self._default_joints = (
            np.asarray(world.robot.default_joint_pos, dtype=float)
            if world.robot.default_joint_pos is not None
            else np.zeros(self.n_joints))
        self._needs_reset = True

    # ------------------------------------------------------------------ reset

    def reset(self, seed=None) -> Observation:
        cfg = self.cfg
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        rng = self.rng

        if cfg.use_domain_randomization and not self.eval_mode:
            scales = {}
            for b in self.base_world.bodies:
                scales[b.name] = {
                    "mass_scale": float(rng.uniform(*cfg.dr_mass_range)),
                    "inertia_scale": float(rng.uniform(*cfg.dr_inertia_range)),
                    "friction_scale": float(rng.uniform(*cfg.dr_friction_range)),
                }
            self.world = apply_randomization(self.base_world, scales)
        else:
            self.world = self.base_world

        if self.eval_mode:
            phi0 = 0.0
        else:
            phi0 = float(rng.uniform(0.0, cfg.phase0_max))
        frame = sample(self.motion, phi0)

        if self.eval_mode:
            p_noise = a_noise = v_noise = o_noise = 0.0
        else:
            p_noise = cfg.rsi_pos_noise
            a_noise = cfg.rsi_ang_noise
            v_noise = cfg.rsi_vel_noise
            o_noise = cfg.rsi_obj_noise

        def uni(scale, size=None):
            return rng.uniform(-scale, scale, size) if scale > 0 else (
                np.zeros(size) if size else 0.0)

        root_pos = (frame.robot_root_pos[0] + float(uni(p_noise)),
                    frame.robot_root_pos[1] + float(uni(p_noise)))
        root_ori = frame.robot_root_ori + float(uni(a_noise))
        joint_pos = np.asarray(frame.joint_pos) + uni(a_noise, self.n_joints)
        for k, j in enumerate(self.world.joints):
            joint_pos[k] = min(j.limits[1], max(j.limits[0], joint_pos[k]))

        ref_vel = reference_body_velocities(self.world, self.motion, phi0)
        root_vel = (ref_vel[0][0] + float(uni(v_noise)),
                    ref_vel[0][1] + float(uni(v_noise)),
                    float(uni(v_noise)))
        joint_vel = uni(v_noise, self.n_joints)

        obj_pos = (frame.object_pos[0] + float(uni(o_noise)),
                   frame.object_pos[1] + float(uni(o_noise)))
        obj_ori = frame.object_ori + float(uni(o_noise))
        if (self.world.object_model is not None
                and self.world.object_model.kind == "hinged"):
            # hinged objects keep their anchor: derive the pose from the angle
            hinge = self.world.object_model.hinge
            obj_ori = hinge.rest_ori + (frame.object_joint or 0.0) \
                + float(uni(o_noise))
            c, s = math.cos(obj_ori), math.sin(obj_ori)
            lx, lz = hinge.local_anchor
            obj_pos = (hinge.world_anchor[0] - (c * lx - s * lz),
                       hinge.world_anchor[1] - (s * lx + c * lz))

        self.state = initial_state(
            self.world, root_pos=root_pos, root_ori=root_ori,
            joint_pos=joint_pos, joint_vel=joint_vel,
            object_pos=obj_pos, object_ori=obj_ori,
            root_vel=root_vel,
        )
        self.phase = phi0
        self.step_count = 0
        self.prev_action = np.zeros(self.n_joints)
        self.last_report = ContactReport(contacts=[])
        self._feet_air_time = {i: 0.0 for i in self.world.feet_ids}
        self._feet_in_contact = {i: True for i in self.world.feet_ids}
        self._needs_reset = False
        return build_observation(self.world, self.state, frame,
                                 self.prev_action, self.phase)

    # ------------------------------------------------------------------- step

    def step(self, action):
        if self._needs_reset:
            raise RuntimeError("env must be reset before stepping")
        cfg = self.cfg
        frame = sample(self.motion, self.phase)
        targets = apply_action(cfg, self.world, action, frame.joint_pos,
                               self._default_joints)
        a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)

        air_bonus = 0.0
        for _ in range(cfg.decimation):
            self.state, self.last_report = sim_step(
                self.world, self.state, targets, cfg.physics_dt)
            air_bonus += self._update_feet(cfg.physics_dt)

        duration = self.motion.duration
        self.phase = min(1.0, self.phase + cfg.control_dt / duration)
        self.step_count += 1

        new_frame = sample(self.motion, self.phase)
        ref_vel = reference_body_velocities(self.world, self.motion, self.phase)
        reward = compute_reward(
            self.world, self.state, self.last_report, new_frame,
            self.prev_action, a, cfg, ref_body_vel=ref_vel,
            air_time_bonus=air_bonus,
        )
        term = check_termination(
            self.world, self.state, new_frame, self.last_report,
            self.step_count, cfg, phase=self.phase)
        if not term.terminated and self.step_count >= cfg.episode_horizon:
            term = TerminationResult(True, "motion_end", self.step_count)

        obs = build_observation(self.world, self.state, new_frame, a,
                                self.phase)
        self.prev_action = a
        if term.terminated:
            self._needs_reset = True
        info = {"phase": self.phase, "targets": targets}
        return obs, reward, term, info

    def _update_feet(self, dt):
        bonus = 0.0
        forces = {i: 0.0 for i in self.world.feet_ids}
        names = {self.world.bodies[i].name: i for i in self.world.feet_ids}
        for c in self.last_report.contacts:
            for n, i in names.items():
                if n in (c.body_a, c.body_b):
                    forces[i] += c.force
        lo, hi = self.cfg.air_time_range
        for i in self.world.feet_ids:
            in_contact = forces[i] > 1.0
            if in_contact and not self._feet_in_contact[i]:
                if lo <= self._feet_air_time[i] <= hi:
                    bonus += 1.0
                self._feet_air_time[i] = 0.0
            elif not in_contact:
                self._feet_air_time[i] += dt
            self._feet_in_contact[i] = in_contact
        return bonus
