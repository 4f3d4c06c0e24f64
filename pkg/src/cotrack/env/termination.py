"""Episode termination stack: tracking-error limits, contact loss, motion end."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..refmotion import ReferenceFrame, wrap_angle
from ..sim_core import ContactReport, SimState, WorldModel
from .config import EnvConfig
from .rewards import eef_interaction_inputs, object_pose_error, robot_body_errors


@dataclass(frozen=True)
class TerminationResult:
    terminated: bool
    reason: str  # none | root_pose | body_pose | object_pose | lost_contact | motion_end
    step: int

    @property
    def is_failure(self) -> bool:
        return self.terminated and self.reason != "motion_end"


def check_termination(
    world: WorldModel,
    state: SimState,
    frame: ReferenceFrame,
    contact_report: ContactReport,
    step: int,
    cfg: EnvConfig,
    phase: float = 0.0,
) -> TerminationResult:
    """Evaluate the termination conditions for one control step.

    Error-based conditions are gated by the minimum step count; reaching
    phase 1 ends the episode as a success.
    """

    gate = step >= cfg.term_min_steps

    if gate:
        root_pos_err = math.hypot(
            float(state.x[0]) - frame.robot_root_pos[0],
            float(state.z[0]) - frame.robot_root_pos[1])
        root_ori_err = abs(wrap_angle(
            float(state.theta[0]) - frame.robot_root_ori))
        if (root_pos_err > cfg.term_pos_threshold
                or root_ori_err > cfg.term_ori_threshold):
            return TerminationResult(True, "root_pose", step)

        if cfg.use_body_track_termination:
            pos_errs, ori_errs = robot_body_errors(world, state, frame)
            if cfg.body_err_reduce == "max":
                pe = max(pos_errs)
                oe = max(ori_errs)
            else:
                pe = sum(pos_errs) / len(pos_errs)
                oe = sum(ori_errs) / len(ori_errs)
            if pe > cfg.term_pos_threshold or oe > cfg.term_ori_threshold:
                return TerminationResult(True, "body_pose", step)

        if world.object_body is not None:
            opos, oori, ojoint = object_pose_error(world, state, frame)
            if (opos > cfg.term_pos_threshold
                    or oori + ojoint > cfg.term_ori_threshold):
                return TerminationResult(True, "object_pose", step)

        if cfg.use_contact_termination and world.object_body is not None:
            positions, targets, forces, flags = eef_interaction_inputs(
                world, state, contact_report, frame)
            for i, flag in enumerate(flags):
                if flag != 1:
                    continue
                dist = math.hypot(positions[i][0] - targets[i][0],
                                  positions[i][1] - targets[i][1])
                if dist > cfg.contact_term_pos and forces[i] < cfg.contact_term_force:
                    return TerminationResult(True, "lost_contact", step)

    if phase >= 1.0:
        return TerminationResult(True, "motion_end", step)
    return TerminationResult(False, "none", step)
