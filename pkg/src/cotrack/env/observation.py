"""Policy observation: proprioception, phase, object state in root frame."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..refmotion import ReferenceFrame, anchor_world, wrap_angle
from ..sim_core import SimState, WorldModel


@dataclass
class Observation:
    joint_pos: np.ndarray
    joint_vel: np.ndarray
    root_ori: tuple[float, float]  # (sin, cos) of pitch error vs reference
    root_lin_vel: tuple[float, float]  # root frame
    root_ang_vel: float
    prev_action: np.ndarray
    phase: float
    object_pos_root: tuple[float, float]
    object_ori_rel: float
    object_joint: float
    contact_points_root: np.ndarray  # (n_eefs, 2); (0, 0) when inactive
    contact_flags: np.ndarray  # (n_eefs,)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([
            self.joint_pos,
            self.joint_vel,
            np.array(self.root_ori),
            np.array(self.root_lin_vel),
            [self.root_ang_vel],
            self.prev_action,
            [self.phase],
            np.array(self.object_pos_root),
            [self.object_ori_rel, self.object_joint],
            self.contact_points_root.ravel(),
            self.contact_flags.astype(float),
        ])


def observation_size(n_joints: int, n_eefs: int) -> int:
    return 3 * n_joints + 5 + 1 + 4 + 3 * n_eefs


def _to_root(x, z, base_x, base_z, c, s):
    dx = x - base_x
    dz = z - base_z
    return (c * dx + s * dz, -s * dx + c * dz)


def build_observation(
    world: WorldModel,
    state: SimState,
    frame: ReferenceFrame,
    prev_action: np.ndarray,
    phase: float,
) -> Observation:
    bx = float(state.x[0])
    bz = float(state.z[0])
    bth = float(state.theta[0])
    c, s = math.cos(bth), math.sin(bth)
    ori_err = wrap_angle(bth - frame.robot_root_ori)

    vx, vz = float(state.vx[0]), float(state.vz[0])
    root_lin_vel = (c * vx + s * vz, -s * vx + c * vz)

    ob = world.object_body
    obj = world.object_model
    if ob is not None:
        ox, oz = float(state.x[ob]), float(state.z[ob])
        oth = float(state.theta[ob])
        object_pos_root = _to_root(ox, oz, bx, bz, c, s)
        object_ori_rel = wrap_angle(oth - bth)
        object_joint = (world.object_joint_angle(oth)
                        if obj.kind == "hinged" else 0.0)
    else:
        object_pos_root = (0.0, 0.0)
        object_ori_rel = 0.0
        object_joint = 0.0

    n_eefs = len(world.eef_ids)
    points = np.zeros((n_eefs, 2))
    flags = np.zeros(n_eefs, dtype=int)
    for i in range(n_eefs):
        flag = frame.contact_flags[i] if i < len(frame.contact_flags) else 0
        aid = (frame.contact_anchor_ids[i]
               if i < len(frame.contact_anchor_ids) else None)
        if flag == 1 and aid is not None and ob is not None:
            wx, wz = anchor_world(obj, (float(state.x[ob]), float(state.z[ob])),
                                  float(state.theta[ob]), aid)
            points[i] = _to_root(wx, wz, bx, bz, c, s)
            flags[i] = 1

    return Observation(
        joint_pos=state.joint_pos.copy(),
        joint_vel=state.joint_vel.copy(),
        root_ori=(math.sin(ori_err), math.cos(ori_err)),
        root_lin_vel=root_lin_vel,
        root_ang_vel=float(state.omega[0]),
        prev_action=np.asarray(prev_action, dtype=float).copy(),
        phase=float(phase),
        object_pos_root=object_pos_root,
        object_ori_rel=object_ori_rel,
        object_joint=object_joint,
        contact_points_root=points,
        contact_flags=flags,
    )
