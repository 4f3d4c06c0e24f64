"""World assembly, forward kinematics and state construction."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .types import (
    BodySpec,
    Box,
    Circle,
    HingeSpec,
    JointSpec,
    ObjectModel,
    RobotModel,
    ValidationError,
    validate_object,
    validate_robot,
)

GRAVITY = -9.81


@dataclass(frozen=True)
class WorldJoint:
    parent: int
    child: int
    anchor: tuple[float, float]
    child_anchor: tuple[float, float]
    limits: tuple[float, float]
    torque_limit: float
    kp: float
    kd: float


@dataclass(frozen=True)
class WorldModel:
    """Immutable description of one robot + object + ground scene.

    Body 0 is the robot base, followed by the robot links in model order,
    then the object body (if the object is not purely kinematic).
    """

    bodies: tuple[BodySpec, ...]
    joints: tuple[WorldJoint, ...]
    robot: RobotModel
    object_model: ObjectModel | None
    object_body: int | None
    eef_ids: tuple[int, ...]
    feet_ids: tuple[int, ...]
    ground_friction: float
    gravity: float = GRAVITY
    collide_ground: tuple[bool, ...] = ()

    def body_id(self, name: str) -> int:
        for i, b in enumerate(self.bodies):
            if b.name == name:
                return i
        raise KeyError(f"unknown body {name!r}")

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def robot_body_ids(self) -> tuple[int, ...]:
        return tuple(range(1 + len(self.robot.links)))

    def object_joint_angle(self, theta: float) -> float:
        assert self.object_model is not None and self.object_model.hinge
        return theta - self.object_model.hinge.rest_ori


@dataclass
class SimState:
    """Full dynamic state of one simulation instance (maximal coordinates)."""

    x: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    vx: np.ndarray
    vz: np.ndarray
    omega: np.ndarray
    joint_pos: np.ndarray
    joint_vel: np.ndarray
    applied_torque: np.ndarray
    time: float = 0.0
    step_count: int = 0

    def copy(self) -> "SimState":
        return SimState(
            self.x.copy(), self.z.copy(), self.theta.copy(),
            self.vx.copy(), self.vz.copy(), self.omega.copy(),
            self.joint_pos.copy(), self.joint_vel.copy(),
            self.applied_torque.copy(), self.time, self.step_count,
        )


def build_world(
    robot: RobotModel,
    obj: ObjectModel | None,
    ground_friction: float = 0.8,
    gravity: float = GRAVITY,
) -> WorldModel:
    validate_robot(robot)
    if obj is not None:
        validate_object(obj)
    if not 0.0 <= ground_friction <= 2.0:
        raise ValidationError("ground_friction", "must lie in [0, 2]")

    bodies = [robot.base, *robot.links]
    name_to_id = {b.name: i for i, b in enumerate(bodies)}
    joints = tuple(
        WorldJoint(
            parent=name_to_id[j.parent],
            child=name_to_id[j.child],
            anchor=j.anchor,
            child_anchor=j.child_anchor,
            limits=j.limits,
            torque_limit=j.torque_limit,
            kp=j.kp,
            kd=j.kd,
        )
        for j in robot.joints
    )
    object_body = None
    if obj is not None:
        object_body = len(bodies)
        bodies.append(obj.body)

    eef_ids = tuple(name_to_id[e] for e in robot.eef_bodies)
    feet_ids = tuple(name_to_id[f] for f in robot.feet_bodies)
    collide_ground = tuple(True for _ in bodies)
    return WorldModel(
        bodies=tuple(bodies),
        joints=joints,
        robot=robot,
        object_model=obj,
        object_body=object_body,
        eef_ids=eef_ids,
        feet_ids=feet_ids,
        ground_friction=ground_friction,
        gravity=gravity,
        collide_ground=collide_ground,
    )


def apply_randomization(world: WorldModel, scales: dict) -> WorldModel:
    """Return a world with scaled inertial/friction properties.

    ``scales`` maps body name -> {"mass_scale", "inertia_scale",
    "friction_scale"}; missing bodies or keys default to 1. Friction is
    clamped back into [0, 2] after scaling. The input world is unchanged.
    """

    new_bodies = []
    for b in world.bodies:
        s = scales.get(b.name, {})
        for key, val in s.items():
            if key not in ("mass_scale", "inertia_scale", "friction_scale"):
                raise ValidationError(f"scales[{b.name!r}].{key}",
                                      "unknown scale key")
            if not val > 0:
                raise ValidationError(f"scales[{b.name!r}].{key}",
                                      "must be > 0")
        new_bodies.append(replace(
            b,
            mass=b.mass * s.get("mass_scale", 1.0),
            inertia=b.inertia * s.get("inertia_scale", 1.0),
            friction_coeff=min(2.0, max(0.0, b.friction_coeff
                                        * s.get("friction_scale", 1.0))),
        ))
    return replace(world, bodies=tuple(new_bodies))


def fk_robot(
    robot: RobotModel,
    root_pos: tuple[float, float],
    root_ori: float,
    joint_pos,
) -> list[tuple[float, float, float]]:
    """Forward kinematics: world (x, z, theta) of base + every link.

    Poses are returned in body order (base first, links in model order).
    """

    if len(joint_pos) != len(robot.joints):
        raise ValidationError("joint_pos", "length must match joint count")
    names = [robot.base.name] + [l.name for l in robot.links]
    idx = {n: i for i, n in enumerate(names)}
    poses: list[tuple[float, float, float] | None] = [None] * len(names)
    poses[0] = (root_pos[0], root_pos[1], root_ori)
    pending = list(zip(robot.joints, joint_pos))
    while pending:
        for item in list(pending):
            j, q = item
            pp = poses[idx[j.parent]]
            if pp is None:
                continue
            px, pz, pth = pp
            c, s = math.cos(pth), math.sin(pth)
            ax = px + c * j.anchor[0] - s * j.anchor[1]
            az = pz + s * j.anchor[0] + c * j.anchor[1]
            cth = pth + q
            cc, cs = math.cos(cth), math.sin(cth)
            cx = ax - (cc * j.child_anchor[0] - cs * j.child_anchor[1])
            cz = az - (cs * j.child_anchor[0] + cc * j.child_anchor[1])
            poses[idx[j.child]] = (cx, cz, cth)
            pending.remove(item)
    return poses  # type: ignore[return-value]


def initial_state(
    world: WorldModel,
    root_pos: tuple[float, float] = (0.0, 0.0),
    root_ori: float = 0.0,
    joint_pos=None,
    object_pos: tuple[float, float] = (0.0, 0.0),
    object_ori: float = 0.0,
    root_vel: tuple[float, float, float] = (0.0, 0.0, 0.0),
    joint_vel=None,
    object_vel: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> SimState:
    """Assemble a SimState from reduced coordinates via forward kinematics."""

    nb = len(world.bodies)
    nj = world.n_joints
    if joint_pos is None:
        joint_pos = [0.0] * nj
    if joint_vel is None:
        joint_vel = [0.0] * nj
    if len(joint_pos) != nj or len(joint_vel) != nj:
        raise ValidationError("joint_pos", "length must match joint count")

    x = np.zeros(nb)
    z = np.zeros(nb)
    th = np.zeros(nb)
    vx = np.zeros(nb)
    vz = np.zeros(nb)
    om = np.zeros(nb)

    poses = fk_robot(world.robot, root_pos, root_ori, joint_pos)
    for i, (px, pz, pth) in enumerate(poses):
        x[i], z[i], th[i] = px, pz, pth

    # link velocities from root twist + joint rates (rigid chain propagation)
    om_b = [0.0] * (1 + len(world.robot.links))
    vx_b = [0.0] * len(om_b)
    vz_b = [0.0] * len(om_b)
    vx_b[0], vz_b[0], om_b[0] = root_vel
    name_idx = {world.bodies[i].name: i for i in range(len(om_b))}
    for j, qd in zip(world.robot.joints, joint_vel):
        p = name_idx[j.parent]
        c = name_idx[j.child]
        px, pz, pth = poses[p]
        cth = math.cos(pth)
        sth = math.sin(pth)
        ax = px + cth * j.anchor[0] - sth * j.anchor[1]
        az = pz + sth * j.anchor[0] + cth * j.anchor[1]
        # velocity of the anchor point carried by the parent
        vax = vx_b[p] - om_b[p] * (az - pz)
        vaz = vz_b[p] + om_b[p] * (ax - px)
        om_b[c] = om_b[p] + qd
        cx, cz, _ = poses[c]
        # v_com = v_anchor + omega x (com - anchor); 2D cross:
        # omega x r = (-omega*rz, omega*rx)
        vx_b[c] = vax - om_b[c] * (cz - az)
        vz_b[c] = vaz + om_b[c] * (cx - ax)
    for i in range(len(om_b)):
        vx[i], vz[i], om[i] = vx_b[i], vz_b[i], om_b[i]

    if world.object_body is not None:
        ob = world.object_body
        x[ob], z[ob], th[ob] = object_pos[0], object_pos[1], object_ori
        if world.object_model.kind != "fixed":
            vx[ob], vz[ob], om[ob] = object_vel

    return SimState(
        x=x, z=z, theta=th, vx=vx, vz=vz, omega=om,
        joint_pos=np.asarray(joint_pos, dtype=float).copy(),
        joint_vel=np.asarray(joint_vel, dtype=float).copy(),
        applied_torque=np.zeros(nj),
    )


def body_pose(world: WorldModel, state: SimState, body_id) -> tuple[tuple[float, float], float]:
    """World-frame ((x, z), theta) of a body, by name or index."""

    if isinstance(body_id, str):
        body_id = world.body_id(body_id)
    if not 0 <= body_id < len(world.bodies):
        raise KeyError(f"unknown body index {body_id}")
    return ((float(state.x[body_id]), float(state.z[body_id])),
            float(state.theta[body_id]))
