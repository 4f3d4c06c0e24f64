"""Body, joint, robot and object descriptions for the planar simulator.

All quantities are SI: meters, kilograms, radians, seconds. The simulation
plane is x (forward) / z (up); positive rotation is counter-clockwise.
Body frames have their origin at the center of mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class ValidationError(ValueError):
    """Raised when a model or state violates a structural invariant.

    ``path`` names the offending field, e.g. ``"links[2].mass"``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Circle:
    radius: float


@dataclass(frozen=True)
class Box:
    half_extents: tuple[float, float]


Shape = Circle | Box


@dataclass(frozen=True)
class BodySpec:
    name: str
    shape: Shape
    mass: float
    inertia: float  # about COM
    friction_coeff: float = 0.8
    restitution: float = 0.0


@dataclass(frozen=True)
class JointSpec:
    """Revolute joint attaching ``child`` to ``parent``.

    ``anchor`` is the pivot expressed in the parent body frame,
    ``child_anchor`` the same point in the child body frame. At joint
    angle zero the two body frames share their orientation.
    """

    parent: str
    child: str
    anchor: tuple[float, float]
    child_anchor: tuple[float, float] = (0.0, 0.0)
    limits: tuple[float, float] = (-math.pi, math.pi)
    torque_limit: float = 100.0
    kp: float = 100.0
    kd: float = 5.0


@dataclass(frozen=True)
class RobotModel:
    base: BodySpec
    links: tuple[BodySpec, ...]
    joints: tuple[JointSpec, ...]
    eef_bodies: tuple[str, ...]
    feet_bodies: tuple[str, ...] = ()
    default_joint_pos: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ContactAnchor:
    id: str
    offset: tuple[float, float]  # object local frame


@dataclass(frozen=True)
class HingeSpec:
    world_anchor: tuple[float, float]
    local_anchor: tuple[float, float]
    axis_limits: tuple[float, float]
    rest_ori: float = 0.0


@dataclass(frozen=True)
class ObjectModel:
    kind: str  # "free" | "hinged" | "fixed"
    body: BodySpec
    contact_anchors: tuple[ContactAnchor, ...] = ()
    hinge: HingeSpec | None = None


def _check(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ValidationError(path, msg)


def validate_body(spec: BodySpec, path: str, dynamic: bool = True) -> None:
    if dynamic:
        _check(spec.mass > 0, f"{path}.mass", "must be > 0 for dynamic bodies")
        _check(spec.inertia > 0, f"{path}.inertia", "must be > 0")
    _check(0.0 <= spec.friction_coeff <= 2.0, f"{path}.friction_coeff",
           "must lie in [0, 2]")
    _check(0.0 <= spec.restitution <= 1.0, f"{path}.restitution",
           "must lie in [0, 1]")
    if isinstance(spec.shape, Circle):
        _check(spec.shape.radius > 0, f"{path}.shape.radius", "must be > 0")
    elif isinstance(spec.shape, Box):
        hx, hz = spec.shape.half_extents
        _check(hx > 0 and hz > 0, f"{path}.shape.half_extents", "must be > 0")
    else:
        raise ValidationError(f"{path}.shape", "unknown shape kind")


def validate_robot(robot: RobotModel) -> None:
    validate_body(robot.base, "base")
    names = [robot.base.name]
    for i, link in enumerate(robot.links):
        validate_body(link, f"links[{i}]")
        _check(link.name not in names, f"links[{i}].name",
               f"duplicate body name {link.name!r}")
        names.append(link.name)

    # joint graph must be a tree rooted at base: every link has exactly one
    # joint whose child it is, and parents appear earlier in the chain
    children_seen: set[str] = set()
    for i, j in enumerate(robot.joints):
        _check(j.parent in names, f"joints[{i}].parent",
               f"unknown body {j.parent!r}")
        _check(j.child in names, f"joints[{i}].child",
               f"unknown body {j.child!r}")
        _check(j.child != j.parent, f"joints[{i}]",
               "child must differ from parent")
        _check(j.child != robot.base.name, f"joints[{i}].child",
               "base cannot be a joint child")
        _check(j.child not in children_seen, f"joints[{i}].child",
               f"{j.child!r} already has a parent joint")
        children_seen.add(j.child)
        lo, hi = j.limits
        _check(lo < hi, f"joints[{i}].limits", "lo must be < hi")
        _check(j.torque_limit > 0, f"joints[{i}].torque_limit", "must be > 0")
        _check(j.kp >= 0 and j.kd >= 0, f"joints[{i}]", "gains must be >= 0")

    link_names = {l.name for l in robot.links}
    _check(children_seen == link_names, "joints",
           "every link must be the child of exactly one joint")

    # reachability from base rules out disconnected cycles
    reachable = {robot.base.name}
    pending = list(robot.joints)
    progress = True
    while pending and progress:
        progress = False
        for j in list(pending):
            if j.parent in reachable:
                reachable.add(j.child)
                pending.remove(j)
                progress = True
    _check(not pending, "joints", "joint graph is not a tree rooted at base")

    if robot.default_joint_pos is not None:
        _check(len(robot.default_joint_pos) == len(robot.joints),
               "default_joint_pos", "length must match joint count")
    for i, e in enumerate(robot.eef_bodies):
        _check(e in link_names, f"eef_bodies[{i}]", f"unknown link {e!r}")
    for i, f in enumerate(robot.feet_bodies):
        # the base itself may serve as the ground-contact body
        _check(f in link_names or f == robot.base.name,
               f"feet_bodies[{i}]", f"unknown body {f!r}")


def validate_object(obj: ObjectModel) -> None:
    _check(obj.kind in ("free", "hinged", "fixed"), "kind",
           "must be 'free', 'hinged' or 'fixed'")
    validate_body(obj.body, "body", dynamic=obj.kind != "fixed")
    if obj.kind == "hinged":
        _check(obj.hinge is not None, "hinge", "required for hinged objects")
        lo, hi = obj.hinge.axis_limits
        _check(lo < hi, "hinge.axis_limits", "lo must be < hi")
    ids = set()
    for i, a in enumerate(obj.contact_anchors):
        _check(a.id not in ids, f"contact_anchors[{i}].id",
               f"duplicate anchor id {a.id!r}")
        ids.add(a.id)
