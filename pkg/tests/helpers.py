"""Shared model builders for the test suite."""

import math

from cotrack.sim_core import (
    BodySpec,
    Box,
    Circle,
    ContactAnchor,
    HingeSpec,
    JointSpec,
    ObjectModel,
    RobotModel,
)


def free_ball(name="ball", r=0.1, mass=1.0):
    return RobotModel(
        base=BodySpec(name, Circle(r), mass, 0.5 * mass * r * r),
        links=(), joints=(), eef_bodies=(),
    )


def chain_robot(n_links=2, kp=0.0, kd=0.0, limits=(-2.5, 2.5),
                torque_limit=50.0):
    """Floating base with ``n_links`` circle links hanging below it."""

    base = BodySpec("base", Circle(0.1), 2.0, 0.01)
    links = []
    joints = []
    parent = "base"
    for i in range(n_links):
        name = f"link{i}"
        links.append(BodySpec(name, Circle(0.04), 0.5, 0.001))
        joints.append(JointSpec(
            parent, name,
            anchor=(0.0, -0.1 if i == 0 else -0.15),
            child_anchor=(0.0, 0.15),
            limits=limits, torque_limit=torque_limit, kp=kp, kd=kd,
        ))
        parent = name
    return RobotModel(base=base, links=tuple(links), joints=tuple(joints),
                      eef_bodies=(f"link{n_links - 1}",))


def pendulum_object(length=0.5, amp=0.05, pivot=(0.0, 2.0)):
    obj = ObjectModel(
        kind="hinged",
        body=BodySpec("bob", Circle(0.02), 1.0, 1e-6),
        hinge=HingeSpec(world_anchor=pivot, local_anchor=(0.0, length),
                        axis_limits=(-3.0, 3.0)),
    )
    px = pivot[0] + math.sin(amp) * length
    pz = pivot[1] - math.cos(amp) * length
    return obj, (px, pz), amp


def box_object(name="crate", half=(0.15, 0.15), mass=2.0, kind="free",
               anchors=(), friction=0.8):
    hx, hz = half
    inertia = mass * (hx * hx + hz * hz) / 3.0
    return ObjectModel(
        kind=kind,
        body=BodySpec(name, Box(half), mass, inertia, friction_coeff=friction),
        contact_anchors=tuple(ContactAnchor(i, o) for i, o in anchors),
    )
