"""Generate the bundled task data (robot, objects, reference motions).

Run from the repository root:

    python3 tools/make_tasks.py

Writes JSON files into src/cotrack/tasks/data/ and sanity-checks each task:
IK residuals on every keyframe, plus a zero-action rollout that must track
the reference without a failure termination.
"""

from __future__ import annotations

import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from cotrack.env import CoTrackEnv, EnvConfig
from cotrack.refmotion import (
    ContactWindow,
    Keyframe,
    KeyframeScript,
    anchor_world,
    generate_from_keyframes,
    serialize_motion,
)
from cotrack.sim_core import (
    BodySpec,
    Box,
    Circle,
    ContactAnchor,
    HingeSpec,
    JointSpec,
    ObjectModel,
    RobotModel,
    build_world,
    fk_robot,
)
from cotrack.sim_core.io import object_to_json, robot_to_json

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "cotrack",
                        "tasks", "data")

HAND_RADIUS = 0.06


def box_inertia(mass, half):
    return mass * (half[0] ** 2 + half[1] ** 2) / 3.0


def make_pusher() -> RobotModel:
    """Wide grounded base, bending torso, two arm links, circular hand."""

    # Link inertias include a rotor/armature contribution well above the
    # bare-shape values: with explicit PD torques each joint needs
    # sqrt(kp / I) * dt comfortably below 1 to integrate stably at 120 Hz.
    base = BodySpec("base", Box((0.30, 0.15)), 8.0,
                    box_inertia(8.0, (0.30, 0.15)), friction_coeff=0.9)
    torso = BodySpec("torso", Box((0.07, 0.20)), 2.0, 0.30)
    upper = BodySpec("upper_arm", Box((0.18, 0.04)), 0.7, 0.10)
    fore = BodySpec("forearm", Box((0.15, 0.03)), 0.5, 0.06)
    hand = BodySpec("hand", Circle(HAND_RADIUS), 0.3, 0.06,
                    friction_coeff=0.9)
    joints = (
        JointSpec("base", "torso", anchor=(0.0, 0.15),
                  child_anchor=(0.0, -0.20), limits=(-1.3, 1.3),
                  torque_limit=150.0, kp=600.0, kd=18.0),
        JointSpec("torso", "upper_arm", anchor=(0.0, 0.20),
                  child_anchor=(-0.18, 0.0), limits=(-2.0, 2.0),
                  torque_limit=80.0, kp=200.0, kd=6.0),
        JointSpec("upper_arm", "forearm", anchor=(0.18, 0.0),
                  child_anchor=(-0.15, 0.0), limits=(-2.4, 2.4),
                  torque_limit=60.0, kp=100.0, kd=3.0),
        JointSpec("forearm", "hand", anchor=(0.15, 0.0),
                  child_anchor=(-0.08, 0.0), limits=(-1.5, 1.5),
                  torque_limit=30.0, kp=40.0, kd=1.5),
    )
    return RobotModel(base=base, links=(torso, upper, fore, hand),
                      joints=joints, eef_bodies=("hand",),
                      feet_bodies=("base",),
                      default_joint_pos=(0.0, 0.0, 0.0, 0.0))


# ------------------------------------------------------------------------- IK

def hand_pos(robot, root, joints):
    poses = fk_robot(robot, root, 0.0, joints)
    return np.array(poses[-1][:2])  # hand is the last link


def solve_ik(robot, root, target, q0, nominal, iters=200, damping=0.05,
             posture_weight=0.02):
    """Damped least-squares IK for the hand center with posture bias."""

    q = np.array(q0, dtype=float)
    target = np.asarray(target, dtype=float)
    limits = [j.limits for j in robot.joints]
    for _ in range(iters):
        p = hand_pos(robot, root, q)
        r = target - p
        J = np.zeros((2, len(q)))
        eps = 1e-6
        for k in range(len(q)):
            dq = q.copy()
            dq[k] += eps
            J[:, k] = (hand_pos(robot, root, dq) - p) / eps
        y = np.linalg.solve(J @ J.T + damping * np.eye(2), r)
        step = J.T @ y + posture_weight * (np.asarray(nominal) - q)
        step = np.clip(step, -0.15, 0.15)
        q = q + step
        for k, (lo, hi) in enumerate(limits):
            q[k] = min(hi, max(lo, q[k]))
        if np.linalg.norm(target - hand_pos(robot, root, q)) < 1e-4:
            break
    return q, float(np.linalg.norm(target - hand_pos(robot, root, q)))


# ----------------------------------------------------------------- the tasks

def toppling_box_pose(pivot, c0, phi):
    """Pose of a box rotated clockwise by phi about a ground corner."""

    dx, dz = c0[0] - pivot[0], c0[1] - pivot[1]
    c, s = math.cos(phi), math.sin(phi)
    # clockwise rotation: R(-phi)
    return ((pivot[0] + c * dx + s * dz, pivot[1] - s * dx + c * dz), -phi)


def task_push_box(robot):
    # A slender crate toppled quasistatically: the hand has to follow the
    # face ~0.07 m past its rest plane to carry the crate through the
    # tipping angle; anything that stops short only rocks it and the crate
    # settles back upright.
    half = (0.05, 0.35)
    mass = 2.0
    c0 = (1.02, 0.35)
    pivot = (c0[0] + half[0], 0.0)
    obj = ObjectModel(
        kind="free",
        body=BodySpec("crate", Box(half), mass, box_inertia(mass, half),
                      friction_coeff=0.6),
        contact_anchors=(ContactAnchor("push", (-half[0], 0.0)),),
    )
    root = (0.62, 0.15)

    # slow push from rest to just past the tipping angle (atan(0.05/0.35)
    # ~ 0.142 rad), then the hand retreats and the crate falls on its own
    phi_star = 0.16
    phases = [(0.0, 0.0), (0.8, 0.0), (1.1, phi_star / 2), (1.4, phi_star),
              (1.7, 0.9), (2.0, 1.5708), (3.0, 1.5708)]
    # the hand keeps following the face until t=1.4, but the *flagged*
    # window ends once the crate is committed to tipping, so neither the
    # contact-loss check nor the interaction term chases the falling crate
    hand_follow = (0.8, 1.4)
    contact_times = [0.8, 1.2]

    keyframes = []
    q = np.array([0.2, -0.5, 0.9, 0.2])
    nominal = np.array([0.4, 0.2, 0.8, 0.0])
    resids = []
    for t, phi in phases:
        (opos, oori) = toppling_box_pose(pivot, c0, phi)
        if hand_follow[0] <= t <= hand_follow[1]:
            aw = anchor_world(obj, opos, oori, "push")
            # stand off along the rotated outward face normal (-x of the box)
            c, s = math.cos(oori), math.sin(oori)
            standoff = HAND_RADIUS + 0.015
            target = (aw[0] - c * standoff, aw[1] - s * standoff)
        else:
            target = (0.85, 0.50)
        q, res = solve_ik(robot, root, target, q, nominal)
        resids.append(res)
        keyframes.append(Keyframe(time=t, robot_root_pos=root,
                                  robot_root_ori=0.0, joint_pos=tuple(q),
                                  object_pos=opos, object_ori=oori))
    windows = (ContactWindow(eef_index=0, start=contact_times[0],
                             end=contact_times[1], anchor_id="push"),)
    script = KeyframeScript(keyframes=tuple(keyframes),
                            contact_windows=windows, n_eefs=1,
                            interpolation="linear")
    motion = generate_from_keyframes(
        script, rate=30.0, robot_model_id="pusher", object_model_id="crate",
        name="push_box", valid_anchor_ids=("push",))
    return obj, motion, max(resids)


def flap_pose(hinge: HingeSpec, theta):
    ori = hinge.rest_ori + theta
    c, s = math.cos(ori), math.sin(ori)
    lx, lz = hinge.local_anchor
    return ((hinge.world_anchor[0] - (c * lx - s * lz),
             hinge.world_anchor[1] - (s * lx + c * lz)), ori)


def task_door_hinge(robot):
    half = (0.04, 0.30)
    mass = 1.0
    hinge = HingeSpec(world_anchor=(1.05, 1.15), local_anchor=(0.0, 0.30),
                      axis_limits=(-0.15, 1.4), rest_ori=0.0)
    obj = ObjectModel(
        kind="hinged",
        body=BodySpec("flap", Box(half), mass, box_inertia(mass, half),
                      friction_coeff=0.5),
        hinge=hinge,
        contact_anchors=(ContactAnchor("push", (-half[0], -0.15)),),
    )
    root = (0.60, 0.15)

    phases = [(0.0, 0.0), (0.7, 0.0), (1.8, 0.40), (3.0, 0.70)]
    contact = (0.7, 3.0)
    keyframes = []
    q = np.array([0.2, -0.3, 0.8, 0.2])
    nominal = np.array([0.3, 0.0, 0.8, 0.0])
    resids = []
    for t, theta in phases:
        opos, oori = flap_pose(hinge, theta)
        aw = anchor_world(obj, opos, oori, "push")
        c, s = math.cos(oori), math.sin(oori)
        standoff = HAND_RADIUS + 0.015
        target = (aw[0] - c * standoff, aw[1] - s * standoff)
        if t < contact[0]:
            target = (target[0] - 0.10, target[1] - 0.05)
        q, res = solve_ik(robot, root, target, q, nominal)
        resids.append(res)
        keyframes.append(Keyframe(time=t, robot_root_pos=root,
                                  robot_root_ori=0.0, joint_pos=tuple(q),
                                  object_pos=opos, object_ori=oori,
                                  object_joint=theta))
    windows = (ContactWindow(eef_index=0, start=contact[0], end=contact[1],
                             anchor_id="push"),)
    script = KeyframeScript(keyframes=tuple(keyframes),
                            contact_windows=windows, n_eefs=1,
                            interpolation="linear")
    motion = generate_from_keyframes(
        script, rate=30.0, robot_model_id="pusher", object_model_id="flap",
        name="door_hinge", valid_anchor_ids=("push",))
    return obj, motion, max(resids)


def lever_pose(hinge: HingeSpec, theta):
    return flap_pose(hinge, theta)


def task_kneel_lift(robot):
    half = (0.25, 0.03)
    mass = 0.8
    hinge = HingeSpec(world_anchor=(1.00, 0.10), local_anchor=(-0.25, 0.0),
                      axis_limits=(-0.05, 1.0), rest_ori=0.0)
    obj = ObjectModel(
        kind="hinged",
        body=BodySpec("lever", Box(half), mass, box_inertia(mass, half),
                      friction_coeff=0.6),
        hinge=hinge,
        contact_anchors=(ContactAnchor("lift", (0.15, -half[1])),),
    )
    root = (0.62, 0.15)

    # kneel (deep waist bend) while lifting the lever from below
    phases = [(0.0, 0.0), (0.8, 0.0), (2.0, 0.35), (3.0, 0.60)]
    contact = (0.8, 3.0)
    keyframes = []
    q = np.array([0.5, 0.6, 0.6, 0.2])
    nominal = np.array([0.9, 0.7, 0.6, 0.0])
    resids = []
    for t, theta in phases:
        opos, oori = lever_pose(hinge, theta)
        aw = anchor_world(obj, opos, oori, "lift")
        c, s = math.cos(oori), math.sin(oori)
        standoff = HAND_RADIUS + 0.015
        # below the underside face: outward normal is the rotated -z axis
        target = (aw[0] + s * standoff, aw[1] - c * standoff)
        if t < contact[0]:
            target = (target[0] - 0.08, target[1] - 0.04)
        q, res = solve_ik(robot, root, target, q, nominal)
        resids.append(res)
        keyframes.append(Keyframe(time=t, robot_root_pos=root,
                                  robot_root_ori=0.0, joint_pos=tuple(q),
                                  object_pos=opos, object_ori=oori,
                                  object_joint=theta))
    windows = (ContactWindow(eef_index=0, start=contact[0], end=contact[1],
                             anchor_id="lift"),)
    script = KeyframeScript(keyframes=tuple(keyframes),
                            contact_windows=windows, n_eefs=1,
                            interpolation="linear")
    motion = generate_from_keyframes(
        script, rate=30.0, robot_model_id="pusher", object_model_id="lever",
        name="kneel_lift", valid_anchor_ids=("lift",))
    return obj, motion, max(resids)


# -------------------------------------------------------------------- checks

def rollout_check(robot, obj, motion, steps=120):
    """Zero-action rollout from phase 0; report how far it gets."""

    world = build_world(robot, obj)
    cfg = EnvConfig()
    env = CoTrackEnv(world, motion, cfg, seed=0, eval_mode=True)
    env.reset()
    reasons = []
    n = 0
    while n < steps:
        obs, reward, term, info = env.step(np.zeros(env.action_size))
        n += 1
        if term.terminated:
            reasons.append((term.reason, env.step_count))
            if term.is_failure:
                break
            env.reset()
    return n, reasons


def main():
    os.makedirs(DATA_DIR, exist_ok=True)
    robot = make_pusher()
    with open(os.path.join(DATA_DIR, "pusher_robot.json"), "w") as f:
        f.write(robot_to_json(robot))

    builders = {"push_box": task_push_box, "door_hinge": task_door_hinge,
                "kneel_lift": task_kneel_lift}
    for name, build in builders.items():
        obj, motion, resid = build(robot)
        print(f"{name}: max IK residual {resid:.4f} m")
        if resid > 0.05:
            raise SystemExit(f"{name}: keyframe IK did not converge")
        n, reasons = rollout_check(robot, obj, motion)
        print(f"{name}: zero-action rollout ran {n} steps, ends: {reasons}")
        with open(os.path.join(DATA_DIR, f"{name}_object.json"), "w") as f:
            f.write(object_to_json(obj))
        with open(os.path.join(DATA_DIR, f"{name}_motion.json"), "w") as f:
            f.write(serialize_motion(motion))
    print("wrote", DATA_DIR)


if __name__ == "__main__":
    main()
