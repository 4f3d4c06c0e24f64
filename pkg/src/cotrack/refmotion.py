"""Structured reference-motion dataset: generation, files, sampling.

A motion is an ordered list of frames, each carrying the robot root pose,
joint positions, object pose (plus joint angle for articulated objects),
per-end-effector contact flags and the object-local anchor each flagged
end-effector should touch. Motions are produced from keyframe scripts and
stored as JSON documents (``"motion_version": 1``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from .sim_core import ObjectModel, RobotModel, fk_robot
from .sim_core.types import ValidationError

MOTION_VERSION = 1


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""

    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def lerp_angle(a: float, b: float, t: float) -> float:
    """Shortest-arc interpolation; a tie at exactly pi breaks positive."""

    d = wrap_angle(b - a)
    return a + d * t


@dataclass(frozen=True)
class ReferenceFrame:
    robot_root_pos: tuple[float, float]
    robot_root_ori: float
    joint_pos: tuple[float, ...]
    object_pos: tuple[float, float]
    object_ori: float
    object_joint: float | None
    contact_flags: tuple[int, ...]
    contact_anchor_ids: tuple[str | None, ...]


@dataclass(frozen=True)
class ReferenceMotion:
    frames: tuple[ReferenceFrame, ...]
    frame_rate: float
    robot_model_id: str
    object_model_id: str
    name: str

    @property
    def duration(self) -> float:
        return (len(self.frames) - 1) / self.frame_rate


@dataclass(frozen=True)
class Keyframe:
    time: float
    robot_root_pos: tuple[float, float]
    robot_root_ori: float
    joint_pos: tuple[float, ...]
    object_pos: tuple[float, float]
    object_ori: float
    object_joint: float | None = None


@dataclass(frozen=True)
class ContactWindow:
    eef_index: int
    start: float
    end: float
    anchor_id: str


@dataclass(frozen=True)
class KeyframeScript:
    keyframes: tuple[Keyframe, ...]
    contact_windows: tuple[ContactWindow, ...]
    n_eefs: int
    interpolation: str = "linear"  # "linear" | "cubic"


def _validate_frame(frame: ReferenceFrame, idx: int, n_joints: int | None) -> None:
    path = f"frames[{idx}]"
    if n_joints is not None and len(frame.joint_pos) != n_joints:
        raise ValidationError(f"{path}.joint_pos",
                              f"expected {n_joints} joints, got {len(frame.joint_pos)}")
    scalars = [*frame.robot_root_pos, frame.robot_root_ori, *frame.joint_pos,
               *frame.object_pos, frame.object_ori]
    if frame.object_joint is not None:
        scalars.append(frame.object_joint)
    for v in scalars:
        if not math.isfinite(v):
            raise ValidationError(path, "non-finite value")
    if len(frame.contact_flags) != len(frame.contact_anchor_ids):
        raise ValidationError(f"{path}.contact_flags",
                              "flag/anchor arrays differ in length")
    for e, (flag, anchor) in enumerate(zip(frame.contact_flags,
                                           frame.contact_anchor_ids)):
        if flag not in (0, 1):
            raise ValidationError(f"{path}.contact_flags[{e}]",
                                  "flags must be 0 or 1")
        if flag == 1 and anchor is None:
            raise ValidationError(f"{path}.contact_anchor_ids[{e}]",
                                  "contact flag set but no anchor id")


def validate_motion(motion: ReferenceMotion) -> None:
    if len(motion.frames) < 2:
        raise ValidationError("frames", "a motion needs at least 2 frames")
    if not motion.frame_rate > 0:
        raise ValidationError("frame_rate", "must be > 0")
    n_joints = len(motion.frames[0].joint_pos)
    n_eefs = len(motion.frames[0].contact_flags)
    for i, f in enumerate(motion.frames):
        _validate_frame(f, i, n_joints)
        if len(f.contact_flags) != n_eefs:
            raise ValidationError(f"frames[{i}].contact_flags",
                                  f"expected {n_eefs} flags, got {len(f.contact_flags)}")


def _interp_scalar(times, values, t, mode):
    n = len(times)
    if t <= times[0]:
        return values[0]
    if t >= times[-1]:
        return values[-1]
    k = 0
    while times[k + 1] < t:
        k += 1
    u = (t - times[k]) / (times[k + 1] - times[k])
    if mode == "linear":
        return values[k] + (values[k + 1] - values[k]) * u
    # Catmull-Rom with clamped ends
    p0 = values[max(0, k - 1)]
    p1 = values[k]
    p2 = values[k + 1]
    p3 = values[min(n - 1, k + 2)]
    u2 = u * u
    u3 = u2 * u
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * u
                  + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2
                  + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3)


def _interp_angle(times, values, t, mode):
    # unwrap onto a continuous branch, then interpolate as a scalar
    unwrapped = [values[0]]
    for v in values[1:]:
        unwrapped.append(unwrapped[-1] + wrap_angle(v - unwrapped[-1]))
    return _interp_scalar(times, unwrapped, t, mode)


def generate_from_keyframes(
    script: KeyframeScript,
    rate: float,
    robot_model_id: str = "robot",
    object_model_id: str = "object",
    name: str = "motion",
    valid_anchor_ids: tuple[str, ...] | None = None,
) -> ReferenceMotion:
    """Sample a keyframe script into a frame-by-frame reference motion.

    Continuous channels use the script's interpolation mode; orientations
    interpolate along the shortest arc. Contact flags are 1 exactly inside
    their (closed) windows.
    """

    if not script.keyframes:
        raise ValidationError("keyframes", "script has no keyframes")
    if not rate > 0:
        raise ValidationError("rate", "must be > 0")
    if script.interpolation not in ("linear", "cubic"):
        raise ValidationError("interpolation", "must be 'linear' or 'cubic'")
    times = [k.time for k in script.keyframes]
    for i in range(1, len(times)):
        if times[i] <= times[i - 1]:
            raise ValidationError(f"keyframes[{i}].time",
                                  "times must be strictly increasing")
    duration = times[-1] - times[0]
    n_joints = len(script.keyframes[0].joint_pos)
    for i, k in enumerate(script.keyframes):
        if len(k.joint_pos) != n_joints:
            raise ValidationError(f"keyframes[{i}].joint_pos",
                                  "inconsistent joint count")
    for i, w in enumerate(script.contact_windows):
        if not 0 <= w.eef_index < script.n_eefs:
            raise ValidationError(f"contact_windows[{i}].eef_index",
                                  "out of range")
        if w.start > w.end:
            raise ValidationError(f"contact_windows[{i}]", "start > end")
        if w.start < times[0] - 1e-9 or w.end > times[-1] + 1e-9:
            raise ValidationError(f"contact_windows[{i}]",
                                  "window outside the script duration")
        if valid_anchor_ids is not None and w.anchor_id not in valid_anchor_ids:
            raise ValidationError(f"contact_windows[{i}].anchor_id",
                                  f"unknown anchor {w.anchor_id!r}")

    mode = script.interpolation
    has_obj_joint = script.keyframes[0].object_joint is not None
    n_frames = int(math.floor(duration * rate + 1e-9)) + 1
    frames = []
    for f in range(n_frames):
        t = times[0] + f / rate
        flags = [0] * script.n_eefs
        anchors: list[str | None] = [None] * script.n_eefs
        for w in script.contact_windows:
            if w.start - 1e-9 <= t <= w.end + 1e-9:
                flags[w.eef_index] = 1
                anchors[w.eef_index] = w.anchor_id
        frames.append(ReferenceFrame(
            robot_root_pos=(
                _interp_scalar(times, [k.robot_root_pos[0] for k in script.keyframes], t, mode),
                _interp_scalar(times, [k.robot_root_pos[1] for k in script.keyframes], t, mode),
            ),
            robot_root_ori=_interp_angle(times, [k.robot_root_ori for k in script.keyframes], t, mode),
            joint_pos=tuple(
                _interp_scalar(times, [k.joint_pos[i] for k in script.keyframes], t, mode)
                for i in range(n_joints)
            ),
            object_pos=(
                _interp_scalar(times, [k.object_pos[0] for k in script.keyframes], t, mode),
                _interp_scalar(times, [k.object_pos[1] for k in script.keyframes], t, mode),
            ),
            object_ori=_interp_angle(times, [k.object_ori for k in script.keyframes], t, mode),
            object_joint=(
                _interp_scalar(times, [k.object_joint for k in script.keyframes], t, mode)
                if has_obj_joint else None
            ),
            contact_flags=tuple(flags),
            contact_anchor_ids=tuple(anchors),
        ))
    motion = ReferenceMotion(
        frames=tuple(frames), frame_rate=rate,
        robot_model_id=robot_model_id, object_model_id=object_model_id,
        name=name,
    )
    validate_motion(motion)
    return motion


# ------------------------------------------------------------------ sampling

def sample(motion: ReferenceMotion, phase: float) -> ReferenceFrame:
    """Frame interpolated at continuous index ``phase * (N - 1)``.

    Binary channels (contact flags, anchor ids) come from the nearest frame.
    """

    if not 0.0 <= phase <= 1.0:
        raise ValueError(f"phase must lie in [0, 1], got {phase}")
    n = len(motion.frames)
    u = phase * (n - 1)
    i0 = min(int(math.floor(u)), n - 2)
    frac = u - i0
    a = motion.frames[i0]
    b = motion.frames[i0 + 1]
    nearest = motion.frames[int(round(u))]
    if frac == 0.0:
        return a
    lerp = lambda x, y: x + (y - x) * frac
    return ReferenceFrame(
        robot_root_pos=(lerp(a.robot_root_pos[0], b.robot_root_pos[0]),
                        lerp(a.robot_root_pos[1], b.robot_root_pos[1])),
        robot_root_ori=lerp_angle(a.robot_root_ori, b.robot_root_ori, frac),
        joint_pos=tuple(lerp(x, y) for x, y in zip(a.joint_pos, b.joint_pos)),
        object_pos=(lerp(a.object_pos[0], b.object_pos[0]),
                    lerp(a.object_pos[1], b.object_pos[1])),
        object_ori=lerp_angle(a.object_ori, b.object_ori, frac),
        object_joint=(None if a.object_joint is None
                      else lerp(a.object_joint, b.object_joint)),
        contact_flags=nearest.contact_flags,
        contact_anchor_ids=nearest.contact_anchor_ids,
    )


def contact_points_world(frame: ReferenceFrame, obj: ObjectModel) -> list[tuple[float, float]]:
    """World positions of the anchors active in this frame (flag order)."""

    anchors = {a.id: a.offset for a in obj.contact_anchors}
    c = math.cos(frame.object_ori)
    s = math.sin(frame.object_ori)
    out = []
    for flag, aid in zip(frame.contact_flags, frame.contact_anchor_ids):
        if flag != 1:
            continue
        if aid not in anchors:
            raise KeyError(f"unknown contact anchor {aid!r}")
        ox, oz = anchors[aid]
        out.append((frame.object_pos[0] + c * ox - s * oz,
                    frame.object_pos[1] + s * ox + c * oz))
    return out


def anchor_world(obj: ObjectModel, object_pos, object_ori, anchor_id: str):
    anchors = {a.id: a.offset for a in obj.contact_anchors}
    if anchor_id not in anchors:
        raise KeyError(f"unknown contact anchor {anchor_id!r}")
    ox, oz = anchors[anchor_id]
    c, s = math.cos(object_ori), math.sin(object_ori)
    return (object_pos[0] + c * ox - s * oz,
            object_pos[1] + s * ox + c * oz)


# ------------------------------------------------------------- serialization

def serialize_motion(motion: ReferenceMotion) -> str:
    doc = {
        "motion_version": MOTION_VERSION,
        "name": motion.name,
        "frame_rate": motion.frame_rate,
        "robot_model_id": motion.robot_model_id,
        "object_model_id": motion.object_model_id,
        "frames": [
            {
                "robot_root_pos": list(f.robot_root_pos),
                "robot_root_ori": f.robot_root_ori,
                "joint_pos": list(f.joint_pos),
                "object_pos": list(f.object_pos),
                "object_ori": f.object_ori,
                "object_joint": f.object_joint,
                "contact_flags": list(f.contact_flags),
                "contact_anchor_ids": list(f.contact_anchor_ids),
            }
            for f in motion.frames
        ],
    }
    return json.dumps(doc, indent=1)


def parse_motion(data) -> ReferenceMotion:
    """Parse and fully validate a motion document (str or bytes)."""

    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ValidationError("<document>", f"malformed JSON: {e}") from e
    if doc.get("motion_version") != MOTION_VERSION:
        raise ValidationError(
            "motion_version",
            f"expected {MOTION_VERSION}, got {doc.get('motion_version')!r}")
    frames = []
    for i, fd in enumerate(doc.get("frames", [])):
        path = f"frames[{i}]"
        try:
            frame = ReferenceFrame(
                robot_root_pos=tuple(float(v) for v in fd["robot_root_pos"]),
                robot_root_ori=float(fd["robot_root_ori"]),
                joint_pos=tuple(float(v) for v in fd["joint_pos"]),
                object_pos=tuple(float(v) for v in fd["object_pos"]),
                object_ori=float(fd["object_ori"]),
                object_joint=(None if fd.get("object_joint") is None
                              else float(fd["object_joint"])),
                contact_flags=tuple(int(v) for v in fd["contact_flags"]),
                contact_anchor_ids=tuple(fd["contact_anchor_ids"]),
            )
        except KeyError as e:
            raise ValidationError(f"{path}.{e.args[0]}", "missing field") from e
        except (TypeError, ValueError) as e:
            raise ValidationError(path, f"bad value: {e}") from e
        frames.append(frame)
    motion = ReferenceMotion(
        frames=tuple(frames),
        frame_rate=float(doc.get("frame_rate", 0.0)),
        robot_model_id=doc.get("robot_model_id", ""),
        object_model_id=doc.get("object_model_id", ""),
        name=doc.get("name", ""),
    )
    validate_motion(motion)
    return motion


# ----------------------------------------------------------------- corruption

def _chain_to_eef(robot: RobotModel, eef_body: str) -> list[int]:
    """Indices of the joints on the path from the base to ``eef_body``."""

    parent_of = {j.child: (j.parent, k) for k, j in enumerate(robot.joints)}
    chain = []
    cur = eef_body
    while cur != robot.base.name:
        if cur not in parent_of:
            raise KeyError(f"{eef_body!r} is not connected to the base")
        parent, k = parent_of[cur]
        chain.append(k)
        cur = parent
    chain.reverse()
    return chain


def _eef_world_pos(robot, frame, joint_pos, eef_body):
    poses = fk_robot(robot, frame.robot_root_pos, frame.robot_root_ori,
                     joint_pos)
    names = [robot.base.name] + [l.name for l in robot.links]
    px, pz, _ = poses[names.index(eef_body)]
    return px, pz


def _ik_offset(robot, frame, eef_body, chain, target, iters=80, damping=0.02,
               max_step=0.1):
    """Damped least-squares IK on the chain joints toward ``target``.

    Per-iteration joint steps are clamped to keep near-singular
    configurations from oscillating.
    """

    names = [robot.base.name] + [l.name for l in robot.links]
    q = list(frame.joint_pos)
    for _ in range(iters):
        poses = fk_robot(robot, frame.robot_root_pos, frame.robot_root_ori, q)
        ex, ez = poses[names.index(eef_body)][:2]
        rx, rz = target[0] - ex, target[1] - ez
        if rx * rx + rz * rz < 1e-10:
            break
        # analytic planar Jacobian: dp/dq_j = perp(p_eef - joint_anchor_j)
        cols = []
        for k in chain:
            j = robot.joints[k]
            pp = poses[names.index(j.parent)]
            c, s = math.cos(pp[2]), math.sin(pp[2])
            ax = pp[0] + c * j.anchor[0] - s * j.anchor[1]
            az = pp[1] + s * j.anchor[0] + c * j.anchor[1]
            cols.append((-(ez - az), ex - ax))
        # solve (J J^T + damping I) y = r, dq = J^T y  (2x2 system)
        a11 = sum(cx * cx for cx, _ in cols) + damping
        a22 = sum(cz * cz for _, cz in cols) + damping
        a12 = sum(cx * cz for cx, cz in cols)
        det = a11 * a22 - a12 * a12
        y1 = (a22 * rx - a12 * rz) / det
        y2 = (a11 * rz - a12 * rx) / det
        for i, k in enumerate(chain):
            cx, cz = cols[i]
            dq = cx * y1 + cz * y2
            q[k] += max(-max_step, min(max_step, dq))
    return q


def corrupt_reference(
    motion: ReferenceMotion,
    eef_offset: tuple[float, float],
    window: tuple[float, float],
    robot: RobotModel,
    eef_index: int = 0,
) -> ReferenceMotion:
    """Perturb arm-chain joint targets so the nominal end-effector position
    misses its reference path by ``eef_offset`` inside the phase window.

    The offset ramps up and down smoothly over the window and peaks at the
    window midpoint; frames outside the window are untouched.
    """

    lo, hi = window
    if not (0.0 <= lo < hi <= 1.0):
        raise ValueError(f"window must satisfy 0 <= start < end <= 1, got {window}")
    if eef_offset == (0.0, 0.0):
        return motion
    eef_body = robot.eef_bodies[eef_index]
    chain = _chain_to_eef(robot, eef_body)
    n = len(motion.frames)
    frames = list(motion.frames)
    for i, f in enumerate(frames):
        phase = i / (n - 1)
        if not lo <= phase <= hi:
            continue
        w = math.sin(math.pi * (phase - lo) / (hi - lo))
        ex, ez = _eef_world_pos(robot, f, f.joint_pos, eef_body)
        target = (ex + w * eef_offset[0], ez + w * eef_offset[1])
        q = _ik_offset(robot, f, eef_body, chain, target)
        frames[i] = replace(f, joint_pos=tuple(q))
    return replace(motion, frames=tuple(frames))
