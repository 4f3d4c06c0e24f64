"""JSON (de)serialization of robot and object model files.

Schema version field: ``"model_version": 1``. Units SI, angles radians.
"""

from __future__ import annotations

import json

from .types import (
    BodySpec,
    Box,
    Circle,
    ContactAnchor,
    HingeSpec,
    JointSpec,
    ObjectModel,
    RobotModel,
    ValidationError,
    validate_object,
    validate_robot,
)

MODEL_VERSION = 1


def _shape_to_dict(shape):
    if isinstance(shape, Circle):
        return {"kind": "circle", "radius": shape.radius}
    return {"kind": "box", "half_extents": list(shape.half_extents)}


def _shape_from_dict(d, path):
    kind = d.get("kind")
    if kind == "circle":
        return Circle(radius=float(d["radius"]))
    if kind == "box":
        he = d["half_extents"]
        return Box(half_extents=(float(he[0]), float(he[1])))
    raise ValidationError(f"{path}.kind", f"unknown shape kind {kind!r}")


def _body_to_dict(b: BodySpec):
    return {
        "name": b.name,
        "shape": _shape_to_dict(b.shape),
        "mass": b.mass,
        "inertia": b.inertia,
        "friction_coeff": b.friction_coeff,
        "restitution": b.restitution,
    }


def _body_from_dict(d, path) -> BodySpec:
    try:
        return BodySpec(
            name=d["name"],
            shape=_shape_from_dict(d["shape"], f"{path}.shape"),
            mass=float(d["mass"]),
            inertia=float(d["inertia"]),
            friction_coeff=float(d.get("friction_coeff", 0.8)),
            restitution=float(d.get("restitution", 0.0)),
        )
    except KeyError as e:
        raise ValidationError(f"{path}.{e.args[0]}", "missing field") from e


def robot_to_json(robot: RobotModel) -> str:
    doc = {
        "model_version": MODEL_VERSION,
        "base": _body_to_dict(robot.base),
        "links": [_body_to_dict(l) for l in robot.links],
        "joints": [
            {
                "parent": j.parent,
                "child": j.child,
                "anchor": list(j.anchor),
                "child_anchor": list(j.child_anchor),
                "limits": list(j.limits),
                "torque_limit": j.torque_limit,
                "kp": j.kp,
                "kd": j.kd,
            }
            for j in robot.joints
        ],
        "eef_bodies": list(robot.eef_bodies),
        "feet_bodies": list(robot.feet_bodies),
        "default_joint_pos": (None if robot.default_joint_pos is None
                              else list(robot.default_joint_pos)),
    }
    return json.dumps(doc, indent=2)


def robot_from_json(text: str) -> RobotModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError("<document>", f"malformed JSON: {e}") from e
    if doc.get("model_version") != MODEL_VERSION:
        raise ValidationError("model_version",
                              f"expected {MODEL_VERSION}, got {doc.get('model_version')!r}")
    joints = []
    for i, jd in enumerate(doc.get("joints", [])):
        joints.append(JointSpec(
            parent=jd["parent"],
            child=jd["child"],
            anchor=tuple(jd["anchor"]),
            child_anchor=tuple(jd.get("child_anchor", (0.0, 0.0))),
            limits=tuple(jd.get("limits", (-3.141592653589793, 3.141592653589793))),
            torque_limit=float(jd.get("torque_limit", 100.0)),
            kp=float(jd.get("kp", 100.0)),
            kd=float(jd.get("kd", 5.0)),
        ))
    robot = RobotModel(
        base=_body_from_dict(doc["base"], "base"),
        links=tuple(_body_from_dict(l, f"links[{i}]")
                    for i, l in enumerate(doc.get("links", []))),
        joints=tuple(joints),
        eef_bodies=tuple(doc.get("eef_bodies", [])),
        feet_bodies=tuple(doc.get("feet_bodies", [])),
        default_joint_pos=(None if doc.get("default_joint_pos") is None
                           else tuple(doc["default_joint_pos"])),
    )
    validate_robot(robot)
    return robot


def object_to_json(obj: ObjectModel) -> str:
    doc = {
        "model_version": MODEL_VERSION,
        "kind": obj.kind,
        "body": _body_to_dict(obj.body),
        "contact_anchors": [
            {"id": a.id, "offset": list(a.offset)} for a in obj.contact_anchors
        ],
    }
    if obj.hinge is not None:
        doc["hinge"] = {
            "world_anchor": list(obj.hinge.world_anchor),
            "local_anchor": list(obj.hinge.local_anchor),
            "axis_limits": list(obj.hinge.axis_limits),
            "rest_ori": obj.hinge.rest_ori,
        }
    return json.dumps(doc, indent=2)


def object_from_json(text: str) -> ObjectModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError("<document>", f"malformed JSON: {e}") from e
    if doc.get("model_version") != MODEL_VERSION:
        raise ValidationError("model_version",
                              f"expected {MODEL_VERSION}, got {doc.get('model_version')!r}")
    hinge = None
    if "hinge" in doc:
        hd = doc["hinge"]
        hinge = HingeSpec(
            world_anchor=tuple(hd["world_anchor"]),
            local_anchor=tuple(hd["local_anchor"]),
            axis_limits=tuple(hd["axis_limits"]),
            rest_ori=float(hd.get("rest_ori", 0.0)),
        )
    obj = ObjectModel(
        kind=doc["kind"],
        body=_body_from_dict(doc["body"], "body"),
        contact_anchors=tuple(
            ContactAnchor(id=a["id"], offset=tuple(a["offset"]))
            for a in doc.get("contact_anchors", [])
        ),
        hinge=hinge,
    )
    validate_object(obj)
    return obj
