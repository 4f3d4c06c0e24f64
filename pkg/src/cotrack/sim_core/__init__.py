"""Deterministic 2D sagittal-plane rigid-body simulation."""

from .engine import Contact, ContactReport, eef_contact_force, step
from .io import object_from_json, object_to_json, robot_from_json, robot_to_json
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
from .world import (
    SimState,
    WorldModel,
    apply_randomization,
    body_pose,
    build_world,
    fk_robot,
    initial_state,
)

__all__ = [
    "BodySpec", "Box", "Circle", "Contact", "ContactAnchor", "ContactReport",
    "HingeSpec", "JointSpec", "ObjectModel", "RobotModel", "SimState",
    "ValidationError", "WorldModel", "apply_randomization", "body_pose",
    "build_world", "eef_contact_force", "fk_robot", "initial_state",
    "object_from_json", "object_to_json", "robot_from_json", "robot_to_json",
    "step", "validate_object", "validate_robot",
]
