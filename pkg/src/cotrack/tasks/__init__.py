"""Bundled task scenes: robot, object, and reference motion per task."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from ..refmotion import ReferenceMotion, parse_motion
from ..sim_core import ObjectModel, RobotModel, WorldModel, build_world
from ..sim_core.io import object_from_json, robot_from_json

TASK_NAMES = ("push_box", "door_hinge", "kneel_lift")


@dataclass(frozen=True)
class TaskBundle:
    name: str
    robot: RobotModel
    obj: ObjectModel
    motion: ReferenceMotion

    def build_world(self) -> WorldModel:
        return build_world(self.robot, self.obj)


def _read(filename: str) -> str:
    return (resources.files(__package__) / "data" / filename).read_text()


def list_tasks() -> tuple[str, ...]:
    return TASK_NAMES


def load_task(name: str) -> TaskBundle:
    if name not in TASK_NAMES:
        raise KeyError(f"unknown task {name!r}; available: {TASK_NAMES}")
    robot = robot_from_json(_read("pusher_robot.json"))
    obj = object_from_json(_read(f"{name}_object.json"))
    motion = parse_motion(_read(f"{name}_motion.json"))
    return TaskBundle(name=name, robot=robot, obj=obj, motion=motion)
