"""Wires twin services into the process-language ability registry."""

from __future__ import annotations

from ..pl import (
    TYPE_JSON,
    TYPE_NUMBER,
    TYPE_POSE,
    TYPE_SNAPSHOT,
    TYPE_STRING,
    TYPE_TRAJECTORY,
    AbilityRegistry,
    AbilitySpec,
)
from . import planner
from .bus import BusStore
from .world import TwinCell


def build_registry(twin: TwinCell, bus: BusStore | None = None) -> AbilityRegistry:
    bus = bus if bus is not None else BusStore()
    reg = AbilityRegistry()

    def add(name, params, returns, handler, optional=()):
        reg.register(AbilitySpec(name, params, returns, handler, frozenset(optional)))

    add("get_cell_state", {}, TYPE_SNAPSHOT, lambda t: t.get_cell_state())
    add(
        "get_transform",
        {"parent": TYPE_STRING, "child": TYPE_STRING},
        TYPE_POSE,
        lambda t, parent, child: t.get_transform(parent, child),
    )
    add(
        "get_part_pose_in_jig",
        {"jig": TYPE_STRING, "part_model": TYPE_STRING},
        TYPE_POSE,
        lambda t, jig, part_model: t.get_part_pose_in_jig(jig, part_model),
    )
    add(
        "get_assembly_info",
        {"part": TYPE_STRING, "joint": TYPE_STRING},
        TYPE_JSON,
        lambda t, part=None, joint=None: t.get_assembly_info(part, joint),
        optional=("part", "joint"),
    )
    add(
        "plan_trajectory",
        {"robot": TYPE_STRING, "target": TYPE_POSE, "collisions": TYPE_SNAPSHOT},
        TYPE_TRAJECTORY,
        lambda t, robot, target, collisions: planner.plan_trajectory(t, robot, target, collisions),
    )
    add(
        "execute_trajectory",
        {"robot": TYPE_STRING, "traj": TYPE_TRAJECTORY},
        TYPE_STRING,
        lambda t, robot, traj: t.execute_trajectory(robot, traj),
    )
    add(
        "set_gripper",
        {"robot": TYPE_STRING, "register": TYPE_STRING},
        TYPE_STRING,
        lambda t, robot, register: t.set_gripper(robot, register),
    )
    add(
        "fasten",
        {"robot": TYPE_STRING, "joint": TYPE_STRING},
        TYPE_STRING,
        lambda t, robot, joint: t.fasten(robot, joint),
    )
    add(
        "unload_part",
        {"part": TYPE_STRING, "jig": TYPE_STRING},
        TYPE_STRING,
        lambda t, part, jig: t.unload_part(part, jig),
    )
    add(
        "publish",
        {"topic": TYPE_STRING, "key": TYPE_STRING, "payload": TYPE_JSON},
        TYPE_NUMBER,
        lambda t, topic, key, payload: bus.publish(topic, key, payload),
    )
    add(
        "retrieve",
        {"topic": TYPE_STRING, "key": TYPE_STRING},
        TYPE_JSON,
        lambda t, topic, key: bus.retrieve(topic, key).to_json(),
    )
    return reg


def init_cell(cell, db, seed: int = 0) -> TwinCell:
    """Fresh twin: robots at home, jigs posed, no parts, twin_time zero."""
    return TwinCell(cell, db, seed)
