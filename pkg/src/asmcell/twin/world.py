"""The twin's world model: an object tree over the cell frame.

Every object (jig, feeder, obstacle, part, robot base/TCP, named frame)
stores its pose relative to a parent; world poses are composed on demand, so
attachment is literally parenting and a grasped part follows the TCP for
free. One owner (this class) serializes all mutations; snapshots are plain
deep-copied dicts.

On release within seating tolerance a part snaps to the exact jig seat, and
a successful fasten re-seats the joined group at the exact design alignment
under the assembly jig: jigs and screws are locating features, which is what
lets an ideal-kinematic run land on its targets exactly.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..cellmatch import CellDescription, validate_cell
from ..design import DesignDoc, FASTENER
from ..errors import AbilityError, UnknownTool
from ..geometry import Pose, TriMesh
from ..tooling import GRIPPER, SCREWDRIVER, STATION_ASSEMBLY, ToolingDb
from .kinematics import Trajectory, fk, fk_frames

CELL = "cell"
GRASP_TOL_POS = 1e-3
GRASP_TOL_ANG = np.deg2rad(1.0)
APPROACH_LIFT = 0.10


@dataclass
class _Obj:
    object_id: str
    kind: str  # jig | feeder | obstacle | part | robot_base | tcp | frame
    parent: str
    local: Pose
    mesh: TriMesh | None = None
    model_id: str | None = None


def _axis_frame(axis, origin) -> Pose:
    """Frame at ``origin`` whose z-axis points along ``axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    ez = np.array([0.0, 0.0, 1.0])
    dot = float(np.dot(ez, axis))
    if dot > 1.0 - 1e-12:
        q = np.array([1.0, 0.0, 0.0, 0.0])
    elif dot < -1.0 + 1e-12:
        q = np.array([0.0, 1.0, 0.0, 0.0])  # flip about x
    else:
        xyz = np.cross(ez, axis)
        q = np.concatenate([[1.0 + dot], xyz])
        q = q / np.linalg.norm(q)
    return Pose(q, origin)


class TwinCell:
    """Mutable digital twin of one assembly cell."""

    def __init__(self, cell: CellDescription, db: ToolingDb, seed: int = 0):
        validate_cell(cell, db)
        self.cell = cell
        self.db = db
        self.seed = seed
        self.twin_time = 0.0
        self.fastened: set[str] = set()
        self.registers: dict[str, int] = {}
        self.design: DesignDoc | None = None
        self._groups: dict[str, frozenset[str]] = {}
        self.objects: dict[str, _Obj] = {CELL: _Obj(CELL, "frame", "", Pose.identity())}
        self.robot_joints: dict[str, np.ndarray] = {}

        for jig in cell.jigs:
            self._add(_Obj(jig.jig_id, "jig", CELL, jig.pose, model_id=jig.tool_id))
        for feeder in cell.screw_feeders:
            self._add(_Obj(feeder.feeder_id, "feeder", CELL, feeder.pose))
        for obs in cell.obstacles:
            self._add(_Obj(obs.object_id, "obstacle", CELL, obs.pose, mesh=obs.mesh))
        for robot in cell.robots:
            self._add(_Obj(robot.robot_id, "robot_base", CELL, robot.base_pose))
            q = robot.home()
            self.robot_joints[robot.robot_id] = q
            self._add(_Obj(f"{robot.robot_id}/tcp", "tcp", robot.robot_id, fk(robot.chain, q)))
            self._add(_Obj(f"{robot.robot_id}/park", "frame", robot.robot_id, fk(robot.chain, robot.home())))
            self.registers[robot.robot_id] = 0

        assembly_jigs = sorted(
            j.jig_id for j in cell.jigs if db.get(j.tool_id).jig.station == STATION_ASSEMBLY
        )
        self.anchor_jig_id: str | None = assembly_jigs[0] if assembly_jigs else None

    # ------------------------------------------------------------ tree

    def _add(self, obj: _Obj) -> None:
        if obj.object_id in self.objects:
            raise ValueError(f"duplicate object id {obj.object_id!r}")
        self.objects[obj.object_id] = obj

    def world_pose(self, object_id: str) -> Pose:
        obj = self.objects.get(object_id)
        if obj is None:
            raise AbilityError("not_found", f"no object {object_id!r}", [object_id])
        pose = obj.local
        while obj.parent:
            obj = self.objects[obj.parent]
            pose = obj.local.compose(pose)
        return pose

    def _reparent_preserving_world(self, object_id: str, new_parent: str) -> None:
        world = self.world_pose(object_id)
        parent_world = self.world_pose(new_parent)
        obj = self.objects[object_id]
        obj.parent = new_parent
        obj.local = parent_world.inverse().compose(world)

    def _children(self, object_id: str) -> list[str]:
        return sorted(o.object_id for o in self.objects.values() if o.parent == object_id)

    def _add_frame_with_approach(self, object_id: str, parent: str, local: Pose, lift: float = APPROACH_LIFT) -> None:
        self._add(_Obj(object_id, "frame", parent, local))
        frame_world = self.world_pose(object_id)
        app_world = Pose(frame_world.q, frame_world.t + np.array([0.0, 0.0, lift]))
        app_local = frame_world.inverse().compose(app_world)
        self._add(_Obj(f"{object_id}/app", "frame", object_id, app_local))

    # ------------------------------------------------------------ design

    def load_design(self, design: DesignDoc) -> None:
        """Create assembly target, insertion-TCP and fastening frames under
        every assembly-station jig instance."""
        self.design = design
        for jig in self.cell.jigs:
            record = self.db.get(jig.tool_id)
            if record.jig.station != STATION_ASSEMBLY:
                continue
            base = jig.jig_id
            for part in design.parts:
                self._add(_Obj(f"{base}/target/{part.part_id}", "frame", base, part.assembly_pose))
                place = design.recipes.place_recipes.get(part.part_id)
                if place is None:
                    grasp = design.recipes.grasp_recipes.get(part.model_id, ())
                    place = grasp[0] if grasp else Pose.identity()
                self._add_frame_with_approach(
                    f"{base}/tcp/{part.part_id}", base, part.assembly_pose.compose(place)
                )
            for joint in design.joints:
                if joint.kind != FASTENER:
                    continue
                drive = _axis_frame(joint.axis, joint.fastener_meta.target_point)
                self._add_frame_with_approach(f"{base}/fasten/{joint.joint_id}", base, drive)

    # ------------------------------------------------------------ robots

    def robot_spec(self, robot_id: str):
        try:
            return self.cell.robot(robot_id)
        except KeyError:
            raise AbilityError("not_found", f"no robot {robot_id!r}", [robot_id]) from None

    def set_joints(self, robot_id: str, q: np.ndarray) -> None:
        spec = self.robot_spec(robot_id)
        self.robot_joints[robot_id] = np.asarray(q, dtype=float)
        self.objects[f"{robot_id}/tcp"].local = fk(spec.chain, q)

    def tcp_pose(self, robot_id: str) -> Pose:
        return self.world_pose(f"{robot_id}/tcp")

    def capsule_segments(self, robot_id: str, q: np.ndarray | None = None):
        """World-frame (p0, p1, radius, label) per link capsule."""
        spec = self.robot_spec(robot_id)
        if q is None:
            q = self.robot_joints[robot_id]
        base = self.world_pose(robot_id)
        frames = fk_frames(spec.chain, q)
        out = []
        for cap in spec.link_capsules:
            T = frames[cap.link - 1]
            rot, trans = T[:3, :3], T[:3, 3]
            p0 = base.apply(rot @ np.asarray(cap.p0) + trans)
            p1 = base.apply(rot @ np.asarray(cap.p1) + trans)
            out.append((p0, p1, cap.radius, f"{robot_id}/link{cap.link}"))
        return out

    # ------------------------------------------------------------ snapshots

    def get_cell_state(self) -> dict:
        objects = []
        for oid in sorted(self.objects):
            if oid == CELL:
                continue
            obj = self.objects[oid]
            objects.append(
                {
                    "object_id": oid,
                    "kind": obj.kind,
                    "model_id": obj.model_id,
                    "parent": obj.parent,
                    "pose": self.world_pose(oid).to_json(),
                }
            )
        return copy.deepcopy(
            {
                "objects": objects,
                "robot_joints": {r: [float(v) for v in q] for r, q in sorted(self.robot_joints.items())},
                "registers": dict(sorted(self.registers.items())),
                "fastened": sorted(self.fastened),
                "twin_time": self.twin_time,
            }
        )

    def mesh_of(self, object_id: str) -> TriMesh | None:
        obj = self.objects.get(object_id)
        return obj.mesh if obj is not None else None

    def snapshot_scene(self) -> dict:
        """Scene export: the data a renderer would need."""
        state = self.get_cell_state()
        for entry in state["objects"]:
            obj = self.objects[entry["object_id"]]
            entry["has_mesh"] = obj.mesh is not None
        state["design_id"] = self.design.design_id if self.design else None
        return state

    # ------------------------------------------------------------ abilities

    def get_transform(self, parent: str, child: str) -> Pose:
        return self.world_pose(parent).inverse().compose(self.world_pose(child))

    def get_part_pose_in_jig(self, jig: str, part_model: str) -> Pose:
        obj = self.objects.get(jig)
        if obj is None or obj.kind != "jig":
            raise AbilityError("not_found", f"no jig {jig!r}", [jig])
        record = self.db.get(obj.model_id)
        seat = record.jig.part_pose_in_jig.get(part_model)
        if seat is None:
            raise AbilityError("model_not_held", f"jig {jig!r} does not hold {part_model!r}")
        return seat

    def get_assembly_info(self, part: str | None = None, joint: str | None = None):
        if self.design is None or self.anchor_jig_id is None:
            raise AbilityError("not_found", "no design loaded into the twin")
        if (part is None) == (joint is None):
            raise AbilityError("not_found", "pass exactly one of part/joint")
        anchor = self.world_pose(self.anchor_jig_id)
        if part is not None:
            try:
                p = self.design.part(part)
            except KeyError:
                raise AbilityError("not_found", f"no part {part!r}", [part]) from None
            return anchor.compose(p.assembly_pose)
        try:
            j = self.design.joint(joint)
        except KeyError:
            raise AbilityError("not_found", f"no joint {joint!r}", [joint]) from None
        info = {
            "joint_id": j.joint_id,
            "kind": j.kind,
            "axis": anchor.rotate(np.asarray(j.axis)).tolist(),
            "origin": anchor.apply(np.asarray(j.origin)).tolist(),
        }
        if j.fastener_meta:
            info["screw_type"] = j.fastener_meta.screw_type
            info["target_point"] = anchor.apply(np.asarray(j.fastener_meta.target_point)).tolist()
        return info

    def unload_part(self, part: str, jig: str) -> str:
        if self.design is None:
            raise AbilityError("not_found", "no design loaded into the twin")
        if part in self.objects:
            raise AbilityError("already_present", f"part {part!r} already unloaded", [part])
        try:
            part_def = self.design.part(part)
        except KeyError:
            raise AbilityError("not_found", f"no part {part!r} in the design", [part]) from None
        jig_obj = self.objects.get(jig)
        if jig_obj is None or jig_obj.kind != "jig":
            raise AbilityError("not_found", f"no jig {jig!r}", [jig])
        record = self.db.get(jig_obj.model_id)
        seat = record.jig.part_pose_in_jig.get(part_def.model_id)
        if seat is None:
            raise AbilityError("model_not_held", f"jig {jig!r} does not hold {part_def.model_id!r}")
        self._add(_Obj(part, "part", jig, seat, mesh=part_def.mesh, model_id=part_def.model_id))
        grasps = self.design.recipes.grasp_recipes.get(part_def.model_id, ())
        for i, g in enumerate(grasps):
            self._add_frame_with_approach(f"{part}/grasp/{i}", part, g)
        return "ok"

    def execute_trajectory(self, robot: str, traj: Trajectory) -> str:
        spec = self.robot_spec(robot)
        if not traj.waypoints:
            return "ok"
        prev_q = None
        prev_t = None
        for w, t in zip(traj.waypoints, traj.timestamps):
            q = np.asarray(w, dtype=float)
            if q.shape != (spec.chain.dof,):
                raise AbilityError("limit_violation", "waypoint dimension mismatch")
            if not spec.chain.within_limits(q):
                raise AbilityError("limit_violation", "waypoint outside joint limits")
            if prev_q is not None:
                dt = t - prev_t
                speed = float(np.max(np.abs(q - prev_q))) / dt
                if speed > spec.chain.max_joint_speed + 1e-9:
                    raise AbilityError("limit_violation", f"joint speed {speed:.3f} over limit")
            prev_q, prev_t = q, t
        self.set_joints(robot, np.asarray(traj.waypoints[-1], dtype=float))
        self.twin_time += traj.duration
        return "ok"

    def set_gripper(self, robot: str, register: str) -> str:
        spec = self.robot_spec(robot)
        record = self.db.get(spec.mounted_tool)
        if record.kind != GRIPPER:
            raise AbilityError("no_gripper", f"robot {robot!r} mounts {record.kind}, not a gripper")
        if register not in ("open", "close"):
            raise AbilityError("not_found", f"unknown gripper register {register!r}")
        self.registers[robot] = record.gripper.register_states.get(register, 0)
        tcp_id = f"{robot}/tcp"
        if register == "close":
            tcp = self.world_pose(tcp_id)
            best = None
            for oid in sorted(self.objects):
                obj = self.objects[oid]
                if obj.kind != "part" or obj.model_id not in record.gripper.applicable_models:
                    continue
                if obj.parent.endswith("/tcp"):
                    continue  # held by some robot already
                part_world = self.world_pose(oid)
                for g in record.gripper.grasp_poses[obj.model_id]:
                    expected = part_world.compose(g)
                    dpos = float(np.linalg.norm(expected.t - tcp.t))
                    dang = expected.rotation_angle_to(tcp)
                    if dpos <= GRASP_TOL_POS and dang <= GRASP_TOL_ANG:
                        if best is None or dpos < best[0]:
                            best = (dpos, oid)
            if best is None:
                raise AbilityError("nothing_to_grasp", f"no grasp-recipe pose matches the TCP of {robot!r}")
            primary = best[1]
            group = self._groups.get(primary, frozenset((primary,)))
            for member in sorted(group - {primary}):
                self._reparent_preserving_world(member, primary)
            self._reparent_preserving_world(primary, tcp_id)
            return "ok"
        # open: release every directly held part
        for oid in self._children(tcp_id):
            obj = self.objects[oid]
            if obj.kind != "part":
                continue
            world = self.world_pose(oid)
            new_parent, new_local = CELL, world
            for jig in self.cell.jigs:
                rec = self.db.get(jig.tool_id)
                seat = rec.jig.part_pose_in_jig.get(obj.model_id)
                if seat is None:
                    continue
                seat_world = self.world_pose(jig.jig_id).compose(seat)
                if (
                    float(np.linalg.norm(seat_world.t - world.t)) <= GRASP_TOL_POS
                    and seat_world.rotation_angle_to(world) <= GRASP_TOL_ANG
                ):
                    new_parent, new_local = jig.jig_id, seat  # snap to the exact seat
                    break
            obj.parent = new_parent
            obj.local = new_local
        return "ok"

    def fasten(self, robot: str, joint: str) -> str:
        spec = self.robot_spec(robot)
        record = self.db.get(spec.mounted_tool)
        if record.kind != SCREWDRIVER:
            raise AbilityError("no_screwdriver", f"robot {robot!r} mounts {record.kind}, not a screwdriver")
        if self.design is None or self.anchor_jig_id is None:
            raise AbilityError("not_found", "no design loaded into the twin")
        try:
            joint_def = self.design.joint(joint)
        except KeyError:
            raise AbilityError("not_found", f"no joint {joint!r}", [joint]) from None
        if joint_def.kind != FASTENER:
            raise AbilityError("not_a_fastener", f"joint {joint!r} is {joint_def.kind}")
        for pid in (joint_def.part_a, joint_def.part_b):
            if pid not in self.objects:
                raise AbilityError("parts_not_placed", f"part {pid!r} not present", [pid])
        anchor = self.world_pose(self.anchor_jig_id)
        drive = anchor.compose(_axis_frame(joint_def.axis, joint_def.fastener_meta.target_point))
        tcp = self.tcp_pose(robot)
        dpos = float(np.linalg.norm(drive.t - tcp.t))
        z_tcp = tcp.rotate(np.array([0.0, 0.0, 1.0]))
        z_drive = drive.rotate(np.array([0.0, 0.0, 1.0]))
        dang = float(np.arccos(np.clip(np.dot(z_tcp, z_drive), -1.0, 1.0)))
        if dpos > GRASP_TOL_POS or dang > GRASP_TOL_ANG:
            raise AbilityError(
                "not_aligned", f"TCP off target by {dpos * 1000:.2f} mm / {np.rad2deg(dang):.2f} deg"
            )
        # both parts must sit at their design targets before screws go in
        for pid in (joint_def.part_a, joint_def.part_b):
            target = anchor.compose(self.design.part(pid).assembly_pose)
            world = self.world_pose(pid)
            if (
                float(np.linalg.norm(target.t - world.t)) > GRASP_TOL_POS
                or target.rotation_angle_to(world) > GRASP_TOL_ANG
            ):
                raise AbilityError("parts_not_placed", f"part {pid!r} is not at its assembly target", [pid])
        self.fastened.add(joint)
        group = (
            self._groups.get(joint_def.part_a, frozenset((joint_def.part_a,)))
            | self._groups.get(joint_def.part_b, frozenset((joint_def.part_b,)))
        )
        for member in group:
            self._groups[member] = group
        # screws locate the joined parts exactly; seat the group under the jig
        for member in sorted(group):
            obj = self.objects[member]
            obj.parent = self.anchor_jig_id
            obj.local = self.design.part(member).assembly_pose
        return "ok"
