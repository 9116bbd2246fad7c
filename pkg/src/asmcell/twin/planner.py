"""Joint-space motion planning against a cell-state snapshot.

Straight line from the current joints to an IK solution, collision-checked
every 0.01 rad of the largest joint delta; on collision one retry goes
through a lift waypoint (+0.15 m TCP height). Failures surface as
AbilityError("unreachable") or AbilityError("in_collision", objects=[...]).
"""

from __future__ import annotations

import numpy as np

from ..errors import AbilityError
from ..geometry import Pose, mesh_aabb, solids_overlap_volume, transform_mesh
from .collision import capsule_capsule_collides, capsule_mesh_collides
from .kinematics import Trajectory, Unreachable, fk, fk_frames, ik
from .world import TwinCell

CHECK_RESOLUTION = 0.01  # rad of max joint delta between checked configs
LIFT_HEIGHT = 0.15
SELF_PAIR_MIN_GAP = 3  # check own link pairs at least this far apart in the chain


class _Scene:
    """Static collision world extracted from a snapshot, minus the moving
    robot and whatever hangs off its TCP."""

    def __init__(self, twin: TwinCell, robot_id: str, snapshot: dict):
        self.twin = twin
        self.robot_id = robot_id
        spec = twin.robot_spec(robot_id)
        self.spec = spec
        self.base = twin.world_pose(robot_id)
        poses = {o["object_id"]: Pose.from_json(o["pose"]) for o in snapshot["objects"]}
        parents = {o["object_id"]: o["parent"] for o in snapshot["objects"]}

        def held_by_moving(oid: str) -> bool:
            while oid:
                if oid == f"{robot_id}/tcp":
                    return True
                oid = parents.get(oid, "")
            return False

        self.static_meshes = []  # (object_id, mesh, world pose, aabb)
        self.held = []  # (object_id, mesh, pose relative to moving TCP)
        tcp_world = poses.get(f"{robot_id}/tcp", twin.tcp_pose(robot_id))
        for entry in snapshot["objects"]:
            oid = entry["object_id"]
            mesh = twin.mesh_of(oid)
            if mesh is None:
                continue
            if held_by_moving(oid):
                self.held.append((oid, mesh, tcp_world.inverse().compose(poses[oid])))
            else:
                world = poses[oid]
                box = mesh_aabb(transform_mesh(mesh, world))
                self.static_meshes.append((oid, mesh, world, box.grown(1e-9)))
        self.static_capsules = []
        for other in twin.cell.robots:
            if other.robot_id == robot_id:
                continue
            q = np.asarray(snapshot["robot_joints"][other.robot_id], dtype=float)
            self.static_capsules.extend(twin.capsule_segments(other.robot_id, q))

    def collisions_at(self, q: np.ndarray) -> list[str]:
        """Ids of objects the moving robot (or its held parts) hits at q."""
        hits: list[str] = []
        own = self.twin.capsule_segments(self.robot_id, q)
        for p0, p1, r, label in own:
            for oid, mesh, pose, box in self.static_meshes:
                tris = pose.apply(mesh.vertices)[mesh.triangles]
                if capsule_mesh_collides(p0, p1, r, tris, box):
                    hits.extend([label, oid])
            for q0, q1, r2, label2 in self.static_capsules:
                if capsule_capsule_collides(p0, p1, r, q0, q1, r2):
                    hits.extend([label, label2])
        for i in range(len(own)):
            for j in range(i + SELF_PAIR_MIN_GAP, len(own)):
                p0, p1, r, label = own[i]
                q0, q1, r2, label2 = own[j]
                if capsule_capsule_collides(p0, p1, r, q0, q1, r2):
                    hits.extend([label, label2])
        if self.held:
            frames = fk_frames(self.spec.chain, q)
            T = frames[-1]
            tcp = self.base.compose(Pose.from_matrix(T[:3, :3], T[:3, 3]))
            for oid, mesh, rel in self.held:
                world = tcp.compose(rel)
                for sid, smesh, spose, sbox in self.static_meshes:
                    if solids_overlap_volume(mesh, world, smesh, spose):
                        hits.extend([oid, sid])
                for q0, q1, r2, label2 in self.static_capsules:
                    box = mesh_aabb(transform_mesh(mesh, world))
                    tris = world.apply(mesh.vertices)[mesh.triangles]
                    if capsule_mesh_collides(q0, q1, r2, tris, box):
                        hits.extend([oid, label2])
        return sorted(set(hits))


def _segment_collisions(scene: _Scene, q0: np.ndarray, q1: np.ndarray, resolution: float) -> list[str]:
    delta = float(np.max(np.abs(q1 - q0)))
    steps = max(1, int(np.ceil(delta / resolution)))
    for k in range(1, steps + 1):
        q = q0 + (q1 - q0) * (k / steps)
        hits = scene.collisions_at(q)
        if hits:
            return hits
    return []


def _timed(chain, waypoints: list[np.ndarray]) -> Trajectory:
    times = [0.0]
    for a, b in zip(waypoints, waypoints[1:]):
        delta = float(np.max(np.abs(np.asarray(b) - np.asarray(a))))
        times.append(times[-1] + max(delta / chain.max_joint_speed, 1e-9))
    return Trajectory(
        tuple(tuple(float(v) for v in w) for w in waypoints),
        tuple(times),
    )


def plan_trajectory(twin: TwinCell, robot: str, target: Pose, collisions: dict) -> Trajectory:
    """Plan for the robot's TCP to reach ``target`` (cell frame)."""
    spec = twin.robot_spec(robot)
    base = twin.world_pose(robot)
    local_target = base.inverse().compose(target)
    q0 = twin.robot_joints[robot]
    rng = np.random.default_rng(twin.seed)
    try:
        q1 = ik(spec.chain, local_target, q0, rng=rng)
    except Unreachable:
        raise AbilityError("unreachable", f"target {target.t.tolist()} out of reach of {robot!r}") from None
    if np.max(np.abs(q1 - q0)) < 1e-12:
        return _timed(spec.chain, [q0])
    scene = _Scene(twin, robot, collisions)
    hits = _segment_collisions(scene, q0, q1, CHECK_RESOLUTION)
    if not hits:
        return _timed(spec.chain, [q0, q1])
    # one retry through a lifted waypoint
    tcp = twin.tcp_pose(robot)
    lifted = Pose(tcp.q, tcp.t + np.array([0.0, 0.0, LIFT_HEIGHT]))
    try:
        q_lift = ik(spec.chain, base.inverse().compose(lifted), q0, rng=rng)
    except Unreachable:
        raise AbilityError("in_collision", "path blocked", hits) from None
    hits2 = _segment_collisions(scene, q0, q_lift, CHECK_RESOLUTION) or _segment_collisions(
        scene, q_lift, q1, CHECK_RESOLUTION
    )
    if hits2:
        raise AbilityError("in_collision", "path blocked (lift retry failed)", sorted(set(hits + hits2)))
    return _timed(spec.chain, [q0, q_lift, q1])


def check_trajectory(twin: TwinCell, robot: str, traj: Trajectory, collisions: dict, resolution: float = CHECK_RESOLUTION) -> list[str]:
    """Re-check a trajectory against a snapshot; [] means collision-free."""
    scene = _Scene(twin, robot, collisions)
    hits: list[str] = []
    waypoints = [np.asarray(w, dtype=float) for w in traj.waypoints]
    for a, b in zip(waypoints, waypoints[1:]):
        hits.extend(_segment_collisions(scene, a, b, resolution))
    return sorted(set(hits))
