"""Match an enriched sequence to a cell's concrete resources and emit a BOP.

Operations are assigned topological levels (longest predecessor path), then
traversed with greedy lowest-id instance assignment; instances must be
pairwise distinct per role within a level. A place at the assembly station
binds when the assembly jig actually seats that part (the jig holds the
model and its seat pose equals the part's assembly pose, and the seat is
free) or when the part is held in position for an immediately following
fasten against already-placed parts. Reachability is not checked here; the
planner discovers it during simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CycleDetected, NoCellsError, UnknownTool
from .geometry import Pose, TriMesh
from .sequencing import FASTEN, PLACE, UNLOAD, AssemblySequence, Join, Leaf, SeqOp, precedence_edges, sequence_label
from .tooling import (
    ROLE_ASSEMBLY_JIG,
    ROLE_CARRIER,
    ROLE_FEEDER,
    ROLE_HOLDER,
    ROLE_INPUT_JIG,
    ROLE_SCREWDRIVER,
    EnrichedSequence,
    ToolingDb,
)
from .twin.kinematics import Capsule, KinematicChain

SEAT_POSE_TOL = 1e-6


@dataclass(frozen=True)
class RobotSpec:
    robot_id: str
    base_pose: Pose
    chain: KinematicChain
    mounted_tool: str
    link_capsules: tuple[Capsule, ...] = ()
    home_joints: tuple[float, ...] = ()

    def home(self) -> np.ndarray:
        if self.home_joints:
            return np.asarray(self.home_joints, dtype=float)
        return np.zeros(self.chain.dof)


@dataclass(frozen=True)
class JigInstance:
    jig_id: str
    tool_id: str  # tooling record (the jig model)
    pose: Pose


@dataclass(frozen=True)
class ScrewFeeder:
    feeder_id: str
    screw_type: str
    pose: Pose  # pick TCP pose in cell frame


@dataclass(frozen=True)
class Obstacle:
    object_id: str
    mesh: TriMesh
    pose: Pose


@dataclass(frozen=True)
class CellDescription:
    cell_id: str
    robots: tuple[RobotSpec, ...]
    jigs: tuple[JigInstance, ...]
    screw_feeders: tuple[ScrewFeeder, ...] = ()
    obstacles: tuple[Obstacle, ...] = ()

    def robot(self, robot_id: str) -> RobotSpec:
        for r in self.robots:
            if r.robot_id == robot_id:
                return r
        raise KeyError(robot_id)

    def jig(self, jig_id: str) -> JigInstance:
        for j in self.jigs:
            if j.jig_id == jig_id:
                return j
        raise KeyError(jig_id)


def validate_cell(cell: CellDescription, db: ToolingDb) -> None:
    ids = [r.robot_id for r in cell.robots] + [j.jig_id for j in cell.jigs] + [f.feeder_id for f in cell.screw_feeders]
    if len(set(ids)) != len(ids):
        raise ValueError(f"cell {cell.cell_id}: duplicate instance ids")
    for r in cell.robots:
        if db.get(r.mounted_tool) is None:
            raise UnknownTool(r.mounted_tool, f"robot {r.robot_id}")
    for j in cell.jigs:
        rec = db.get(j.tool_id)
        if rec is None or rec.jig is None:
            raise UnknownTool(j.tool_id, f"jig {j.jig_id}")


@dataclass(frozen=True)
class BoundOp:
    op: SeqOp
    level: int
    resources: dict[str, str]  # role -> instance id
    targets: dict  # named cell-frame poses / points, JSON-ready

    def to_json(self) -> dict:
        return {
            "op": self.op.to_json(),
            "level": self.level,
            "resources": dict(sorted(self.resources.items())),
            "targets": self.targets,
        }


@dataclass(frozen=True)
class BOP:
    bop_id: str
    cell_id: str
    sequence_id: str
    label: str
    ops: tuple[BoundOp, ...]

    def to_json(self) -> dict:
        return {
            "bop_id": self.bop_id,
            "cell_id": self.cell_id,
            "sequence_id": self.sequence_id,
            "label": self.label,
            "ops": [op.to_json() for op in self.ops],
        }


@dataclass(frozen=True)
class MatchFailure:
    sequence_id: str
    op_id: str
    model: str
    role: str
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "sequence_id": self.sequence_id,
            "op_id": self.op_id,
            "model": self.model,
            "role": self.role,
            "detail": self.detail,
            "reason": "missing_resource",
        }


def assign_levels(s: EnrichedSequence) -> dict[str, int]:
    """Longest-predecessor-path depth per op id."""
    ops = s.base.ops
    edges = precedence_edges(s.base)
    preds: dict[int, list[int]] = {i: [] for i in range(len(ops))}
    succs: dict[int, list[int]] = {i: [] for i in range(len(ops))}
    for a, b in edges:
        preds[b].append(a)
        succs[a].append(b)
    indegree = {i: len(preds[i]) for i in preds}
    frontier = sorted(i for i, dg in indegree.items() if dg == 0)
    level = {i: 0 for i in frontier}
    seen = 0
    while frontier:
        i = frontier.pop(0)
        seen += 1
        for j in succs[i]:
            level[j] = max(level.get(j, 0), level[i] + 1)
            indegree[j] -= 1
            if indegree[j] == 0:
                frontier.append(j)
        frontier.sort()
    if seen != len(ops):
        raise CycleDetected("operation precedence graph has a cycle")
    return {ops[i].op_id: level[i] for i in range(len(ops))}


@dataclass
class _MatchState:
    used: dict[tuple[int, str], set[str]] = field(default_factory=dict)
    jig_of_part: dict[str, str] = field(default_factory=dict)
    placed: list[str] = field(default_factory=list)
    anchor_jig: str | None = None
    anchor_pose: Pose | None = None
    occupied_seats: set[tuple[str, str]] = field(default_factory=set)

    def take(self, level: int, role: str, instance: str) -> None:
        self.used.setdefault((level, role), set()).add(instance)

    def free(self, level: int, role: str, instance: str) -> bool:
        return instance not in self.used.get((level, role), set())


def _fasten_node(tree, subject: str) -> Join:
    if isinstance(tree, Leaf):
        raise KeyError(subject)
    if tree.subassembly_id == subject:
        return tree
    for child in (tree.left, tree.right):
        if isinstance(child, Join):
            try:
                return _fasten_node(child, subject)
            except KeyError:
                pass
    raise KeyError(subject)


def match_cell(s: EnrichedSequence, cell: CellDescription, db: ToolingDb) -> BOP | MatchFailure:
    validate_cell(cell, db)
    levels = assign_levels(s)
    base_ops = list(s.base.ops)
    order = sorted(range(len(base_ops)), key=lambda i: (levels[base_ops[i].op_id], i))
    state = _MatchState()
    bound: list[BoundOp] = []
    seq_id = s.base.sequence_id

    def robots_for(candidates: tuple[str, ...], level: int, role: str) -> str | None:
        for r in sorted(cell.robots, key=lambda r: r.robot_id):
            if r.mounted_tool in candidates and state.free(level, role, r.robot_id):
                return r.robot_id
        return None

    for i in order:
        op = base_ops[i]
        binding = s.bindings[op.op_id]
        level = levels[op.op_id]
        resources: dict[str, str] = {}
        targets: dict = {}

        if op.kind == UNLOAD:
            req = binding.requirement(ROLE_INPUT_JIG)
            chosen = None
            for jig in sorted(cell.jigs, key=lambda j: j.jig_id):
                if (
                    jig.tool_id in req.candidates
                    and jig.jig_id not in state.jig_of_part.values()
                    and state.free(level, ROLE_INPUT_JIG, jig.jig_id)
                ):
                    chosen = jig
                    break
            if chosen is None:
                return MatchFailure(seq_id, op.op_id, req.model, ROLE_INPUT_JIG)
            state.take(level, ROLE_INPUT_JIG, chosen.jig_id)
            state.jig_of_part[op.subject] = chosen.jig_id
            resources[ROLE_INPUT_JIG] = chosen.jig_id
            seat = db.get(chosen.tool_id).jig.part_pose_in_jig[binding.part_model]
            targets["part_pose"] = chosen.pose.compose(seat).to_json()

        elif op.kind == PLACE:
            req_c = binding.requirement(ROLE_CARRIER)
            carrier = robots_for(req_c.candidates, level, ROLE_CARRIER)
            if carrier is None:
                return MatchFailure(seq_id, op.op_id, req_c.model, ROLE_CARRIER)
            state.take(level, ROLE_CARRIER, carrier)
            resources[ROLE_CARRIER] = carrier
            resources[ROLE_INPUT_JIG] = state.jig_of_part[op.subject]

            req_a = binding.requirement(ROLE_ASSEMBLY_JIG)
            assembly_instance = None
            # rule (a): the assembly jig seats this very part
            for jig in sorted(cell.jigs, key=lambda j: j.jig_id):
                if jig.tool_id not in req_a.candidates:
                    continue
                seat = db.get(jig.tool_id).jig.part_pose_in_jig.get(binding.part_model)
                if seat is None or (jig.jig_id, binding.part_model) in state.occupied_seats:
                    continue
                if seat.approx_equal(binding.assembly_pose, SEAT_POSE_TOL):
                    assembly_instance = jig
                    break
            if assembly_instance is not None:
                state.occupied_seats.add((assembly_instance.jig_id, binding.part_model))
                if state.anchor_jig is None:
                    state.anchor_jig = assembly_instance.jig_id
                    state.anchor_pose = assembly_instance.pose
                resources[ROLE_ASSEMBLY_JIG] = assembly_instance.jig_id
            else:
                # rule (b): held for an immediately following fasten against
                # already-placed parts
                next_op = base_ops[i + 1] if i + 1 < len(base_ops) else None
                ok = False
                if next_op is not None and next_op.kind == FASTEN and state.anchor_jig is not None:
                    node = _fasten_node(s.base.tree, next_op.subject)
                    leaves = node.leaf_set()
                    others = leaves - {op.subject}
                    ok = op.subject in leaves and others <= set(state.placed)
                if not ok:
                    return MatchFailure(
                        seq_id,
                        op.op_id,
                        binding.part_model,
                        ROLE_ASSEMBLY_JIG,
                        detail="assembly jig cannot seat this part at this point in the sequence",
                    )
                resources[ROLE_ASSEMBLY_JIG] = state.anchor_jig
            state.placed.append(op.subject)
            anchor = state.anchor_pose
            part_target = anchor.compose(binding.assembly_pose)
            targets["part_target"] = part_target.to_json()
            pick_jig = cell.jig(state.jig_of_part[op.subject])
            seat = db.get(pick_jig.tool_id).jig.part_pose_in_jig[binding.part_model]
            targets["pick_tcp"] = pick_jig.pose.compose(seat).compose(binding.grasp_poses[0]).to_json()
            targets["insert_tcp"] = part_target.compose(binding.place_pose).to_json()

        elif op.kind == FASTEN:
            for req in binding.requirements:
                if req.role == ROLE_SCREWDRIVER:
                    driver = robots_for(req.candidates, level, ROLE_SCREWDRIVER)
                    if driver is None:
                        return MatchFailure(seq_id, op.op_id, req.model, ROLE_SCREWDRIVER)
                    state.take(level, ROLE_SCREWDRIVER, driver)
                    resources[ROLE_SCREWDRIVER] = driver
                elif req.role == ROLE_FEEDER:
                    feeder = None
                    for f in sorted(cell.screw_feeders, key=lambda f: f.feeder_id):
                        if f.screw_type == req.model and state.free(level, ROLE_FEEDER, f.feeder_id):
                            feeder = f
                            break
                    if feeder is None:
                        return MatchFailure(seq_id, op.op_id, req.model, ROLE_FEEDER)
                    state.take(level, ROLE_FEEDER, feeder.feeder_id)
                    resources[ROLE_FEEDER] = feeder.feeder_id
                elif req.role == ROLE_HOLDER:
                    holder = robots_for(req.candidates, level, ROLE_HOLDER)
                    if holder is None:
                        return MatchFailure(seq_id, op.op_id, req.model, ROLE_HOLDER)
                    state.take(level, ROLE_HOLDER, holder)
                    resources[ROLE_HOLDER] = holder
            if state.anchor_jig is not None:
                resources[ROLE_ASSEMBLY_JIG] = state.anchor_jig
            anchor = state.anchor_pose
            joints = []
            for task in binding.fastener_tasks:
                point = anchor.apply(np.asarray(task.target_point)).tolist()
                axis = anchor.rotate(np.asarray(task.axis)).tolist()
                joints.append(
                    {
                        "joint_id": task.joint_id,
                        "screw_type": task.screw_type,
                        "target_point": point,
                        "axis": axis,
                    }
                )
            targets["joints"] = joints

        bound.append(BoundOp(op, level, resources, targets))

    return BOP(f"{cell.cell_id}:{seq_id}", cell.cell_id, seq_id, sequence_label(s.base), tuple(bound))


def select_cell(
    s: EnrichedSequence, cells: list[CellDescription], db: ToolingDb
) -> tuple[str, BOP] | list[MatchFailure]:
    if not cells:
        raise NoCellsError("no cells to match against")
    failures: list[MatchFailure] = []
    for cell in cells:
        result = match_cell(s, cell, db)
        if isinstance(result, BOP):
            return (cell.cell_id, result)
        failures.append(result)
    return failures


# ---------------------------------------------------------------- serialization

def cell_to_json(cell: CellDescription) -> dict:
    return {
        "cell_id": cell.cell_id,
        "robots": [
            {
                "robot_id": r.robot_id,
                "base_pose": r.base_pose.to_json(),
                "chain": r.chain.to_json(),
                "mounted_tool": r.mounted_tool,
                "link_capsules": [c.to_json() for c in r.link_capsules],
                "home_joints": list(r.home_joints),
            }
            for r in cell.robots
        ],
        "jigs": [{"jig_id": j.jig_id, "tool_id": j.tool_id, "pose": j.pose.to_json()} for j in cell.jigs],
        "screw_feeders": [
            {"feeder_id": f.feeder_id, "screw_type": f.screw_type, "pose": f.pose.to_json()}
            for f in cell.screw_feeders
        ],
        "obstacles": [
            {"object_id": o.object_id, "mesh": o.mesh.to_json(), "pose": o.pose.to_json()}
            for o in cell.obstacles
        ],
    }


def cell_from_json(doc: dict) -> CellDescription:
    robots = tuple(
        RobotSpec(
            r["robot_id"],
            Pose.from_json(r["base_pose"]),
            KinematicChain.from_json(r["chain"]),
            r["mounted_tool"],
            tuple(Capsule.from_json(c) for c in r.get("link_capsules", [])),
            tuple(r.get("home_joints", [])),
        )
        for r in doc["robots"]
    )
    jigs = tuple(JigInstance(j["jig_id"], j["tool_id"], Pose.from_json(j["pose"])) for j in doc["jigs"])
    feeders = tuple(
        ScrewFeeder(f["feeder_id"], f["screw_type"], Pose.from_json(f["pose"]))
        for f in doc.get("screw_feeders", [])
    )
    obstacles = tuple(
        Obstacle(o["object_id"], TriMesh.from_json(o["mesh"]), Pose.from_json(o["pose"]))
        for o in doc.get("obstacles", [])
    )
    return CellDescription(doc["cell_id"], robots, jigs, feeders, obstacles)
