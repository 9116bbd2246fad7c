"""Tooling database and per-operation resource requirements.

Records describe capability models (what a gripper can hold, what a jig can
seat and where, which screws a screwdriver drives); concrete instances live
in the cell description. Enrichment walks a sequence and attaches, per
operation, the roles it needs with all candidate models, deferring instance
selection to cell matching.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .design import DesignDoc, FASTENER, RecipeSet
from .errors import DuplicateToolId, MissingTooling, ToolingValidationError
from .geometry import Pose
from .sequencing import FASTEN, PLACE, UNLOAD, AssemblySequence

GRIPPER = "gripper"
JIG = "jig"
SCREWDRIVER = "screwdriver"

STATION_INPUT = "input"
STATION_ASSEMBLY = "assembly"

# requirement roles
ROLE_CARRIER = "carrier_gripper"
ROLE_HOLDER = "holding_gripper"
ROLE_INPUT_JIG = "input_jig"
ROLE_ASSEMBLY_JIG = "assembly_jig"
ROLE_SCREWDRIVER = "screwdriver"
ROLE_FEEDER = "screw_feeder"


@dataclass(frozen=True)
class GripperSpec:
    applicable_models: tuple[str, ...]
    grasp_poses: dict[str, tuple[Pose, ...]]
    register_states: dict[str, int]  # open / close -> register word


@dataclass(frozen=True)
class JigSpec:
    held_models: tuple[str, ...]
    part_pose_in_jig: dict[str, Pose]
    station: str  # input | assembly


@dataclass(frozen=True)
class ScrewdriverSpec:
    holder_type: str
    screw_types: tuple[str, ...]


@dataclass(frozen=True)
class ToolingRecord:
    tool_id: str
    kind: str
    gripper: GripperSpec | None = None
    jig: JigSpec | None = None
    screwdriver: ScrewdriverSpec | None = None

    def validate(self) -> None:
        present = {GRIPPER: self.gripper, JIG: self.jig, SCREWDRIVER: self.screwdriver}
        if self.kind not in present:
            raise ToolingValidationError(f"{self.tool_id}: unknown kind {self.kind!r}")
        for kind, spec in present.items():
            if (spec is not None) != (kind == self.kind):
                raise ToolingValidationError(f"{self.tool_id}: record must carry exactly the {self.kind} spec")
        if self.jig is not None:
            missing = [m for m in self.jig.held_models if m not in self.jig.part_pose_in_jig]
            if missing:
                raise ToolingValidationError(f"{self.tool_id}: no seat pose for held models {missing}")
            if self.jig.station not in (STATION_INPUT, STATION_ASSEMBLY):
                raise ToolingValidationError(f"{self.tool_id}: unknown station {self.jig.station!r}")
        if self.gripper is not None:
            missing = [m for m in self.gripper.applicable_models if m not in self.gripper.grasp_poses]
            if missing:
                raise ToolingValidationError(f"{self.tool_id}: no grasp poses for models {missing}")


@dataclass(frozen=True)
class ToolingDb:
    records: dict[str, ToolingRecord] = field(default_factory=dict)

    def get(self, tool_id: str) -> ToolingRecord | None:
        return self.records.get(tool_id)

    def __len__(self) -> int:
        return len(self.records)


def register_tool(db: ToolingDb, record: ToolingRecord) -> ToolingDb:
    if record.tool_id in db.records:
        raise DuplicateToolId(record.tool_id)
    record.validate()
    out = dict(db.records)
    out[record.tool_id] = record
    return ToolingDb(out)


def match_gripper(db: ToolingDb, model: str) -> list[tuple[str, tuple[Pose, ...]]]:
    out = []
    for tool_id in sorted(db.records):
        r = db.records[tool_id]
        if r.kind == GRIPPER and model in r.gripper.applicable_models:
            out.append((tool_id, r.gripper.grasp_poses[model]))
    return out


def match_jig(db: ToolingDb, model: str, station: str) -> list[str]:
    return [
        tool_id
        for tool_id in sorted(db.records)
        if db.records[tool_id].kind == JIG
        and db.records[tool_id].jig.station == station
        and model in db.records[tool_id].jig.held_models
    ]


def match_screwdriver(db: ToolingDb, screw_type: str) -> list[str]:
    return [
        tool_id
        for tool_id in sorted(db.records)
        if db.records[tool_id].kind == SCREWDRIVER and screw_type in db.records[tool_id].screwdriver.screw_types
    ]


# ----------------------------------------------------------------- enrichment

@dataclass(frozen=True)
class RoleRequirement:
    role: str
    model: str  # part model / screw type this role must serve
    candidates: tuple[str, ...]  # tooling record ids able to serve it


@dataclass(frozen=True)
class FastenerTask:
    joint_id: str
    screw_type: str
    axis: tuple[float, float, float]  # assembly frame
    target_point: tuple[float, float, float]


@dataclass(frozen=True)
class OpBinding:
    op_id: str
    requirements: tuple[RoleRequirement, ...]
    grasp_poses: tuple[Pose, ...] = ()  # gripper rel part, from design recipes
    place_pose: Pose | None = None  # gripper rel part at insertion
    part_model: str | None = None
    assembly_pose: Pose | None = None  # part in assembly frame
    fastener_tasks: tuple[FastenerTask, ...] = ()

    def requirement(self, role: str) -> RoleRequirement | None:
        for r in self.requirements:
            if r.role == role:
                return r
        return None


@dataclass(frozen=True)
class EnrichedSequence:
    base: AssemblySequence
    bindings: dict[str, OpBinding]

    def binding(self, op_id: str) -> OpBinding:
        return self.bindings[op_id]


def enrich_sequence(
    s: AssemblySequence, db: ToolingDb, recipes: RecipeSet, design: DesignDoc
) -> EnrichedSequence:
    """Bind every operation to the tooling models and recipe poses it needs.

    Raises MissingTooling at the first op whose role no record can serve.
    """
    bindings: dict[str, OpBinding] = {}
    first_place_seen = False
    for i, op in enumerate(s.ops):
        if op.kind == UNLOAD:
            part = design.part(op.subject)
            jigs = match_jig(db, part.model_id, STATION_INPUT)
            if not jigs:
                raise MissingTooling(op.op_id, ROLE_INPUT_JIG, part.model_id)
            bindings[op.op_id] = OpBinding(
                op.op_id,
                (RoleRequirement(ROLE_INPUT_JIG, part.model_id, tuple(jigs)),),
                part_model=part.model_id,
                assembly_pose=part.assembly_pose,
            )
        elif op.kind == PLACE:
            part = design.part(op.subject)
            grippers = match_gripper(db, part.model_id)
            if not grippers:
                raise MissingTooling(op.op_id, ROLE_CARRIER, part.model_id)
            input_jigs = match_jig(db, part.model_id, STATION_INPUT)
            if not input_jigs:
                raise MissingTooling(op.op_id, ROLE_INPUT_JIG, part.model_id)
            assembly_jigs = match_jig(db, part.model_id, STATION_ASSEMBLY)
            if not first_place_seen:
                # the first placed part anchors the assembly and must be
                # seatable in an assembly-station jig
                if not assembly_jigs:
                    raise MissingTooling(op.op_id, ROLE_ASSEMBLY_JIG, part.model_id)
                first_place_seen = True
            grasp = recipes.grasp_recipes.get(part.model_id, ())
            if not grasp:
                raise MissingTooling(op.op_id, ROLE_CARRIER, part.model_id)
            bindings[op.op_id] = OpBinding(
                op.op_id,
                (
                    RoleRequirement(ROLE_CARRIER, part.model_id, tuple(t for t, _ in grippers)),
                    RoleRequirement(ROLE_INPUT_JIG, part.model_id, tuple(input_jigs)),
                    RoleRequirement(ROLE_ASSEMBLY_JIG, part.model_id, tuple(assembly_jigs)),
                ),
                grasp_poses=grasp,
                place_pose=recipes.place_recipes.get(op.subject, grasp[0]),
                part_model=part.model_id,
                assembly_pose=part.assembly_pose,
            )
        elif op.kind == FASTEN:
            requirements: list[RoleRequirement] = []
            tasks: list[FastenerTask] = []
            screw_types: list[str] = []
            for joint_id in op.joint_ids:
                joint = design.joint(joint_id)
                if joint.kind != FASTENER:
                    continue
                meta = joint.fastener_meta
                tasks.append(FastenerTask(joint_id, meta.screw_type, joint.axis, meta.target_point))
                if meta.screw_type not in screw_types:
                    screw_types.append(meta.screw_type)
            for screw in screw_types:
                drivers = match_screwdriver(db, screw)
                if not drivers:
                    raise MissingTooling(op.op_id, ROLE_SCREWDRIVER, screw)
                requirements.append(RoleRequirement(ROLE_SCREWDRIVER, screw, tuple(drivers)))
                requirements.append(RoleRequirement(ROLE_FEEDER, screw, ()))
            # the part placed immediately before this fasten is held in
            # position while the screws are driven
            held_model = None
            if i > 0 and s.ops[i - 1].kind == PLACE:
                held_model = design.part(s.ops[i - 1].subject).model_id
                grippers = match_gripper(db, held_model)
                if not grippers:
                    raise MissingTooling(op.op_id, ROLE_HOLDER, held_model)
                requirements.append(RoleRequirement(ROLE_HOLDER, held_model, tuple(t for t, _ in grippers)))
            bindings[op.op_id] = OpBinding(op.op_id, tuple(requirements), fastener_tasks=tuple(tasks))
        else:
            raise ValueError(f"unknown op kind {op.kind!r}")
    return EnrichedSequence(s, bindings)


# ----------------------------------------------------------------- serialization

def tooling_to_json(db: ToolingDb) -> list[dict]:
    out = []
    for tool_id in sorted(db.records):
        r = db.records[tool_id]
        entry: dict = {"tool_id": r.tool_id, "kind": r.kind}
        if r.gripper:
            entry["gripper"] = {
                "applicable_models": list(r.gripper.applicable_models),
                "grasp_poses": {m: [p.to_json() for p in ps] for m, ps in sorted(r.gripper.grasp_poses.items())},
                "register_states": dict(sorted(r.gripper.register_states.items())),
            }
        if r.jig:
            entry["jig"] = {
                "held_models": list(r.jig.held_models),
                "part_pose_in_jig": {m: p.to_json() for m, p in sorted(r.jig.part_pose_in_jig.items())},
                "station": r.jig.station,
            }
        if r.screwdriver:
            entry["screwdriver"] = {
                "holder_type": r.screwdriver.holder_type,
                "screw_types": list(r.screwdriver.screw_types),
            }
        out.append(entry)
    return out


def tooling_from_json(docs: list[dict]) -> ToolingDb:
    db = ToolingDb()
    for entry in docs:
        gripper = jig = screwdriver = None
        if "gripper" in entry:
            g = entry["gripper"]
            gripper = GripperSpec(
                tuple(g["applicable_models"]),
                {m: tuple(Pose.from_json(p) for p in ps) for m, ps in g["grasp_poses"].items()},
                {k: int(v) for k, v in g["register_states"].items()},
            )
        if "jig" in entry:
            j = entry["jig"]
            jig = JigSpec(
                tuple(j["held_models"]),
                {m: Pose.from_json(p) for m, p in j["part_pose_in_jig"].items()},
                j["station"],
            )
        if "screwdriver" in entry:
            s = entry["screwdriver"]
            screwdriver = ScrewdriverSpec(s["holder_type"], tuple(s["screw_types"]))
        db = register_tool(db, ToolingRecord(entry["tool_id"], entry["kind"], gripper, jig, screwdriver))
    return db
