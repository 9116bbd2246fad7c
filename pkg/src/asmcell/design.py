"""Neutral design-document loading and validation.

Two kinds of data travel in one ``design.json``: the part assembly with its
joints (fasteners are separate joints, distinguishable from plain rigid
joints), and the recipes: relative poses of the gripper while grasping and
inserting parts, and of parts seated in jigs. Units are meters and radians;
poses serialize as {"q": [w,x,y,z], "t": [x,y,z]}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DanglingReferenceError, GeometryError, InvalidMesh, SchemaError
from .geometry import Pose, TriMesh, solids_overlap_volume

DEFAULT_EPS = 1e-6

RIGID = "rigid"
FASTENER = "fastener"


@dataclass(frozen=True)
class FastenerMeta:
    screw_type: str
    target_point: tuple[float, float, float]


@dataclass(frozen=True)
class JointDef:
    joint_id: str
    kind: str  # rigid | fastener
    part_a: str
    part_b: str
    axis: tuple[float, float, float]  # unit, assembly frame
    origin: tuple[float, float, float]
    fastener_meta: FastenerMeta | None = None


@dataclass(frozen=True)
class PartDef:
    part_id: str
    model_id: str
    mesh: TriMesh  # part frame
    assembly_pose: Pose  # part frame -> assembly frame


@dataclass(frozen=True)
class RecipeSet:
    """Relative poses extracted from the design files.

    grasp_recipes: model -> gripper poses relative to the part while grasping.
    place_recipes: part occurrence -> gripper pose relative to the part at
    insertion. jig_part_poses: (jig model, part model) -> part pose in the jig
    frame. Models with no grasp pose must be listed in ``ungraspable``.
    """

    grasp_recipes: dict[str, tuple[Pose, ...]]
    place_recipes: dict[str, Pose]
    jig_part_poses: dict[tuple[str, str], Pose]
    ungraspable: tuple[str, ...] = ()


@dataclass(frozen=True)
class DesignDoc:
    design_id: str
    parts: tuple[PartDef, ...]
    joints: tuple[JointDef, ...]
    recipes: RecipeSet
    eps: float = DEFAULT_EPS

    def part(self, part_id: str) -> PartDef:
        for p in self.parts:
            if p.part_id == part_id:
                return p
        raise KeyError(part_id)

    def joint(self, joint_id: str) -> JointDef:
        for j in self.joints:
            if j.joint_id == joint_id:
                return j
        raise KeyError(joint_id)

    def part_ids(self) -> set[str]:
        return {p.part_id for p in self.parts}


@dataclass(frozen=True)
class JointRegister:
    """joint id -> (part_a, part_b, kind); one entry per declared joint."""

    entries: dict[str, tuple[str, str, str]]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class ValidationReport:
    errors: list[dict] = field(default_factory=list)
    warnings: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, code: str, detail: str) -> None:
        self.errors.append({"code": code, "detail": detail})

    def warn(self, code: str, detail: str) -> None:
        self.warnings.append({"code": code, "detail": detail})


# ------------------------------------------------------------------ loading

def _need(obj: dict, key: str, typ, path: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{path}.{key}", "missing required field")
    val = obj[key]
    if typ is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise SchemaError(f"{path}.{key}", "expected a number")
        return float(val)
    if not isinstance(val, typ):
        raise SchemaError(f"{path}.{key}", f"expected {typ.__name__}")
    return val


def _pose_from(obj, path: str) -> Pose:
    q = _need(obj, "q", list, path)
    t = _need(obj, "t", list, path)
    if len(q) != 4 or len(t) != 3:
        raise SchemaError(path, "pose needs q[4] and t[3]")
    try:
        return Pose(q, t)
    except ValueError as e:
        raise SchemaError(path, str(e)) from e


def _mesh_from(obj, path: str) -> TriMesh:
    v = _need(obj, "vertices", list, path)
    f = _need(obj, "triangles", list, path)
    try:
        return TriMesh(v, f)
    except InvalidMesh as e:
        raise GeometryError(path, str(e)) from e


def load_design(doc: dict) -> DesignDoc:
    """Build a fully validated DesignDoc from parsed JSON."""
    design_id = _need(doc, "design_id", str, "design")
    eps = float(doc.get("eps", DEFAULT_EPS))
    if eps <= 0:
        raise SchemaError("design.eps", "must be positive")

    raw_parts = _need(doc, "parts", list, "design")
    if not raw_parts:
        raise SchemaError("design.parts", "empty parts list")
    parts = []
    seen = set()
    for i, rp in enumerate(raw_parts):
        path = f"design.parts[{i}]"
        pid = _need(rp, "part_id", str, path)
        model = _need(rp, "model_id", str, path)
        if not model:
            raise SchemaError(f"{path}.model_id", "must be non-empty")
        if pid in seen:
            raise SchemaError(f"{path}.part_id", f"duplicate part id {pid!r}")
        seen.add(pid)
        mesh = _mesh_from(_need(rp, "mesh", dict, path), f"{path}.mesh")
        pose = _pose_from(_need(rp, "assembly_pose", dict, path), f"{path}.assembly_pose")
        parts.append(PartDef(pid, model, mesh, pose))

    joints = []
    seen_j = set()
    for i, rj in enumerate(doc.get("joints", [])):
        path = f"design.joints[{i}]"
        jid = _need(rj, "joint_id", str, path)
        if jid in seen_j:
            raise SchemaError(f"{path}.joint_id", f"duplicate joint id {jid!r}")
        seen_j.add(jid)
        kind = _need(rj, "kind", str, path)
        if kind not in (RIGID, FASTENER):
            raise SchemaError(f"{path}.kind", f"unknown joint kind {kind!r}")
        pa = _need(rj, "part_a", str, path)
        pb = _need(rj, "part_b", str, path)
        for ref in (pa, pb):
            if ref not in seen:
                raise DanglingReferenceError(ref, f"{path}")
        if pa == pb:
            raise SchemaError(path, "joint must connect two distinct parts")
        axis = tuple(float(x) for x in _need(rj, "axis", list, path))
        if len(axis) != 3 or abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise SchemaError(f"{path}.axis", "must be a unit 3-vector")
        origin = tuple(float(x) for x in _need(rj, "origin", list, path))
        if len(origin) != 3:
            raise SchemaError(f"{path}.origin", "must be a 3-vector")
        meta = None
        if kind == FASTENER:
            rm = _need(rj, "fastener_meta", dict, path)
            tp = tuple(float(x) for x in _need(rm, "target_point", list, f"{path}.fastener_meta"))
            if len(tp) != 3:
                raise SchemaError(f"{path}.fastener_meta.target_point", "must be a 3-vector")
            meta = FastenerMeta(_need(rm, "screw_type", str, f"{path}.fastener_meta"), tp)
        elif "fastener_meta" in rj and rj["fastener_meta"] is not None:
            raise SchemaError(f"{path}.fastener_meta", "only fastener joints carry fastener_meta")
        joints.append(JointDef(jid, kind, pa, pb, axis, origin, meta))

    recipes = _recipes_from(doc.get("recipes", {}), "design.recipes")
    return DesignDoc(design_id, tuple(parts), tuple(joints), recipes, eps)


def _recipes_from(obj: dict, path: str) -> RecipeSet:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    grasp = {}
    for model, poses in obj.get("grasp", {}).items():
        if not isinstance(poses, list):
            raise SchemaError(f"{path}.grasp.{model}", "expected a list of poses")
        grasp[model] = tuple(_pose_from(p, f"{path}.grasp.{model}[{i}]") for i, p in enumerate(poses))
    place = {
        part_id: _pose_from(p, f"{path}.place.{part_id}")
        for part_id, p in obj.get("place", {}).items()
    }
    jig = {}
    for jig_model, inner in obj.get("jig_part_poses", {}).items():
        for model, p in inner.items():
            jig[(jig_model, model)] = _pose_from(p, f"{path}.jig_part_poses.{jig_model}.{model}")
    ungraspable = tuple(obj.get("ungraspable", []))
    return RecipeSet(grasp, place, jig, ungraspable)


# ---------------------------------------------------------------- serialization

def design_to_json(d: DesignDoc) -> dict:
    jig: dict[str, dict] = {}
    for (jig_model, model), p in sorted(d.recipes.jig_part_poses.items()):
        jig.setdefault(jig_model, {})[model] = p.to_json()
    doc = {
        "design_id": d.design_id,
        "eps": d.eps,
        "parts": [
            {
                "part_id": p.part_id,
                "model_id": p.model_id,
                "mesh": p.mesh.to_json(),
                "assembly_pose": p.assembly_pose.to_json(),
            }
            for p in d.parts
        ],
        "joints": [
            {
                "joint_id": j.joint_id,
                "kind": j.kind,
                "part_a": j.part_a,
                "part_b": j.part_b,
                "axis": list(j.axis),
                "origin": list(j.origin),
                **(
                    {
                        "fastener_meta": {
                            "screw_type": j.fastener_meta.screw_type,
                            "target_point": list(j.fastener_meta.target_point),
                        }
                    }
                    if j.fastener_meta
                    else {}
                ),
            }
            for j in d.joints
        ],
        "recipes": {
            "grasp": {m: [p.to_json() for p in ps] for m, ps in sorted(d.recipes.grasp_recipes.items())},
            "place": {pid: p.to_json() for pid, p in sorted(d.recipes.place_recipes.items())},
            "jig_part_poses": jig,
            "ungraspable": sorted(d.recipes.ungraspable),
        },
    }
    return doc


# ---------------------------------------------------------------- operations

def build_joint_register(d: DesignDoc) -> JointRegister:
    return JointRegister({j.joint_id: (j.part_a, j.part_b, j.kind) for j in d.joints})


def extract_recipes(d: DesignDoc) -> tuple[RecipeSet, list[str]]:
    """Recipe set plus MissingRecipe warnings for models with no grasp pose."""
    warnings = []
    models = {p.model_id for p in d.parts}
    for model in sorted(models):
        if not d.recipes.grasp_recipes.get(model) and model not in d.recipes.ungraspable:
            warnings.append(f"MissingRecipe: model {model!r} has no grasp recipe")
    return d.recipes, warnings


def validate_design(d: DesignDoc) -> ValidationReport:
    """Report-style validation, including pairwise interference of the parts
    at their assembly poses (surface contact is fine, shared volume is not)."""
    report = ValidationReport()
    seen: set[str] = set()
    for p in d.parts:
        if p.part_id in seen:
            report.error("duplicate_id", f"part {p.part_id!r} defined twice")
        seen.add(p.part_id)
        if not p.model_id:
            report.error("empty_model", f"part {p.part_id!r} has empty model_id")
    seen_j: set[str] = set()
    for j in d.joints:
        if j.joint_id in seen_j:
            report.error("duplicate_id", f"joint {j.joint_id!r} defined twice")
        seen_j.add(j.joint_id)
        for ref in (j.part_a, j.part_b):
            if ref not in seen:
                report.error("dangling_reference", f"joint {j.joint_id!r} references {ref!r}")
        if j.kind == FASTENER and j.fastener_meta is None:
            report.error("fastener_meta", f"fastener {j.joint_id!r} lacks fastener_meta")
        if j.kind == RIGID and j.fastener_meta is not None:
            report.error("fastener_meta", f"rigid joint {j.joint_id!r} carries fastener_meta")
    for i, a in enumerate(d.parts):
        for b in d.parts[i + 1 :]:
            if solids_overlap_volume(a.mesh, a.assembly_pose, b.mesh, b.assembly_pose, d.eps):
                report.error("assembled_interference", f"parts {a.part_id!r} and {b.part_id!r} overlap at assembly poses")
    _, missing = extract_recipes(d)
    for w in missing:
        report.warn("missing_recipe", w)
    return report
