"""Geometric feasibility of merges via stepwise extraction sweeps.

One subassembly is translated step by step away from the other, starting one
step out from the assembled pose (assembled parts legitimately touch, so k=0
is excluded), until their bounding boxes separate. A direction is feasible
when no step produces a positive-volume overlap between any part pair. The
step is 0.75 of the diagonal of the smallest part bounding box across both
subassemblies, which keeps a single step from jumping clean over the
smallest part.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import DesignDoc
from .geometry import Aabb, Pose, TriMesh, aabb_overlaps, bbox_diagonal, mesh_aabb, solids_overlap_volume, transform_mesh
from .sequencing import FASTEN, AssemblySequence, Join, Leaf, MergeNode

PRINCIPAL_DIRECTIONS = (
    (1.0, 0.0, 0.0),
    (-1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, -1.0, 0.0),
    (0.0, 0.0, 1.0),
    (0.0, 0.0, -1.0),
)

DEFAULT_STEP_RATIO = 0.75


@dataclass(frozen=True)
class SubassemblyGeom:
    """Parts at their design assembly poses."""

    parts: tuple[tuple[str, TriMesh, Pose], ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("empty subassembly")

    def aabb(self) -> Aabb:
        box = None
        for _pid, mesh, pose in self.parts:
            b = mesh_aabb(transform_mesh(mesh, pose))
            box = b if box is None else box.union(b)
        return box


@dataclass(frozen=True)
class FeasibilityParams:
    directions: tuple[tuple[float, float, float], ...] = PRINCIPAL_DIRECTIONS
    step_ratio: float = DEFAULT_STEP_RATIO
    eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.step_ratio <= 1.0:
            raise ValueError("step_ratio must be in (0, 1]")
        for d in self.directions:
            if abs(np.linalg.norm(d) - 1.0) > 1e-9:
                raise ValueError(f"direction {d} is not unit length")


@dataclass(frozen=True)
class FeasibilityFailure:
    sequence_id: str
    op_id: str
    checked_directions: tuple[tuple[float, float, float], ...]

    def to_json(self) -> dict:
        return {
            "sequence_id": self.sequence_id,
            "op_id": self.op_id,
            "checked_directions": [list(d) for d in self.checked_directions],
            "reason": "infeasible_geometry",
        }


def join_step_size(a: SubassemblyGeom, b: SubassemblyGeom, ratio: float = DEFAULT_STEP_RATIO) -> float:
    smallest = min(bbox_diagonal(mesh) for _pid, mesh, _pose in a.parts + b.parts)
    return ratio * smallest


def _swept_overlap(a: SubassemblyGeom, b: SubassemblyGeom, d: np.ndarray, step: float, eps: float) -> bool:
    """True if moving b along d by k*step (k >= 1) ever volume-overlaps a."""
    box_a = a.aabb()
    box_b = b.aabb()
    # travel needed to separate the boxes along d, per axis
    k_max = 2
    for axis in range(3):
        if abs(d[axis]) > 1e-12:
            span = (max(box_a.max[axis], box_b.max[axis]) - min(box_a.min[axis], box_b.min[axis]))
            k_max = max(k_max, int(np.ceil(span / (step * abs(d[axis])))) + 2)
    for k in range(1, k_max + 1):
        offset = k * step * d
        if not aabb_overlaps(box_a, box_b.translated(offset)):
            return False
        shift = Pose(t=offset)
        for _pa, mesh_a, pose_a in a.parts:
            wa = mesh_aabb(transform_mesh(mesh_a, pose_a))
            for _pb, mesh_b, pose_b in b.parts:
                moved = shift.compose(pose_b)
                if not aabb_overlaps(wa, mesh_aabb(transform_mesh(mesh_b, moved)).grown(eps)):
                    continue
                if solids_overlap_volume(mesh_a, pose_a, mesh_b, moved, eps):
                    return True
    return False


def feasible_directions(a: SubassemblyGeom, b: SubassemblyGeom, p: FeasibilityParams) -> set[tuple[float, float, float]]:
    step = join_step_size(a, b, p.step_ratio)
    out = set()
    for d in p.directions:
        if not _swept_overlap(a, b, np.asarray(d, dtype=float), step, p.eps):
            out.add(tuple(d))
    return out


def _subassembly(design: DesignDoc, part_ids: frozenset[str]) -> SubassemblyGeom:
    parts = tuple(
        (p.part_id, p.mesh, p.assembly_pose) for p in design.parts if p.part_id in part_ids
    )
    return SubassemblyGeom(parts)


def joint_axis_directions(design: DesignDoc, joint_ids: tuple[str, ...]) -> list[tuple[float, float, float]]:
    """Extra sweep candidates derived from the joints crossing a merge."""
    dirs = []
    for jid in joint_ids:
        axis = np.asarray(design.joint(jid).axis, dtype=float)
        for sign in (1.0, -1.0):
            d = tuple((sign * axis).tolist())
            if d not in dirs:
                dirs.append(d)
    return dirs


@dataclass
class FilterResult:
    kept: list[AssemblySequence] = field(default_factory=list)
    feedback: list[FeasibilityFailure] = field(default_factory=list)


def filter_sequences(
    seqs: list[AssemblySequence],
    design: DesignDoc,
    p: FeasibilityParams,
    include_joint_axes: bool = False,
) -> FilterResult:
    """Keep sequences whose every fasten has at least one feasible direction.

    Verdicts depend only on the merge geometry, so (subassembly, subassembly)
    pairs are memoized across sequences.
    """
    result = FilterResult()
    cache: dict[tuple[frozenset, frozenset, tuple], bool] = {}
    for seq in seqs:
        rejected_at = None
        for op, node in _fasten_nodes(seq):
            left, right = node.left.leaf_set(), node.right.leaf_set()
            directions = tuple(p.directions)
            if include_joint_axes:
                extra = tuple(d for d in joint_axis_directions(design, node.joint_ids) if d not in directions)
                directions = directions + extra
            key = (left, right, directions)
            if key not in cache:
                params = FeasibilityParams(directions, p.step_ratio, p.eps)
                feas = feasible_directions(_subassembly(design, left), _subassembly(design, right), params)
                cache[key] = bool(feas)
            if not cache[key]:
                rejected_at = FeasibilityFailure(seq.sequence_id, op.op_id, directions)
                break
        if rejected_at is None:
            result.kept.append(seq)
        else:
            result.feedback.append(rejected_at)
    return result


def _fasten_nodes(seq: AssemblySequence):
    nodes: dict[str, Join] = {}

    def walk(node: MergeNode):
        if isinstance(node, Leaf):
            return
        nodes[node.subassembly_id] = node
        walk(node.left)
        walk(node.right)

    walk(seq.tree)
    for op in seq.ops:
        if op.kind == FASTEN:
            yield op, nodes[op.subject]
