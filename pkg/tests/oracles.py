"""Independent brute-force oracles shared by module and acceptance tests.

The sequence oracle enumerates merge trees by raw bipartition recursion and
linearizations by filtering part permutations for per-node contiguity; fasten
positions are then forced. It deliberately shares no code with the library's
recursive block construction.
"""

from __future__ import annotations

import itertools
import random


def oracle_sequence_signatures(parts: list[str], edges: set[frozenset]) -> set[tuple]:
    """Set of (('P', part) | ('F', leafset)) op tuples for all valid sequences."""

    def has_cross(s1: frozenset, s2: frozenset) -> bool:
        return any(frozenset((a, b)) in edges for a in s1 for b in s2)

    def trees(s: frozenset) -> set:
        if len(s) == 1:
            return {("leaf", next(iter(s)))}
        out = set()
        items = sorted(s)
        first, rest = items[0], items[1:]
        for r in range(len(rest) + 1):
            for combo in itertools.combinations(rest, r):
                s1 = frozenset((first,) + combo)
                s2 = s - s1
                if not s2 or not has_cross(s1, s2):
                    continue
                for t1 in trees(s1):
                    for t2 in trees(s2):
                        a, b = sorted((t1, t2), key=repr)
                        out.add(("join", a, b))
        return out

    def leafset(t) -> frozenset:
        if t[0] == "leaf":
            return frozenset((t[1],))
        return leafset(t[1]) | leafset(t[2])

    def internal_nodes(t) -> list:
        if t[0] == "leaf":
            return []
        return internal_nodes(t[1]) + internal_nodes(t[2]) + [t]

    signatures = set()
    for tree in trees(frozenset(parts)):
        nodes = internal_nodes(tree)
        node_sets = [leafset(n) for n in nodes]
        for perm in itertools.permutations(sorted(parts)):
            index = {p: i for i, p in enumerate(perm)}
            ok = True
            for s in node_sets:
                idx = sorted(index[p] for p in s)
                if idx[-1] - idx[0] != len(idx) - 1:
                    ok = False
                    break
            if not ok:
                continue
            # fasten positions are forced: a node fires when its leaf-set
            # completes, innermost (smallest set) first
            placed: set[str] = set()
            fired: set[frozenset] = set()
            sig: list[tuple] = []
            for p in perm:
                placed.add(p)
                sig.append(("P", p))
                for s in sorted(node_sets, key=len):
                    if s not in fired and s <= placed:
                        fired.add(s)
                        sig.append(("F", s))
            signatures.add(tuple(sig))
    return signatures


def implementation_signature(seq) -> tuple:
    """Project a library AssemblySequence onto the oracle's signature space."""
    from asmcell.sequencing import FASTEN, PLACE, Join, Leaf

    sets: dict[str, frozenset] = {}

    def walk(node):
        if isinstance(node, Leaf):
            return
        sets[node.subassembly_id] = node.leaf_set()
        walk(node.left)
        walk(node.right)

    walk(seq.tree)
    sig = []
    for op in seq.ops:
        if op.kind == PLACE:
            sig.append(("P", op.subject))
        elif op.kind == FASTEN:
            sig.append(("F", sets[op.subject]))
    return tuple(sig)


def random_connected_graph(rng: random.Random, max_nodes: int = 5):
    """Random connected liaison topology: spanning tree plus extra edges."""
    n = rng.randint(1, max_nodes)
    parts = [chr(ord("A") + i) for i in range(n)]
    edges: set[frozenset] = set()
    for i in range(1, n):
        j = rng.randrange(i)
        edges.add(frozenset((parts[i], parts[j])))
    extra = rng.randint(0, n)
    for _ in range(extra):
        a, b = rng.sample(parts, 2) if n >= 2 else (None, None)
        if a is not None:
            edges.add(frozenset((a, b)))
    return parts, edges


def fine_step_feasible_directions(
    sub_a, sub_b, directions, eps: float, step: float = 0.001
):
    """Millimeter-resolution sweep oracle over the same overlap primitive."""
    import numpy as np

    from asmcell.geometry import Pose, aabb_overlaps, mesh_aabb, transform_mesh

    def union_aabb(sub):
        box = None
        for _pid, mesh, pose in sub:
            b = mesh_aabb(transform_mesh(mesh, pose))
            box = b if box is None else box.union(b)
        return box

    from asmcell.geometry import solids_overlap_volume

    box_a = union_aabb(sub_a)
    feasible = []
    for d in directions:
        d = np.asarray(d, dtype=float)
        blocked = False
        k = 1
        while True:
            offset = k * step * d
            box_b = union_aabb(sub_b).translated(offset)
            if not aabb_overlaps(box_a, box_b):
                break
            shift = Pose(t=offset)
            for _pa, mesh_a, pose_a in sub_a:
                for _pb, mesh_b, pose_b in sub_b:
                    if solids_overlap_volume(mesh_a, pose_a, mesh_b, shift.compose(pose_b), eps):
                        blocked = True
                        break
                if blocked:
                    break
            if blocked:
                break
            k += 1
            if k > 100000:
                raise RuntimeError("oracle sweep did not terminate")
        if not blocked:
            feasible.append(tuple(d))
    return set(feasible)
