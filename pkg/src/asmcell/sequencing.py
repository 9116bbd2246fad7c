"""Assembly sequence enumeration.

A merge tree is a binary tree whose leaves are parts and whose internal
nodes join two liaison-connected subassemblies; the joint ids crossing the
cut belong to that node's fasten operation. Sequences are linearizations
where every subtree's operations form one contiguous block (sibling blocks
are never interleaved), each node's fasten comes right after its block, the
root fasten is emitted last, and an unload is inserted immediately before
each place. Subassembly ids are fresh letters (first free after the part
ids) assigned per distinct leaf-set in canonical enumeration order; the root
is always named after the full assembly and never appears in labels.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Union

from .errors import DisconnectedGraph
from .liaison import LiaisonGraph, connected_components

DEFAULT_SEQUENCE_CAP = 10_000

UNLOAD = "unload"
PLACE = "place"
FASTEN = "fasten"


@dataclass(frozen=True)
class Leaf:
    part_id: str

    def leaf_set(self) -> frozenset[str]:
        return frozenset((self.part_id,))

    def to_json(self) -> dict:
        return {"part": self.part_id}


@dataclass(frozen=True)
class Join:
    subassembly_id: str
    left: "MergeNode"
    right: "MergeNode"
    joint_ids: tuple[str, ...]

    def leaf_set(self) -> frozenset[str]:
        return self.left.leaf_set() | self.right.leaf_set()

    def to_json(self) -> dict:
        return {
            "subassembly": self.subassembly_id,
            "joints": list(self.joint_ids),
            "left": self.left.to_json(),
            "right": self.right.to_json(),
        }


MergeNode = Union[Leaf, Join]


def tree_from_json(d: dict) -> MergeNode:
    if "part" in d:
        return Leaf(d["part"])
    return Join(d["subassembly"], tree_from_json(d["left"]), tree_from_json(d["right"]), tuple(d["joints"]))


@dataclass(frozen=True)
class SeqOp:
    op_id: str
    kind: str  # unload | place | fasten
    subject: str  # part id, or subassembly id for fastens
    joint_ids: tuple[str, ...] = ()

    def to_json(self) -> dict:
        out = {"op_id": self.op_id, "kind": self.kind, "subject": self.subject}
        if self.kind == FASTEN:
            out["joint_ids"] = list(self.joint_ids)
        return out


@dataclass(frozen=True)
class AssemblySequence:
    sequence_id: str
    ops: tuple[SeqOp, ...]
    tree: MergeNode

    def op(self, op_id: str) -> SeqOp:
        for o in self.ops:
            if o.op_id == op_id:
                return o
        raise KeyError(op_id)

    def to_json(self) -> dict:
        return {
            "sequence_id": self.sequence_id,
            "label": sequence_label(self),
            "ops": [o.to_json() for o in self.ops],
            "tree": self.tree.to_json(),
        }


@dataclass(frozen=True)
class TreeEnumeration:
    trees: tuple[MergeNode, ...]
    truncated: bool


@dataclass(frozen=True)
class SequenceEnumeration:
    sequences: tuple[AssemblySequence, ...]
    truncated: bool


# ------------------------------------------------------------- tree shapes

def _enumerate_shapes(g: LiaisonGraph) -> list:
    """All unordered binary merge shapes over the connected graph.

    A shape is ('leaf', part) or ('join', left, right) with children in
    canonical-string order; every join's two leaf-sets must share an edge.
    """
    parts = sorted(g.nodes)
    index = {p: i for i, p in enumerate(parts)}
    adj = [0] * len(parts)
    for pair in g.edges:
        a, b = sorted(pair)
        adj[index[a]] |= 1 << index[b]
        adj[index[b]] |= 1 << index[a]

    def crosses(m1: int, m2: int) -> bool:
        return any(adj[i] & m2 for i in range(len(parts)) if m1 & (1 << i))

    @lru_cache(maxsize=None)
    def shapes(mask: int) -> tuple:
        bits = [i for i in range(len(parts)) if mask & (1 << i)]
        if len(bits) == 1:
            return (("leaf", parts[bits[0]]),)
        out = []
        low = 1 << bits[0]
        rest = [b for b in bits[1:]]
        # sub-masks of `rest` combined with the lowest bit form one side
        for sub in range(1 << len(rest)):
            m1 = low
            for j, b in enumerate(rest):
                if sub & (1 << j):
                    m1 |= 1 << b
            m2 = mask ^ m1
            if m2 == 0 or not crosses(m1, m2):
                continue
            for s1 in shapes(m1):
                for s2 in shapes(m2):
                    if _canon(s1) <= _canon(s2):
                        out.append(("join", s1, s2))
                    else:
                        out.append(("join", s2, s1))
        return tuple(out)

    full = (1 << len(parts)) - 1
    return sorted(shapes(full), key=_canon)


def _canon(shape) -> str:
    if shape[0] == "leaf":
        return shape[1]
    return f"({_canon(shape[1])}+{_canon(shape[2])})"


def _shape_leaves(shape) -> frozenset[str]:
    if shape[0] == "leaf":
        return frozenset((shape[1],))
    return _shape_leaves(shape[1]) | _shape_leaves(shape[2])


def _name_pool(taken: set[str]) -> Iterator[str]:
    for size in itertools.count(1):
        for combo in itertools.product(string.ascii_uppercase, repeat=size):
            name = "".join(combo)
            if name not in taken:
                yield name


def _root_name(taken: set[str]) -> str:
    name = "ASM"
    while name in taken:
        name += "_"
    return name


def enumerate_merge_trees(g: LiaisonGraph, cap: int = DEFAULT_SEQUENCE_CAP) -> TreeEnumeration:
    """All merge trees in deterministic canonical order, capped."""
    if len(connected_components(g)) != 1:
        raise DisconnectedGraph(f"liaison graph has {len(connected_components(g))} components")
    shapes = _enumerate_shapes(g)
    truncated = len(shapes) > cap
    shapes = shapes[:cap]

    taken = set(g.nodes)
    root_id = _root_name(taken)
    pool = _name_pool(taken | {root_id})
    names: dict[frozenset[str], str] = {}
    full = frozenset(g.nodes)

    def build(shape, is_root: bool) -> MergeNode:
        if shape[0] == "leaf":
            return Leaf(shape[1])
        left = build(shape[1], False)
        right = build(shape[2], False)
        leaves = _shape_leaves(shape)
        if is_root and leaves == full:
            name = root_id
        else:
            if leaves not in names:
                names[leaves] = next(pool)
            name = names[leaves]
        joints = []
        ls, rs = left.leaf_set(), right.leaf_set()
        for pair in sorted(g.edges, key=sorted):
            a, b = sorted(pair)
            if (a in ls and b in rs) or (a in rs and b in ls):
                joints.extend(g.edges[pair])
        return Join(name, left, right, tuple(sorted(joints)))

    trees = tuple(build(s, True) for s in shapes)
    return TreeEnumeration(trees, truncated)


# ------------------------------------------------------------ linearization

def _op_lists(node: MergeNode) -> Iterator[tuple[tuple[str, MergeNode], ...]]:
    """All contiguous-block linearizations as (kind, node) pairs."""
    if isinstance(node, Leaf):
        yield ((UNLOAD, node), (PLACE, node))
        return
    for first, second in ((node.left, node.right), (node.right, node.left)):
        for b1 in _op_lists(first):
            for b2 in _op_lists(second):
                yield b1 + b2 + ((FASTEN, node),)


def _to_ops(raw: tuple[tuple[str, MergeNode], ...]) -> tuple[SeqOp, ...]:
    ops = []
    for kind, node in raw:
        if kind == FASTEN:
            assert isinstance(node, Join)
            ops.append(SeqOp(f"{kind}:{node.subassembly_id}", kind, node.subassembly_id, node.joint_ids))
        else:
            assert isinstance(node, Leaf)
            ops.append(SeqOp(f"{kind}:{node.part_id}", kind, node.part_id))
    return tuple(ops)


def linearize_tree(tree: MergeNode) -> list[AssemblySequence]:
    out = []
    for i, raw in enumerate(_op_lists(tree)):
        out.append(AssemblySequence(f"tmp-{i}", _to_ops(raw), tree))
    return out


def sequence_label(s: AssemblySequence) -> str:
    """Place subjects and non-root fasten subassembly ids, concatenated."""
    root_id = s.tree.subassembly_id if isinstance(s.tree, Join) else None
    symbols = []
    for op in s.ops:
        if op.kind == PLACE:
            symbols.append(op.subject)
        elif op.kind == FASTEN and op.subject != root_id:
            symbols.append(op.subject)
    return "".join(symbols)


def enumerate_sequences(g: LiaisonGraph, cap: int = DEFAULT_SEQUENCE_CAP) -> SequenceEnumeration:
    """Linearizations over all merge trees, deduplicated, capped, stable."""
    enum = enumerate_merge_trees(g, cap)
    seqs: list[AssemblySequence] = []
    seen: set[tuple] = set()
    truncated = enum.truncated
    for tree in enum.trees:
        for seq in linearize_tree(tree):
            sig = tuple((o.kind, o.subject) for o in seq.ops)
            if sig in seen:
                continue
            seen.add(sig)
            if len(seqs) >= cap:
                truncated = True
                break
            seqs.append(seq)
        if len(seqs) >= cap and truncated:
            break
    final = tuple(
        AssemblySequence(f"S{i:03d}", s.ops, s.tree) for i, s in enumerate(seqs)
    )
    return SequenceEnumeration(final, truncated)


# -------------------------------------------------------------- precedence

def precedence_edges(s: AssemblySequence) -> list[tuple[int, int]]:
    """Dependency edges between op indices.

    Unload(P) precedes Place(P); a node's fasten follows both children's
    completion ops; and when the second-linearized child of a join is a bare
    part, its place waits for the first child's completion (the part mates
    against that structure). Sibling subassembly blocks stay independent so
    parallel branches can share levels.
    """
    pos = {(op.kind, op.subject): i for i, op in enumerate(s.ops)}
    edges: list[tuple[int, int]] = []
    for op in s.ops:
        if op.kind == PLACE:
            edges.append((pos[(UNLOAD, op.subject)], pos[(PLACE, op.subject)]))

    def completion(node: MergeNode) -> tuple[str, str]:
        if isinstance(node, Leaf):
            return (PLACE, node.part_id)
        return (FASTEN, node.subassembly_id)

    def walk(node: MergeNode) -> None:
        if isinstance(node, Leaf):
            return
        walk(node.left)
        walk(node.right)
        fasten_idx = pos[(FASTEN, node.subassembly_id)]
        ca, cb = completion(node.left), completion(node.right)
        edges.append((pos[ca], fasten_idx))
        edges.append((pos[cb], fasten_idx))
        first, second = (node.left, node.right) if pos[ca] < pos[cb] else (node.right, node.left)
        if isinstance(second, Leaf):
            edges.append((pos[completion(first)], pos[(PLACE, second.part_id)]))

    walk(s.tree)
    return sorted(set(edges))
