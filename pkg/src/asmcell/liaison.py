"""Part-connectivity (liaison) graph built from the joint register.

Parts are nodes; every declared joint (rigid or fastener alike) contributes
to the edge between its two parts. The fastener distinction is consumed later
by tooling matching, not here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .design import JointRegister


@dataclass(frozen=True)
class LiaisonGraph:
    nodes: frozenset[str]
    edges: dict[frozenset[str], tuple[str, ...]]  # unordered pair -> joint ids

    def neighbors(self, node: str) -> set[str]:
        out = set()
        for pair in self.edges:
            if node in pair:
                out |= set(pair) - {node}
        return out

    def joints_between(self, a: str, b: str) -> tuple[str, ...]:
        return self.edges.get(frozenset((a, b)), ())

    def joint_count(self) -> int:
        return sum(len(v) for v in self.edges.values())


def build_liaison_graph(register: JointRegister, parts: set[str]) -> LiaisonGraph:
    edges: dict[frozenset[str], list[str]] = {}
    for joint_id in sorted(register.entries):
        part_a, part_b, _kind = register.entries[joint_id]
        if part_a not in parts or part_b not in parts:
            raise KeyError(f"joint {joint_id!r} references part outside the given set")
        edges.setdefault(frozenset((part_a, part_b)), []).append(joint_id)
    return LiaisonGraph(frozenset(parts), {k: tuple(v) for k, v in edges.items()})


def connected_components(g: LiaisonGraph) -> list[set[str]]:
    remaining = set(g.nodes)
    components = []
    while remaining:
        seed = min(remaining)  # deterministic order
        comp = {seed}
        frontier = [seed]
        while frontier:
            node = frontier.pop()
            for other in g.neighbors(node):
                if other in remaining and other not in comp:
                    comp.add(other)
                    frontier.append(other)
        components.append(comp)
        remaining -= comp
    return sorted(components, key=lambda c: min(c))


def graph_to_json(g: LiaisonGraph) -> dict:
    """Adjacency-list dump for feedback reports."""
    adjacency: dict[str, dict[str, list[str]]] = {n: {} for n in sorted(g.nodes)}
    for pair, joints in g.edges.items():
        a, b = sorted(pair)
        adjacency[a][b] = list(joints)
        adjacency[b][a] = list(joints)
    return {"nodes": sorted(g.nodes), "adjacency": adjacency}
