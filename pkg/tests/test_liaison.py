import pytest

from asmcell.design import JointRegister
from asmcell.liaison import build_liaison_graph, connected_components, graph_to_json


def test_triplet_graph_structure():
    reg = JointRegister(
        {
            "J1": ("A", "B", "fastener"),
            "J2": ("A", "B", "fastener"),
            "J3": ("B", "C", "fastener"),
            "J4": ("B", "C", "fastener"),
        }
    )
    g = build_liaison_graph(reg, {"A", "B", "C"})
    assert g.nodes == frozenset("ABC")
    assert g.joints_between("A", "B") == ("J1", "J2")
    assert g.joints_between("B", "C") == ("J3", "J4")
    assert g.joints_between("A", "C") == ()
    assert g.joint_count() == len(reg)
    assert len(connected_components(g)) == 1


def test_empty_register_single_part():
    g = build_liaison_graph(JointRegister({}), {"P"})
    assert g.nodes == frozenset({"P"}) and not g.edges


def test_chain_minus_edge_splits():
    reg = JointRegister({"J1": ("A", "B", "rigid"), "J3": ("C", "D", "rigid")})
    g = build_liaison_graph(reg, {"A", "B", "C", "D"})
    assert connected_components(g) == [{"A", "B"}, {"C", "D"}]


def test_register_outside_part_set_rejected():
    reg = JointRegister({"J1": ("A", "Z", "rigid")})
    with pytest.raises(KeyError):
        build_liaison_graph(reg, {"A", "B"})


def test_graph_json_dump():
    reg = JointRegister({"J1": ("A", "B", "rigid")})
    dump = graph_to_json(build_liaison_graph(reg, {"A", "B"}))
    assert dump["nodes"] == ["A", "B"]
    assert dump["adjacency"]["A"]["B"] == ["J1"]
