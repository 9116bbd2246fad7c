"""Shipped sample designs, tooling and cells.

The flagship sample is a three-part product: two aluminum-profile-style bars
(A and C, same model) bridged by a connector plate (B) held down by four
screws, assembled by a two-arm cell (one gripper robot, one screwdriver
robot, three input jigs, one assembly jig that seats part A). It is sized so
both UR5e-class arms comfortably reach every station.

Also here: a four-part chain for level/parallelism tests, a cage product
whose inner part gets trapped once the lid goes on (feasibility filtering),
and a walled cell for collision feedback.
"""

from __future__ import annotations

import numpy as np

from .cellmatch import CellDescription, JigInstance, Obstacle, RobotSpec, ScrewFeeder
from .design import DesignDoc, FastenerMeta, JointDef, PartDef, RecipeSet, design_to_json
from .geometry import Pose, TriMesh
from .jsonio import write_json
from .tooling import (
    GripperSpec,
    JigSpec,
    ScrewdriverSpec,
    ToolingDb,
    ToolingRecord,
    register_tool,
    tooling_to_json,
)
from .twin.kinematics import Capsule, ur5e_chain

DOWN = (0.0, 1.0, 0.0, 0.0)  # 180 deg about x: tool z points down

PROFILE_SIZE = (0.04, 0.16, 0.04)
CONNECTOR_SIZE = (0.10, 0.04, 0.02)
SCREW_TYPE = "M5x12"

# grasp standoff: TCP sits this far above the part top face, tool z down
GRASP_STANDOFF = 0.08


def _grasp_pose(part_height: float) -> Pose:
    return Pose(DOWN, (0.0, 0.0, part_height / 2 + GRASP_STANDOFF))


def triplet_design(fasteners_reachable: bool = True) -> DesignDoc:
    """Three parts on a liaison path A-B-C, four fastener joints.

    With ``fasteners_reachable=False`` the screw target points move far
    outside any robot's workspace while everything else stays identical;
    planning then fails at the first fasten with reachability feedback.
    """
    profile = TriMesh.box(PROFILE_SIZE)
    connector = TriMesh.box(CONNECTOR_SIZE)
    parts = (
        PartDef("A", "profile", profile, Pose(t=(-0.05, 0.0, 0.02))),
        PartDef("B", "connector", connector, Pose(t=(0.0, 0.0, 0.05))),
        PartDef("C", "profile", profile, Pose(t=(0.05, 0.0, 0.02))),
    )
    x_off = 0.0 if fasteners_reachable else -1.5
    screws = [
        ("J1", "A", "B", (-0.04 + x_off, -0.01, 0.06)),
        ("J2", "A", "B", (-0.04 + x_off, 0.01, 0.06)),
        ("J3", "B", "C", (0.04 + x_off, -0.01, 0.06)),
        ("J4", "B", "C", (0.04 + x_off, 0.01, 0.06)),
    ]
    joints = tuple(
        JointDef(
            jid,
            "fastener",
            a,
            b,
            axis=(0.0, 0.0, -1.0),
            origin=point,
            fastener_meta=FastenerMeta(SCREW_TYPE, point),
        )
        for jid, a, b, point in screws
    )
    grasp_profile = _grasp_pose(PROFILE_SIZE[2])
    grasp_connector = _grasp_pose(CONNECTOR_SIZE[2])
    recipes = RecipeSet(
        grasp_recipes={"profile": (grasp_profile,), "connector": (grasp_connector,)},
        place_recipes={"A": grasp_profile, "B": grasp_connector, "C": grasp_profile},
        jig_part_poses={
            ("JIG_A_IN", "profile"): Pose(t=(0.0, 0.0, 0.02)),
            ("JIG_C_IN", "profile"): Pose(t=(0.0, 0.0, 0.02)),
            ("JIG_B_IN", "connector"): Pose(t=(0.0, 0.0, 0.01)),
            ("JIG_ASM", "profile"): Pose(t=(-0.05, 0.0, 0.02)),
        },
    )
    return DesignDoc("triplet", parts, joints, recipes, eps=1e-6)


def triplet_tooling() -> ToolingDb:
    """Gripper G1 for both models, screwdriver SD1, three input jig models
    and the assembly jig that seats part A."""
    db = ToolingDb()
    db = register_tool(
        db,
        ToolingRecord(
            "G1",
            "gripper",
            gripper=GripperSpec(
                applicable_models=("connector", "profile"),
                grasp_poses={
                    "profile": (_grasp_pose(PROFILE_SIZE[2]),),
                    "connector": (_grasp_pose(CONNECTOR_SIZE[2]),),
                },
                register_states={"open": 0, "close": 1},
            ),
        ),
    )
    db = register_tool(
        db,
        ToolingRecord(
            "SD1",
            "screwdriver",
            screwdriver=ScrewdriverSpec(holder_type="hex", screw_types=(SCREW_TYPE,)),
        ),
    )
    db = register_tool(
        db,
        ToolingRecord(
            "JIG_A_IN",
            "jig",
            jig=JigSpec(("profile",), {"profile": Pose(t=(0.0, 0.0, 0.02))}, "input"),
        ),
    )
    db = register_tool(
        db,
        ToolingRecord(
            "JIG_B_IN",
            "jig",
            jig=JigSpec(("connector",), {"connector": Pose(t=(0.0, 0.0, 0.01))}, "input"),
        ),
    )
    db = register_tool(
        db,
        ToolingRecord(
            "JIG_C_IN",
            "jig",
            jig=JigSpec(("profile",), {"profile": Pose(t=(0.0, 0.0, 0.02))}, "input"),
        ),
    )
    db = register_tool(
        db,
        ToolingRecord(
            "JIG_ASM",
            "jig",
            jig=JigSpec(("profile",), {"profile": Pose(t=(-0.05, 0.0, 0.02))}, "assembly"),
        ),
    )
    return db


def ur5e_capsules() -> tuple[Capsule, ...]:
    """Conservative capsules per link, derived from the chain geometry. The
    last capsule stops short of the flange so tool TCPs may touch work
    surfaces."""
    return (
        Capsule(1, (0.0, -0.1625, 0.0), (0.0, 0.0, 0.0), 0.06),
        Capsule(2, (0.425, 0.0, 0.0), (0.0, 0.0, 0.0), 0.05),
        Capsule(3, (0.3922, 0.0, 0.0), (0.0, 0.0, 0.0), 0.045),
        Capsule(4, (0.0, -0.1333, 0.0), (0.0, 0.0, 0.0), 0.04),
        Capsule(5, (0.0, 0.0997, 0.0), (0.0, 0.0, 0.0), 0.04),
        Capsule(6, (0.0, 0.0, -0.0996), (0.0, 0.0, -0.05), 0.04),
    )


HOME_LEFT = (0.0, -np.pi / 2, np.pi / 2, -np.pi / 2, -np.pi / 2, 0.0)
HOME_RIGHT = (0.0, -np.pi / 2, np.pi / 2, -np.pi / 2, -np.pi / 2, 0.0)


def triplet_cell() -> CellDescription:
    """Two UR5e-class arms facing a shared table: gripper robot on the left,
    screwdriver robot on the right."""
    chain = ur5e_chain()
    caps = ur5e_capsules()
    robots = (
        RobotSpec(
            "robot_l",
            Pose.from_axis_angle((0, 0, 1), 0.0, (-0.45, 0.0, 0.0)),
            chain,
            "G1",
            caps,
            HOME_LEFT,
        ),
        RobotSpec(
            "robot_r",
            Pose.from_axis_angle((0, 0, 1), np.pi, (0.45, 0.0, 0.0)),
            chain,
            "SD1",
            caps,
            HOME_RIGHT,
        ),
    )
    jigs = (
        JigInstance("jig_a_in", "JIG_A_IN", Pose(t=(-0.20, 0.22, 0.0))),
        JigInstance("jig_b_in", "JIG_B_IN", Pose(t=(-0.02, 0.28, 0.0))),
        JigInstance("jig_c_in", "JIG_C_IN", Pose(t=(0.12, 0.22, 0.0))),
        JigInstance("jig_asm", "JIG_ASM", Pose(t=(0.0, -0.18, 0.0))),
    )
    feeders = (ScrewFeeder("feeder_m5", SCREW_TYPE, Pose(DOWN, (0.38, 0.22, 0.10))),)
    return CellDescription("cell_two_arms", robots, jigs, feeders)


def gripper_only_cell() -> CellDescription:
    """Same layout minus the screwdriver robot; fasten ops cannot bind."""
    base = triplet_cell()
    return CellDescription("cell_gripper_only", (base.robots[0],), base.jigs, base.screw_feeders)


def walled_cell() -> CellDescription:
    """Single arm with a tall wall splitting its workspace; targets behind
    the wall provoke in_collision feedback (the +0.15 m lift retry cannot
    clear 0.9 m)."""
    base = triplet_cell()
    wall = Obstacle(
        "wall",
        TriMesh.box((0.04, 0.8, 0.9), center=(0.0, 0.0, 0.45)),
        Pose(t=(-0.15, 0.25, 0.0)),
    )
    return CellDescription("cell_walled", (base.robots[0],), base.jigs, (), (wall,))


# ------------------------------------------------------------------- chain4

def chain4_design() -> DesignDoc:
    """Four equal blocks in a row, rigid joints A-B, B-C, C-D."""
    block = TriMesh.box((0.04, 0.04, 0.04))
    xs = {"A": -0.06, "B": -0.02, "C": 0.02, "D": 0.06}
    parts = tuple(PartDef(p, "blk", block, Pose(t=(x, 0.0, 0.02))) for p, x in sorted(xs.items()))
    joints = tuple(
        JointDef(f"R{i}", "rigid", a, b, axis=(0.0, 0.0, 1.0), origin=((xs[a] + xs[b]) / 2, 0.0, 0.02))
        for i, (a, b) in enumerate((("A", "B"), ("B", "C"), ("C", "D")), start=1)
    )
    grasp = _grasp_pose(0.04)
    recipes = RecipeSet(
        grasp_recipes={"blk": (grasp,)},
        place_recipes={p: grasp for p in xs},
        jig_part_poses={("JIG_BLK_IN", "blk"): Pose(t=(0.0, 0.0, 0.02)), ("JIG_CHAIN_ASM", "blk"): Pose(t=(-0.06, 0.0, 0.02))},
    )
    return DesignDoc("chain4", parts, joints, recipes, eps=1e-6)


def chain4_tooling() -> ToolingDb:
    db = ToolingDb()
    db = register_tool(
        db,
        ToolingRecord(
            "G_BLK",
            "gripper",
            gripper=GripperSpec(("blk",), {"blk": (_grasp_pose(0.04),)}, {"open": 0, "close": 1}),
        ),
    )
    db = register_tool(
        db,
        ToolingRecord(
            "JIG_BLK_IN",
            "jig",
            jig=JigSpec(("blk",), {"blk": Pose(t=(0.0, 0.0, 0.02))}, "input"),
        ),
    )
    db = register_tool(
        db,
        ToolingRecord(
            "JIG_CHAIN_ASM",
            "jig",
            jig=JigSpec(("blk",), {"blk": Pose(t=(-0.06, 0.0, 0.02))}, "assembly"),
        ),
    )
    return db


def chain4_cell(gripper_robots: int = 1) -> CellDescription:
    chain = ur5e_chain()
    caps = ur5e_capsules()
    robots = tuple(
        RobotSpec(
            f"robot_g{i}",
            Pose.from_axis_angle((0, 0, 1), 0.0, (-0.45, 0.25 * i - 0.1, 0.0)),
            chain,
            "G_BLK",
            caps,
            HOME_LEFT,
        )
        for i in range(gripper_robots)
    )
    jigs = tuple(
        JigInstance(f"jig_blk_{i}", "JIG_BLK_IN", Pose(t=(-0.2 + 0.12 * i, 0.25, 0.0))) for i in range(4)
    ) + (JigInstance("jig_chain_asm", "JIG_CHAIN_ASM", Pose(t=(0.0, -0.18, 0.0))),)
    return CellDescription("cell_chain4", robots, jigs)


# --------------------------------------------------------------------- cage

def pocket_tray_mesh(
    outer: tuple[float, float, float] = (0.10, 0.10, 0.05),
    pocket: tuple[float, float] = (0.06, 0.06),
    depth: float = 0.03,
) -> TriMesh:
    """Closed solid tray with a rectangular pocket opening at the top."""
    ox, oy, oz = outer[0] / 2, outer[1] / 2, outer[2]
    px, py = pocket[0] / 2, pocket[1] / 2
    pz = oz - depth  # pocket floor height
    v = [
        (-ox, -oy, 0.0), (ox, -oy, 0.0), (ox, oy, 0.0), (-ox, oy, 0.0),  # 0-3 outer bottom
        (-ox, -oy, oz), (ox, -oy, oz), (ox, oy, oz), (-ox, oy, oz),      # 4-7 outer top
        (-px, -py, oz), (px, -py, oz), (px, py, oz), (-px, py, oz),      # 8-11 pocket rim
        (-px, -py, pz), (px, -py, pz), (px, py, pz), (-px, py, pz),      # 12-15 pocket floor
    ]

    def quad(a, b, c, d):
        return [(a, b, c), (a, c, d)]

    f = []
    f += quad(0, 3, 2, 1)  # bottom, normal -z
    f += quad(0, 1, 5, 4)  # -y wall
    f += quad(1, 2, 6, 5)  # +x wall
    f += quad(2, 3, 7, 6)  # +y wall
    f += quad(3, 0, 4, 7)  # -x wall
    # top ring between outer top and pocket rim, normal +z
    f += quad(4, 5, 9, 8)
    f += quad(5, 6, 10, 9)
    f += quad(6, 7, 11, 10)
    f += quad(7, 4, 8, 11)
    # pocket walls, normals point into the pocket
    f += quad(8, 9, 13, 12)    # -y side of pocket: normal +y
    f += quad(9, 10, 14, 13)   # +x side: normal -x
    f += quad(10, 11, 15, 14)  # +y side: normal -y
    f += quad(11, 8, 12, 15)   # -x side: normal +x
    f += quad(12, 13, 14, 15)  # pocket floor, normal +z
    return TriMesh(v, f)


def cage_design() -> DesignDoc:
    """Pocketed tray T, inner cube P seated in the pocket, lid L on top.

    Liaison path P-T-L. Any merge that joins P against the closed tray+lid
    is geometrically infeasible; building P into the tray first and lidding
    last works.
    """
    tray = pocket_tray_mesh()
    inner = TriMesh.box((0.025, 0.025, 0.025))
    lid = TriMesh.box((0.10, 0.10, 0.01))
    parts = (
        PartDef("L", "lid", lid, Pose(t=(0.0, 0.0, 0.055))),
        PartDef("P", "inner", inner, Pose(t=(0.0, 0.0, 0.0325))),
        PartDef("T", "tray", tray, Pose.identity()),
    )
    joints = (
        JointDef("JP", "rigid", "P", "T", axis=(0.0, 0.0, 1.0), origin=(0.0, 0.0, 0.02)),
        JointDef("JL", "rigid", "T", "L", axis=(0.0, 0.0, 1.0), origin=(0.0, 0.0, 0.05)),
    )
    recipes = RecipeSet(
        grasp_recipes={
            "tray": (Pose(DOWN, (0.0, 0.0, 0.05 + GRASP_STANDOFF)),),
            "inner": (_grasp_pose(0.025),),
            "lid": (Pose(DOWN, (0.0, 0.0, 0.01 / 2 + GRASP_STANDOFF)),),
        },
        place_recipes={},
        jig_part_poses={},
    )
    return DesignDoc("cage", parts, joints, recipes, eps=1e-6)


# --------------------------------------------------------------- file output

def write_sample_files(out_dir, design: DesignDoc | None = None, tooling: ToolingDb | None = None, cells: list[CellDescription] | None = None):
    """Write design.json / tooling.json / cells.json ready for the CLI."""
    from .cellmatch import cell_to_json

    design = design if design is not None else triplet_design()
    tooling = tooling if tooling is not None else triplet_tooling()
    cells = cells if cells is not None else [triplet_cell()]
    paths = {
        "design": write_json(f"{out_dir}/design.json", design_to_json(design)),
        "tooling": write_json(f"{out_dir}/tooling.json", tooling_to_json(tooling)),
        "cells": write_json(f"{out_dir}/cells.json", [cell_to_json(c) for c in cells]),
    }
    return paths
