"""Kinematic digital twin: cell state, robot kinematics, motion planning and
the ability services that generated control code calls."""

from .kinematics import Capsule, DhRow, KinematicChain, Unreachable, fk, fk_frames, ik, ur5e_chain

__all__ = [
    "Capsule",
    "DhRow",
    "KinematicChain",
    "Unreachable",
    "fk",
    "fk_frames",
    "ik",
    "ur5e_chain",
]
