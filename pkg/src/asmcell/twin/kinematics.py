"""Serial-arm kinematics: standard DH chains, FK, and damped-least-squares IK.

The IK is chain-agnostic: geometric Jacobian, damping 1e-3, up to 200
iterations per seed, seeded random restarts within joint limits. Orientation
error is the rotation vector of R_target R_current^T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch
from ..geometry import Pose

IK_POS_TOL = 1e-8
IK_ROT_TOL = 1e-8
IK_MAX_ITERS = 200
IK_RESTARTS = 16
IK_DAMPING = 1e-3


@dataclass(frozen=True)
class DhRow:
    a: float
    alpha: float
    d: float
    theta_offset: float


@dataclass(frozen=True)
class Capsule:
    """Collision capsule attached to a chain frame (1-based link index)."""

    link: int
    p0: tuple[float, float, float]
    p1: tuple[float, float, float]
    radius: float

    def to_json(self) -> dict:
        return {"link": self.link, "p0": list(self.p0), "p1": list(self.p1), "radius": self.radius}

    @classmethod
    def from_json(cls, d: dict) -> "Capsule":
        return cls(int(d["link"]), tuple(d["p0"]), tuple(d["p1"]), float(d["radius"]))


@dataclass(frozen=True)
class KinematicChain:
    rows: tuple[DhRow, ...]
    joint_limits: tuple[tuple[float, float], ...]
    max_joint_speed: float = np.pi / 2

    def __post_init__(self):
        if len(self.rows) != len(self.joint_limits):
            raise ValueError("one joint limit pair per DH row")
        for lo, hi in self.joint_limits:
            if lo > hi:
                raise ValueError("joint limit lo > hi")

    @property
    def dof(self) -> int:
        return len(self.rows)

    def clamp(self, q: np.ndarray) -> np.ndarray:
        lo = np.array([l for l, _ in self.joint_limits])
        hi = np.array([h for _, h in self.joint_limits])
        return np.clip(q, lo, hi)

    def within_limits(self, q: np.ndarray, tol: float = 1e-9) -> bool:
        return all(lo - tol <= v <= hi + tol for v, (lo, hi) in zip(q, self.joint_limits))

    def to_json(self) -> dict:
        return {
            "dh": [[r.a, r.alpha, r.d, r.theta_offset] for r in self.rows],
            "joint_limits": [list(l) for l in self.joint_limits],
            "max_joint_speed": self.max_joint_speed,
        }

    @classmethod
    def from_json(cls, d: dict) -> "KinematicChain":
        rows = tuple(DhRow(*row) for row in d["dh"])
        limits = tuple((float(lo), float(hi)) for lo, hi in d["joint_limits"])
        return cls(rows, limits, float(d.get("max_joint_speed", np.pi / 2)))


def _dh_transform(row: DhRow, q: float) -> np.ndarray:
    th = q + row.theta_offset
    ct, st = np.cos(th), np.sin(th)
    ca, sa = np.cos(row.alpha), np.sin(row.alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, row.a * ct],
            [st, ct * ca, -ct * sa, row.a * st],
            [0.0, sa, ca, row.d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def fk_frames(chain: KinematicChain, q: np.ndarray) -> list[np.ndarray]:
    """Homogeneous transforms of every chain frame (base excluded), in base
    coordinates; the last entry is the flange."""
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.dof,):
        raise DimensionMismatch(f"expected {chain.dof} joints, got {q.shape}")
    frames = []
    T = np.eye(4)
    for row, qi in zip(chain.rows, q):
        T = T @ _dh_transform(row, qi)
        frames.append(T)
    return frames


def fk(chain: KinematicChain, q: np.ndarray) -> Pose:
    """Flange pose in the robot base frame."""
    T = fk_frames(chain, q)[-1]
    return Pose.from_matrix(T[:3, :3], T[:3, 3])


def _pose_error(current: np.ndarray, target_rot: np.ndarray, target_pos: np.ndarray) -> np.ndarray:
    pos_err = target_pos - current[:3, 3]
    r_err = target_rot @ current[:3, :3].T
    # rotation vector of r_err
    cos_angle = np.clip((np.trace(r_err) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos_angle)
    if angle < 1e-12:
        rot_err = np.zeros(3)
    elif np.pi - angle < 1e-6:
        # near pi: extract axis from the symmetric part
        w = np.sqrt(np.maximum(np.diagonal(r_err) + 1.0, 0.0) / 2.0)
        axis = w / max(np.linalg.norm(w), 1e-12)
        rot_err = axis * angle
    else:
        axis = (
            np.array(
                [r_err[2, 1] - r_err[1, 2], r_err[0, 2] - r_err[2, 0], r_err[1, 0] - r_err[0, 1]]
            )
            / (2.0 * np.sin(angle))
        )
        rot_err = axis * angle
    return np.concatenate([pos_err, rot_err])


def _jacobian(frames: list[np.ndarray]) -> np.ndarray:
    p_end = frames[-1][:3, 3]
    cols = []
    z_prev = np.array([0.0, 0.0, 1.0])
    p_prev = np.zeros(3)
    for i in range(len(frames)):
        cols.append(np.concatenate([np.cross(z_prev, p_end - p_prev), z_prev]))
        z_prev = frames[i][:3, :3] @ np.array([0.0, 0.0, 1.0])
        p_prev = frames[i][:3, 3]
    return np.array(cols).T  # 6 x dof


class Unreachable(Exception):
    """IK exhausted all restarts without converging inside the limits."""


def ik(
    chain: KinematicChain,
    target: Pose,
    seed: np.ndarray,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Joint vector q with fk(q) within 1e-6 m / 1e-6 rad of the target.

    Raises Unreachable when no seed converges.
    """
    seed = np.asarray(seed, dtype=float)
    if seed.shape != (chain.dof,):
        raise DimensionMismatch(f"expected {chain.dof} joints, got {seed.shape}")
    rng = rng or np.random.default_rng(0)
    target_rot = target.rotation_matrix
    target_pos = target.t
    lo = np.array([l for l, _ in chain.joint_limits])
    hi = np.array([h for _, h in chain.joint_limits])
    seeds = [seed] + [rng.uniform(lo, hi) for _ in range(IK_RESTARTS)]
    for q0 in seeds:
        q = chain.clamp(np.array(q0, dtype=float))
        prev_norm = np.inf
        stall = 0
        for _ in range(IK_MAX_ITERS):
            frames = fk_frames(chain, q)
            err = _pose_error(frames[-1], target_rot, target_pos)
            if np.linalg.norm(err[:3]) < IK_POS_TOL and np.linalg.norm(err[3:]) < IK_ROT_TOL:
                return q
            norm = np.linalg.norm(err)
            stall = stall + 1 if norm > prev_norm - 1e-14 else 0
            if stall >= 5:
                break  # local minimum; next restart
            prev_norm = min(prev_norm, norm)
            J = _jacobian(frames)
            JJt = J @ J.T + (IK_DAMPING ** 2) * np.eye(6)
            dq = J.T @ np.linalg.solve(JJt, err)
            step = np.linalg.norm(dq)
            if step > 0.5:
                dq *= 0.5 / step
            q = chain.clamp(q + dq)
        frames = fk_frames(chain, q)
        err = _pose_error(frames[-1], target_rot, target_pos)
        if np.linalg.norm(err[:3]) < 1e-6 and np.linalg.norm(err[3:]) < 1e-6:
            return q
    raise Unreachable(f"no IK solution for target {target!r}")


@dataclass(frozen=True)
class Trajectory:
    """Joint waypoints with strictly increasing timestamps (seconds)."""

    waypoints: tuple[tuple[float, ...], ...]
    timestamps: tuple[float, ...]

    def __post_init__(self):
        if len(self.waypoints) != len(self.timestamps):
            raise ValueError("one timestamp per waypoint")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValueError("timestamps must strictly increase")

    @property
    def duration(self) -> float:
        return self.timestamps[-1] - self.timestamps[0] if self.timestamps else 0.0

    def to_json(self) -> dict:
        return {
            "waypoints": [list(w) for w in self.waypoints],
            "timestamps": list(self.timestamps),
        }


def ur5e_chain(max_joint_speed: float = np.pi / 2) -> KinematicChain:
    """Standard-DH parameters of a UR5e-class 6-axis arm (~0.85 m reach)."""
    rows = (
        DhRow(0.0, np.pi / 2, 0.1625, 0.0),
        DhRow(-0.425, 0.0, 0.0, 0.0),
        DhRow(-0.3922, 0.0, 0.0, 0.0),
        DhRow(0.0, np.pi / 2, 0.1333, 0.0),
        DhRow(0.0, -np.pi / 2, 0.0997, 0.0),
        DhRow(0.0, 0.0, 0.0996, 0.0),
    )
    limits = tuple((-2 * np.pi, 2 * np.pi) for _ in rows)
    return KinematicChain(rows, limits, max_joint_speed)
