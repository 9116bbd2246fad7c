"""Rigid transforms and closed triangle-mesh primitives.

Conventions, used everywhere downstream: quaternions are (w, x, y, z),
rotations are active, a pose applies rotation then translation, lengths are
meters. Meshes must be closed, consistently outward-wound manifolds;
inside/outside queries are undefined otherwise and construction rejects them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidMesh

UNIT_TOL = 1e-9

# Probe directions for ray-parity containment; non-axis-aligned so that rays
# through box fixtures do not graze edges.  Tried in order until no hit is
# degenerate.
_RAY_DIRS = np.array(
    [
        [0.540297, 0.633847, 0.553193],
        [-0.363271, 0.818418, 0.445238],
        [0.289432, -0.418711, 0.860772],
        [0.715542, 0.172033, -0.677064],
    ]
)
_RAY_DIRS /= np.linalg.norm(_RAY_DIRS, axis=1, keepdims=True)


def _quat_normalize(q: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion")
    q = q / n
    # canonical sign: w >= 0, resolves the double cover deterministically
    if q[0] < 0 or (q[0] == 0 and (q[1] < 0 or (q[1] == 0 and (q[2] < 0 or (q[2] == 0 and q[3] < 0))))):
        q = -q
    return q + 0.0  # drop -0.0


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def _quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _matrix_to_quat(m: np.ndarray) -> np.ndarray:
    # Shepperd's method; numerically safe for proper rotations.
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array([(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array([(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array([(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s])
    return _quat_normalize(q)


class Pose:
    """Rigid transform: active rotation (unit quaternion) then translation."""

    __slots__ = ("q", "t", "_mat")

    def __init__(self, q: Sequence[float] = (1.0, 0.0, 0.0, 0.0), t: Sequence[float] = (0.0, 0.0, 0.0)):
        q = np.asarray(q, dtype=float)
        t = np.asarray(t, dtype=float)
        if q.shape != (4,) or t.shape != (3,):
            raise ValueError("pose needs q(4,) and t(3,)")
        n = np.linalg.norm(q)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {n} too far from 1")
        self.q = _quat_normalize(q)
        self.t = t + 0.0
        self.q.flags.writeable = False
        self.t.flags.writeable = False
        self._mat: np.ndarray | None = None

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float, t: Sequence[float] = (0.0, 0.0, 0.0)) -> "Pose":
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        half = 0.5 * angle
        q = np.concatenate([[np.cos(half)], np.sin(half) * axis])
        return cls(q, t)

    @classmethod
    def from_matrix(cls, rot: np.ndarray, t: Sequence[float]) -> "Pose":
        return cls(_matrix_to_quat(np.asarray(rot, dtype=float)), t)

    @property
    def rotation_matrix(self) -> np.ndarray:
        if self._mat is None:
            m = _quat_to_matrix(self.q)
            m.flags.writeable = False
            self._mat = m
        return self._mat

    def compose(self, other: "Pose") -> "Pose":
        """Pose applying ``other`` first, then ``self``."""
        q = _quat_normalize(_quat_mul(self.q, other.q))
        t = self.t + self.rotation_matrix @ other.t
        return Pose(q, t)

    def inverse(self) -> "Pose":
        m = self.rotation_matrix
        q = _quat_normalize(np.array([self.q[0], -self.q[1], -self.q[2], -self.q[3]]))
        return Pose(q, -(m.T @ self.t))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (n,3) array or a single 3-vector."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation_matrix.T + self.t

    def rotate(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.rotation_matrix.T

    def approx_equal(self, other: "Pose", tol: float = UNIT_TOL) -> bool:
        dq = min(np.linalg.norm(self.q - other.q), np.linalg.norm(self.q + other.q))
        return bool(dq <= tol and np.linalg.norm(self.t - other.t) <= tol)

    def rotation_angle_to(self, other: "Pose") -> float:
        """Absolute angle (radians) between the two rotations."""
        dot = min(1.0, abs(float(np.dot(self.q, other.q))))
        return 2.0 * np.arccos(dot)

    def to_json(self) -> dict:
        return {"q": [float(v) + 0.0 for v in self.q], "t": [float(v) + 0.0 for v in self.t]}

    @classmethod
    def from_json(cls, d: dict) -> "Pose":
        return cls(d["q"], d["t"])

    def __repr__(self) -> str:
        q = ", ".join(f"{v:.6g}" for v in self.q)
        t = ", ".join(f"{v:.6g}" for v in self.t)
        return f"Pose(q=({q}), t=({t}))"


def pose_compose(a: Pose, b: Pose) -> Pose:
    return a.compose(b)


def pose_inverse(a: Pose) -> Pose:
    return a.inverse()


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box, min <= max componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", np.asarray(self.min, dtype=float))
        object.__setattr__(self, "max", np.asarray(self.max, dtype=float))
        if np.any(self.min > self.max):
            raise ValueError("aabb min > max")

    def overlaps(self, other: "Aabb") -> bool:
        return bool(np.all(self.min <= other.max) and np.all(other.min <= self.max))

    def translated(self, offset: np.ndarray) -> "Aabb":
        return Aabb(self.min + offset, self.max + offset)

    def union(self, other: "Aabb") -> "Aabb":
        return Aabb(np.minimum(self.min, other.min), np.maximum(self.max, other.max))

    def diagonal(self) -> float:
        return float(np.linalg.norm(self.max - self.min))

    def grown(self, margin: float) -> "Aabb":
        return Aabb(self.min - margin, self.max + margin)


def aabb_overlaps(a: Aabb, b: Aabb) -> bool:
    """Touching boxes count as overlap."""
    return a.overlaps(b)


class TriMesh:
    """Closed manifold triangle mesh; validated on construction.

    vertices (n,3) float, triangles (m,3) int with outward (positive signed
    volume) winding. Every edge must be shared by exactly two triangles with
    opposite orientation.
    """

    __slots__ = ("vertices", "triangles")

    def __init__(self, vertices: Iterable, triangles: Iterable):
        v = np.asarray(vertices, dtype=float)
        f = np.asarray(triangles, dtype=int)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] == 0:
            raise InvalidMesh("vertices must be a non-empty (n,3) array")
        if f.ndim != 2 or f.shape[1] != 3 or f.shape[0] == 0:
            raise InvalidMesh("triangles must be a non-empty (m,3) array")
        if not np.isfinite(v).all():
            raise InvalidMesh("non-finite vertex coordinates")
        if f.min() < 0 or f.max() >= len(v):
            raise InvalidMesh("triangle index out of range")
        _check_manifold(f)
        self.vertices = v
        self.triangles = f
        self.vertices.flags.writeable = False
        self.triangles.flags.writeable = False
        if self.signed_volume() <= 0:
            raise InvalidMesh("winding is inward (signed volume <= 0)")

    def signed_volume(self) -> float:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return float(np.einsum("ij,ij->", a, np.cross(b, c)) / 6.0)

    def corners(self) -> np.ndarray:
        return self.vertices

    def transformed(self, p: Pose) -> "TriMesh":
        return TriMesh(p.apply(self.vertices), self.triangles)

    def aabb(self) -> Aabb:
        return Aabb(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def tri_coords(self) -> np.ndarray:
        """(m,3,3) array of triangle vertex coordinates."""
        return self.vertices[self.triangles]

    def to_json(self) -> dict:
        return {
            "vertices": [[float(x) for x in row] for row in self.vertices],
            "triangles": [[int(i) for i in row] for row in self.triangles],
        }

    @classmethod
    def from_json(cls, d: dict) -> "TriMesh":
        return cls(d["vertices"], d["triangles"])

    @classmethod
    def box(cls, size: Sequence[float], center: Sequence[float] = (0.0, 0.0, 0.0)) -> "TriMesh":
        """Axis-aligned solid box, outward wound."""
        sx, sy, sz = (s / 2.0 for s in size)
        cx, cy, cz = center
        v = np.array(
            [
                [cx - sx, cy - sy, cz - sz],
                [cx + sx, cy - sy, cz - sz],
                [cx + sx, cy + sy, cz - sz],
                [cx - sx, cy + sy, cz - sz],
                [cx - sx, cy - sy, cz + sz],
                [cx + sx, cy - sy, cz + sz],
                [cx + sx, cy + sy, cz + sz],
                [cx - sx, cy + sy, cz + sz],
            ]
        )
        f = np.array(
            [
                [0, 2, 1], [0, 3, 2],          # bottom (-z)
                [4, 5, 6], [4, 6, 7],          # top (+z)
                [0, 1, 5], [0, 5, 4],          # -y
                [2, 3, 7], [2, 7, 6],          # +y
                [1, 2, 6], [1, 6, 5],          # +x
                [3, 0, 4], [3, 4, 7],          # -x
            ]
        )
        return cls(v, f)


def _check_manifold(f: np.ndarray) -> None:
    if len(np.unique(f, axis=0)) != len(f):
        raise InvalidMesh("duplicate triangle")
    for tri in f:
        if len(set(tri.tolist())) != 3:
            raise InvalidMesh("degenerate triangle (repeated vertex index)")
    # directed edges: each must appear exactly once, and its reverse exactly once
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    directed = set(map(tuple, e.tolist()))
    if len(directed) != len(e):
        raise InvalidMesh("inconsistent winding (repeated directed edge)")
    for a, b in directed:
        if (b, a) not in directed:
            raise InvalidMesh(f"open or non-manifold edge ({a},{b})")


def transform_mesh(m: TriMesh, p: Pose) -> TriMesh:
    return m.transformed(p)


def mesh_aabb(m: TriMesh) -> Aabb:
    return m.aabb()


def bbox_diagonal(m: TriMesh) -> float:
    return m.aabb().diagonal()


# --------------------------------------------------------------------------
# Ray / triangle machinery for the positive-volume overlap test.
# --------------------------------------------------------------------------

def _ray_hits(points: np.ndarray, direction: np.ndarray, tris: np.ndarray):
    """Moller-Trumbore over all (point, triangle) pairs.

    Returns (t, valid, degenerate): line parameters (n,m), a mask of hits
    inside triangles, and a mask of numerically fragile hits (grazing an edge
    or a near-parallel plane) that should trigger a direction retry.
    """
    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0
    p = np.cross(direction, e2)                      # (m,3)
    det = np.einsum("mj,mj->m", e1, p)               # (m,)
    near_parallel = np.abs(det) < 1e-12
    inv = np.where(near_parallel, np.inf, 1.0 / np.where(near_parallel, 1.0, det))
    tvec = points[:, None, :] - v0[None, :, :]       # (n,m,3)
    u = np.einsum("nmj,mj->nm", tvec, p) * inv
    q = np.cross(tvec, e1[None, :, :])
    v = np.einsum("nmj,j->nm", q, direction) * inv
    t = np.einsum("nmj,mj->nm", q, e2) * inv
    with np.errstate(invalid="ignore"):
        inside = (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & ~near_parallel[None, :]
        edge_margin = 1e-10
        fragile = inside & (
            (u < edge_margin) | (v < edge_margin) | (u + v > 1.0 - edge_margin)
        )
    return t, inside, fragile


def _points_depth_inside(points: np.ndarray, mesh_tris: np.ndarray) -> np.ndarray:
    """Penetration depth per point: 0 for outside/on-surface points, else the
    distance to the nearest surface along a fixed probe line (both ways)."""
    t = inside = None
    for d in _RAY_DIRS:
        t, inside, fragile = _ray_hits(points, d, mesh_tris)
        if not np.any(fragile):
            break
        # else: a hit grazed a triangle edge (parity could double count); retry
    abs_t = np.where(inside, np.abs(t), np.inf)
    nearest = abs_t.min(axis=1)
    pos_count = np.sum(inside & (t > 1e-12), axis=1)
    odd = (pos_count % 2) == 1
    return np.where(odd, nearest, 0.0)


def _tri_cross_segments(tris_a: np.ndarray, tris_b: np.ndarray, eps: float) -> bool:
    """True if any triangle pair properly crosses with an intersection segment
    longer than eps (Moller interval test on the plane-intersection line).
    Coplanar pairs are surface contact and do not count."""
    if len(tris_a) == 0 or len(tris_b) == 0:
        return False
    # pairwise AABB prefilter
    amin = tris_a.min(axis=1)
    amax = tris_a.max(axis=1)
    bmin = tris_b.min(axis=1)
    bmax = tris_b.max(axis=1)
    pairs = np.all(amin[:, None, :] <= bmax[None, :, :] + eps, axis=2) & np.all(
        bmin[None, :, :] <= amax[:, None, :] + eps, axis=2
    )
    ia, ib = np.nonzero(pairs)
    if ia.size == 0:
        return False
    A = tris_a[ia]  # (k,3,3)
    B = tris_b[ib]

    na = np.cross(A[:, 1] - A[:, 0], A[:, 2] - A[:, 0])
    nb = np.cross(B[:, 1] - B[:, 0], B[:, 2] - B[:, 0])
    na_len = np.maximum(np.linalg.norm(na, axis=1), 1e-30)
    nb_len = np.maximum(np.linalg.norm(nb, axis=1), 1e-30)
    da = np.einsum("kj,kij->ki", na, B - A[:, 0:1]) / na_len[:, None]  # B verts to plane A
    db = np.einsum("kj,kij->ki", nb, A - B[:, 0:1]) / nb_len[:, None]  # A verts to plane B
    # a proper crossing penetrates beyond eps on both sides of both planes;
    # shallower contact is surface touch, not volume
    straddle = (
        (da.max(axis=1) > eps)
        & (da.min(axis=1) < -eps)
        & (db.max(axis=1) > eps)
        & (db.min(axis=1) < -eps)
    )
    d = np.cross(na, nb)
    dn = np.linalg.norm(d, axis=1)
    keep = straddle & (dn > 1e-14)
    if not np.any(keep):
        return False
    A, B, d = A[keep], B[keep], d[keep]
    dist_a, dist_b = db[keep], da[keep]  # A's verts to plane B, B's verts to plane A
    iv_a = _plane_cross_interval(A, d, dist_a)
    iv_b = _plane_cross_interval(B, d, dist_b)
    lo = np.maximum(iv_a[:, 0], iv_b[:, 0])
    hi = np.minimum(iv_a[:, 1], iv_b[:, 1])
    return bool(np.any(hi - lo > eps))


def _plane_cross_interval(T: np.ndarray, d: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Projection interval of each triangle's plane-crossing segment onto the
    intersection line direction d. dist holds signed distances of the
    triangle's vertices to the other plane (must straddle)."""
    k = len(T)
    dline = d / np.linalg.norm(d, axis=1, keepdims=True)
    proj = np.einsum("kij,kj->ki", T, dline)  # (k,3)
    lo = np.full(k, np.inf)
    hi = np.full(k, -np.inf)
    for i, j in ((0, 1), (1, 2), (2, 0)):
        di, dj = dist[:, i], dist[:, j]
        crosses = (di * dj) < 0
        denom = np.where(crosses, di - dj, 1.0)
        s = np.where(crosses, di / denom, 0.0)
        p = proj[:, i] + s * (proj[:, j] - proj[:, i])
        lo = np.where(crosses, np.minimum(lo, p), lo)
        hi = np.where(crosses, np.maximum(hi, p), hi)
    # vertices exactly on the line contribute a zero-length interval; leave inf
    lo = np.where(np.isinf(lo), 0.0, lo)
    hi = np.where(np.isinf(hi), 0.0, hi)
    return np.stack([lo, hi], axis=1)


def _probe_points(mesh: TriMesh) -> np.ndarray:
    """Vertices plus triangle centroids: surface samples for containment.

    Centroids matter for axis-aligned face-through-face overlaps where every
    vertex of either solid lies exactly on the other's boundary.
    """
    return np.vstack([mesh.vertices, mesh.tri_coords().mean(axis=1)])


def solids_overlap_volume(a: TriMesh, pa: Pose, b: TriMesh, pb: Pose, eps: float = 1e-6) -> bool:
    """True iff the two posed solids share positive volume beyond ``eps``.

    Surface contact (penetration <= eps) is not overlap. Volume is detected
    when a surface sample of one solid sits strictly inside the other deeper
    than eps, or when a triangle pair properly crosses with an intersection
    segment longer than eps.
    """
    wa = a.transformed(pa)
    wb = b.transformed(pb)
    if not wa.aabb().grown(eps).overlaps(wb.aabb()):
        return False
    ta = wa.tri_coords()
    tb = wb.tri_coords()
    box = wa.aabb().grown(eps)
    pts_b = _probe_points(wb)
    cand_b = pts_b[np.all((pts_b >= box.min) & (pts_b <= box.max), axis=1)]
    if cand_b.size and np.any(_points_depth_inside(cand_b, ta) > eps):
        return True
    box = wb.aabb().grown(eps)
    pts_a = _probe_points(wa)
    cand_a = pts_a[np.all((pts_a >= box.min) & (pts_a <= box.max), axis=1)]
    if cand_a.size and np.any(_points_depth_inside(cand_a, tb) > eps):
        return True
    return _tri_cross_segments(ta, tb, eps)
