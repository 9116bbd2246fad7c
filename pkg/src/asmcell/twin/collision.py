"""Capsule and mesh proximity queries for the motion planner.

Robot links are capsules; parts and obstacles are closed meshes. Capsule
versus mesh uses exact segment-triangle distance; part versus part uses the
positive-volume overlap test so that intended surface contact (insertion,
seating) never reads as a collision.
"""

from __future__ import annotations

import numpy as np

from ..geometry import Aabb, TriMesh


def point_triangle_distance(p: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Distance from one point to each triangle (m,3,3)."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    n = np.cross(b - a, c - a)
    nn = np.linalg.norm(n, axis=1)
    nn = np.where(nn < 1e-15, 1.0, nn)
    n_unit = n / nn[:, None]
    dist_plane = np.einsum("mj,mj->m", p[None, :] - a, n_unit)
    proj = p[None, :] - dist_plane[:, None] * n_unit
    # barycentric test of the projection
    v0, v1 = b - a, c - a
    v2 = proj - a
    d00 = np.einsum("mj,mj->m", v0, v0)
    d01 = np.einsum("mj,mj->m", v0, v1)
    d11 = np.einsum("mj,mj->m", v1, v1)
    d20 = np.einsum("mj,mj->m", v2, v0)
    d21 = np.einsum("mj,mj->m", v2, v1)
    denom = d00 * d11 - d01 * d01
    denom = np.where(np.abs(denom) < 1e-18, 1.0, denom)
    u = (d11 * d20 - d01 * d21) / denom
    v = (d00 * d21 - d01 * d20) / denom
    inside = (u >= 0) & (v >= 0) & (u + v <= 1)
    edge_d = np.minimum.reduce(
        [
            _point_segment_distance(p, a, b),
            _point_segment_distance(p, b, c),
            _point_segment_distance(p, c, a),
        ]
    )
    return np.where(inside, np.abs(dist_plane), edge_d)


def _point_segment_distance(p: np.ndarray, s0: np.ndarray, s1: np.ndarray) -> np.ndarray:
    d = s1 - s0
    dd = np.einsum("mj,mj->m", d, d)
    dd = np.where(dd < 1e-18, 1.0, dd)
    t = np.clip(np.einsum("mj,mj->m", p[None, :] - s0, d) / dd, 0.0, 1.0)
    closest = s0 + t[:, None] * d
    return np.linalg.norm(p[None, :] - closest, axis=1)


def _segment_segment_distance(p0, p1, q0, q1) -> np.ndarray:
    """Distance between one segment (p0,p1) and many segments (q0,q1: (m,3))."""
    d1 = p1 - p0  # (3,)
    d2 = q1 - q0  # (m,3)
    r = p0[None, :] - q0
    a = float(np.dot(d1, d1))
    e = np.einsum("mj,mj->m", d2, d2)
    f = np.einsum("mj,mj->m", d2, r)
    c = np.einsum("j,mj->m", d1, r)
    b = np.einsum("j,mj->m", d1, d2)
    denom = a * e - b * b
    denom_safe = np.where(np.abs(denom) < 1e-18, 1.0, denom)
    s = np.where(np.abs(denom) > 1e-18, np.clip((b * f - c * e) / denom_safe, 0.0, 1.0), 0.0)
    e_safe = np.where(e < 1e-18, 1.0, e)
    t = (b * s + f) / e_safe
    t_clamped = np.clip(t, 0.0, 1.0)
    a_safe = a if a > 1e-18 else 1.0
    s = np.where(t != t_clamped, np.clip((b * t_clamped - c) / a_safe, 0.0, 1.0), s)
    cp1 = p0[None, :] + s[:, None] * d1[None, :]
    cp2 = q0 + t_clamped[:, None] * d2
    return np.linalg.norm(cp1 - cp2, axis=1)


def segment_triangle_distance(p0: np.ndarray, p1: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Distance from a segment to each triangle; 0 when it pierces one."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    dists = np.minimum(point_triangle_distance(p0, tris), point_triangle_distance(p1, tris))
    for e0, e1 in ((a, b), (b, c), (c, a)):
        dists = np.minimum(dists, _segment_segment_distance(p0, p1, e0, e1))
    # piercing test: segment crosses the triangle plane inside the triangle
    n = np.cross(b - a, c - a)
    denom = np.einsum("mj,j->m", n, p1 - p0)
    safe = np.where(np.abs(denom) < 1e-15, 1.0, denom)
    t = np.einsum("mj,mj->m", n, a - p0[None, :]) / safe
    valid = (np.abs(denom) >= 1e-15) & (t >= 0.0) & (t <= 1.0)
    hit = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    v0, v1 = b - a, c - a
    v2 = hit - a
    d00 = np.einsum("mj,mj->m", v0, v0)
    d01 = np.einsum("mj,mj->m", v0, v1)
    d11 = np.einsum("mj,mj->m", v1, v1)
    d20 = np.einsum("mj,mj->m", v2, v0)
    d21 = np.einsum("mj,mj->m", v2, v1)
    denom2 = d00 * d11 - d01 * d01
    denom2 = np.where(np.abs(denom2) < 1e-18, 1.0, denom2)
    u = (d11 * d20 - d01 * d21) / denom2
    v = (d00 * d21 - d01 * d20) / denom2
    pierced = valid & (u >= 0) & (v >= 0) & (u + v <= 1)
    return np.where(pierced, 0.0, dists)


def capsule_aabb(p0: np.ndarray, p1: np.ndarray, radius: float) -> Aabb:
    lo = np.minimum(p0, p1) - radius
    hi = np.maximum(p0, p1) + radius
    return Aabb(lo, hi)


def capsule_mesh_collides(p0: np.ndarray, p1: np.ndarray, radius: float, mesh_tris: np.ndarray, mesh_box: Aabb) -> bool:
    if not capsule_aabb(p0, p1, radius).overlaps(mesh_box):
        return False
    return bool(np.any(segment_triangle_distance(p0, p1, mesh_tris) < radius))


def capsule_capsule_collides(p0, p1, r1, q0, q1, r2) -> bool:
    d = _segment_segment_distance(np.asarray(p0), np.asarray(p1), np.asarray(q0)[None, :], np.asarray(q1)[None, :])
    return bool(d[0] < r1 + r2)


def world_tris(mesh: TriMesh, pose) -> np.ndarray:
    return pose.apply(mesh.vertices)[mesh.triangles]
