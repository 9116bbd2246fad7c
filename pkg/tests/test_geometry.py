import math
import random

import numpy as np
import pytest

from asmcell.errors import InvalidMesh
from asmcell.geometry import (
    Aabb,
    Pose,
    TriMesh,
    aabb_overlaps,
    bbox_diagonal,
    mesh_aabb,
    pose_compose,
    pose_inverse,
    solids_overlap_volume,
    transform_mesh,
)


def random_pose(rng: random.Random) -> Pose:
    axis = np.array([rng.gauss(0, 1) for _ in range(3)])
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(-math.pi, math.pi)
    t = [rng.uniform(-2, 2) for _ in range(3)]
    return Pose.from_axis_angle(axis, angle, t)


def signed_volume_oracle(mesh: TriMesh) -> float:
    # independent divergence-theorem evaluation, one triangle at a time
    total = 0.0
    for i, j, k in mesh.triangles:
        a, b, c = mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]
        total += np.dot(a, np.cross(b, c)) / 6.0
    return total


# ----------------------------------------------------------------- poses

def test_identity_compose():
    p = Pose.from_axis_angle([0, 0, 1], 0.7, [1, 2, 3])
    q = pose_compose(Pose.identity(), p)
    assert q.approx_equal(p)


def test_rotation_moves_point():
    p = Pose.from_axis_angle([0, 0, 1], math.pi / 2)
    out = p.apply(np.array([1.0, 0.0, 0.0]))
    assert np.allclose(out, [0, 1, 0], atol=1e-12)


def test_inverse_identity():
    assert pose_inverse(Pose.identity()).approx_equal(Pose.identity())


def test_inverse_pure_translation():
    p = Pose(t=(0, 0, 0.1))
    assert np.allclose(pose_inverse(p).t, [0, 0, -0.1])


def test_group_laws_random():
    rng = random.Random(7)
    for _ in range(1000):
        p = random_pose(rng)
        assert pose_compose(p, pose_inverse(p)).approx_equal(Pose.identity(), 1e-9)
    a, b, c = (random_pose(rng) for _ in range(3))
    left = pose_compose(pose_compose(a, b), c)
    right = pose_compose(a, pose_compose(b, c))
    assert left.approx_equal(right, 1e-9)


def test_pose_roundtrip_points():
    rng = random.Random(3)
    pts = np.array([[rng.uniform(-1, 1) for _ in range(3)] for _ in range(50)])
    for _ in range(100):
        p = random_pose(rng)
        back = pose_inverse(p).apply(p.apply(pts))
        assert np.abs(back - pts).max() < 1e-9


# ----------------------------------------------------------------- meshes

def test_transform_mesh_identity():
    cube = TriMesh.box([1, 1, 1], center=[0.5, 0.5, 0.5])
    out = transform_mesh(cube, Pose.identity())
    assert np.allclose(out.vertices, cube.vertices)
    assert np.array_equal(out.triangles, cube.triangles)


def test_transform_mesh_translation_shifts_aabb():
    cube = TriMesh.box([1, 1, 1], center=[0.5, 0.5, 0.5])
    out = transform_mesh(cube, Pose(t=(1, 0, 0)))
    box = mesh_aabb(out)
    assert np.allclose(box.min, [1, 0, 0])
    assert np.allclose(box.max, [2, 1, 1])


def test_rigid_transform_preserves_signed_volume():
    rng = random.Random(11)
    mesh = TriMesh.box([0.3, 0.2, 0.5])
    before = signed_volume_oracle(mesh)
    for _ in range(20):
        after = signed_volume_oracle(transform_mesh(mesh, random_pose(rng)))
        assert abs(after - before) < 1e-9


def test_mesh_aabb_unit_cube():
    cube = TriMesh.box([1, 1, 1], center=[0.5, 0.5, 0.5])
    box = mesh_aabb(cube)
    assert np.allclose(box.min, [0, 0, 0]) and np.allclose(box.max, [1, 1, 1])


def test_mesh_aabb_rotated_cube_extent():
    cube = TriMesh.box([1, 1, 1])
    rot = Pose.from_axis_angle([0, 0, 1], math.pi / 4)
    box = mesh_aabb(transform_mesh(cube, rot))
    # analytic: corners at distance sqrt(2)/2 from the axis
    assert abs((box.max[0] - box.min[0]) - math.sqrt(2)) < 1e-9


def test_open_shell_rejected():
    with pytest.raises(InvalidMesh):
        TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


def test_flat_plate_rejected():
    # 1x1x0 "plate": two triangles, zero volume, open edges
    with pytest.raises(InvalidMesh):
        TriMesh(
            [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]],
            [[0, 1, 2], [0, 2, 3]],
        )


def test_inward_winding_rejected():
    cube = TriMesh.box([1, 1, 1])
    flipped = cube.triangles[:, ::-1]
    with pytest.raises(InvalidMesh):
        TriMesh(cube.vertices, flipped)


def test_bbox_diagonal_values():
    assert abs(bbox_diagonal(TriMesh.box([1, 1, 1])) - math.sqrt(3)) < 1e-12
    d = bbox_diagonal(TriMesh.box([0.04, 0.04, 0.08]))
    assert abs(d - math.sqrt(0.0096)) < 1e-12
    assert abs(d - 0.09798) < 1e-5


# ----------------------------------------------------------------- aabb

def test_aabb_overlap_cases():
    a = Aabb([0, 0, 0], [1, 1, 1])
    assert not aabb_overlaps(a, Aabb([2, 2, 2], [3, 3, 3]))
    assert aabb_overlaps(a, Aabb([1, 1, 1], [2, 2, 2]))  # face contact counts
    assert aabb_overlaps(a, Aabb([0.5, 0.5, 0.5], [1.5, 1.5, 1.5]))


# ----------------------------------------------------------------- overlap

CUBE = TriMesh.box([1, 1, 1], center=[0.5, 0.5, 0.5])


def test_overlap_disjoint():
    assert not solids_overlap_volume(CUBE, Pose.identity(), CUBE, Pose(t=(2, 0, 0)))


def test_overlap_half():
    assert solids_overlap_volume(CUBE, Pose.identity(), CUBE, Pose(t=(0.5, 0, 0)))


def test_overlap_face_contact_is_not_volume():
    assert not solids_overlap_volume(CUBE, Pose.identity(), CUBE, Pose(t=(1, 0, 0)), eps=1e-6)


def test_overlap_containment():
    small = TriMesh.box([0.2, 0.2, 0.2], center=[0.5, 0.5, 0.5])
    assert solids_overlap_volume(CUBE, Pose.identity(), small, Pose.identity())
    assert solids_overlap_volume(small, Pose.identity(), CUBE, Pose.identity())


def test_overlap_crossing_without_contained_vertices():
    # long thin bar through the cube: no bar vertex inside the cube and no
    # cube vertex inside the bar, only proper triangle crossings
    bar = TriMesh.box([4, 0.2, 0.2], center=[0.5, 0.5, 0.5])
    assert solids_overlap_volume(CUBE, Pose.identity(), bar, Pose.identity())


def test_overlap_symmetric_and_transform_invariant():
    rng = random.Random(5)
    offsets = [(0.5, 0, 0), (2.0, 0, 0), (0.9, 0.9, 0.9), (0.2, -0.3, 0.4)]
    for off in offsets:
        pa, pb = Pose.identity(), Pose(t=off)
        base = solids_overlap_volume(CUBE, pa, CUBE, pb)
        assert base == solids_overlap_volume(CUBE, pb, CUBE, pa)
        for _ in range(5):
            g = random_pose(rng)
            assert base == solids_overlap_volume(CUBE, pose_compose(g, pa), CUBE, pose_compose(g, pb))


def test_overlap_implies_aabb_overlap():
    rng = random.Random(13)
    for _ in range(200):
        size_a = [rng.uniform(0.2, 1.5) for _ in range(3)]
        size_b = [rng.uniform(0.2, 1.5) for _ in range(3)]
        a = TriMesh.box(size_a)
        b = TriMesh.box(size_b)
        pa = random_pose(rng)
        pb = random_pose(rng)
        if solids_overlap_volume(a, pa, b, pb):
            assert aabb_overlaps(mesh_aabb(transform_mesh(a, pa)), mesh_aabb(transform_mesh(b, pb)))


def test_overlap_tiny_penetration_below_eps_ignored():
    shift = 1.0 - 1e-9
    assert not solids_overlap_volume(CUBE, Pose.identity(), CUBE, Pose(t=(shift, 0, 0)), eps=1e-6)
    shift = 1.0 - 1e-3
    assert solids_overlap_volume(CUBE, Pose.identity(), CUBE, Pose(t=(shift, 0, 0)), eps=1e-6)
