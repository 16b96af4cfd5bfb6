"""BVH construction and ray queries."""

import numpy as np
import pytest

from uvdrape.errors import EmptyMeshError
from uvdrape.geometry.bvh import brute_force_intersect, build_bvh, cast_rays, intersect, intersect_many
from uvdrape.geometry.mesh import Ray, TriMesh, grid_mesh, icosphere


def test_single_triangle_is_one_leaf(triangle):
    bvh = build_bvh(triangle)
    assert bvh.node_count == 1
    assert bvh.depth() == 1


def test_node_count_on_large_grid():
    grid = grid_mesh(32, 16)
    assert grid.face_count == 1024
    bvh = build_bvh(grid)
    assert 511 <= bvh.node_count <= 2047
    assert sorted(bvh.triangle_order.tolist()) == list(range(1024))


def test_empty_mesh():
    empty = TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3)))
    with pytest.raises(EmptyMeshError):
        build_bvh(empty)


def test_hit_through_center(triangle):
    bvh = build_bvh(triangle)
    hit = intersect(bvh, triangle, Ray.create((0.25, 0.25, 1.0), (0, 0, -1)))
    assert hit is not None
    assert hit.face_index == 0
    assert hit.distance == pytest.approx(1.0)
    assert sum(hit.barycentric) == pytest.approx(1.0)
    np.testing.assert_allclose(hit.barycentric, (0.5, 0.25, 0.25), atol=1e-12)


def test_parallel_ray_misses(triangle):
    bvh = build_bvh(triangle)
    assert intersect(bvh, triangle, Ray.create((0.25, 0.25, 0.0), (1, 0, 0))) is None


def test_hit_behind_origin_is_ignored(triangle):
    bvh = build_bvh(triangle)
    assert intersect(bvh, triangle, Ray.create((0.25, 0.25, 1.0), (0, 0, 1))) is None


def test_t_max_limits_hits(triangle):
    bvh = build_bvh(triangle)
    ray = Ray.create((0.25, 0.25, 1.0), (0, 0, -1))
    assert intersect(bvh, triangle, ray, t_max=0.5) is None
    assert intersect(bvh, triangle, ray, t_max=1.0) is not None


def test_negative_t_min(triangle):
    bvh = build_bvh(triangle)
    with pytest.raises(ValueError):
        intersect(bvh, triangle, Ray.create((0, 0, 1), (0, 0, -1)), t_min=-1.0)


def test_zero_direction():
    with pytest.raises(ValueError):
        Ray.create((0, 0, 0), (0, 0, 0))


def test_shared_edge_ties_to_lower_face(quad):
    bvh = build_bvh(quad)
    hit = intersect(bvh, quad, Ray.create((0.5, 0.5, 1.0), (0, 0, -1)))
    assert hit.face_index == 0


def test_matches_brute_force(rng):
    grid = grid_mesh(16, 16)
    bumps = np.zeros_like(grid.vertices)
    bumps[:, 2] = rng.normal(scale=0.05, size=grid.vertex_count)
    surface = grid.with_vertices(grid.vertices + bumps)
    assert surface.face_count == 512
    bvh = build_bvh(surface)
    origins = rng.uniform(-0.5, 1.5, size=(1000, 3))
    origins[:, 2] = rng.uniform(0.3, 1.0, size=1000) * rng.choice([-1.0, 1.0], size=1000)
    targets = rng.uniform(-0.2, 1.2, size=(1000, 3))
    targets[:, 2] = 0.0
    hits = intersect_many(bvh, surface, origins, targets - origins)
    misses = 0
    for o, d, hit in zip(origins, targets - origins, hits):
        expected = brute_force_intersect(surface, Ray.create(o, d))
        if expected is None:
            assert hit is None
            misses += 1
        else:
            assert hit.face_index == expected.face_index
            assert hit.distance == pytest.approx(expected.distance, rel=1e-9)
    assert 0 < misses < 1000


def test_cast_rays_marks_misses(triangle):
    bvh = build_bvh(triangle)
    origins = np.array([[0.25, 0.25, 1.0], [2.0, 2.0, 1.0], [0.25, 0.25, -1.0]])
    directions = np.array([[0.0, 0.0, -1.0], [0.0, 0.0, -1.0], [0.0, 0.0, 1.0]])
    hits = cast_rays(bvh, triangle, origins, directions)
    assert hits.face_index.tolist() == [0, -1, 0]
    assert hits.mask.tolist() == [True, False, True]
    np.testing.assert_allclose(hits.distance, [1.0, 0.0, 1.0])
    np.testing.assert_allclose(hits.barycentric[1], 0.0)
    assert hits.hit(1) is None
    assert hits.hit(0).face_index == 0


def test_cast_rays_agrees_with_single_queries(rng):
    sphere = icosphere(3, radius=0.3, center=(0.1, 1.0, -0.2))
    bvh = build_bvh(sphere)
    origins = rng.uniform(-1.0, 1.0, size=(50, 3)) + np.array([0.1, 1.0, -0.2])
    directions = rng.normal(size=(50, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    hits = cast_rays(bvh, sphere, origins, directions, t_max=0.8)
    for i, (o, d) in enumerate(zip(origins, directions)):
        single = intersect(bvh, sphere, Ray.create(o, d), t_max=0.8)
        assert (single is None) == (hits.face_index[i] < 0)
        if single is not None:
            assert single.face_index == hits.face_index[i]
            assert single.distance == pytest.approx(hits.distance[i], rel=1e-12)


def test_inside_ray_hits_far_side():
    sphere = icosphere(2)
    bvh = build_bvh(sphere)
    hit = intersect(bvh, sphere, Ray.create((0, 0, 0), (0, 1, 0)))
    assert hit is not None
    assert 0.9 < hit.distance <= 1.0
