"""Body-to-cloth correspondences, garment binding and reconstruction."""

from pathlib import Path

import numpy as np
import pytest

from uvdrape.body.actions import make_action
from uvdrape.body.skinning import pose_body
from uvdrape.config import TEMPLATES
from uvdrape.dataset.rig import build_rig
from uvdrape.errors import FormatVersionError, GarmentBindingError, MapMismatchError, SemanticError
from uvdrape.geometry.mesh import TriMesh, grid_mesh, merge_meshes
from uvdrape.maps.raster import rasterize_uv_layout
from uvdrape.maps.uvmap import Semantic, UVMap, sample_bilinear
from uvdrape.sim.garments import build_garment
from uvdrape.sim.params import SimParams
from uvdrape.sim.sequence import simulate_sequence
from uvdrape.transfer.binding import (
    RAY,
    UNBOUND,
    bind_garment,
    face_at_uv,
    fit_bilinear,
    load_binding,
    save_binding,
    sidecar_path,
    uv_islands,
)
from uvdrape.transfer.body_to_cloth import bake_offsets, compute_body_to_cloth
from uvdrape.transfer.reconstruct import reconstruct_garment, reconstruct_vertices

GAP = 0.1


@pytest.fixture
def plane_body():
    """Unit body plane at z = 0 whose UVs equal its x, y coordinates."""
    return grid_mesh(16, 16)


@pytest.fixture
def plane_cloth():
    """Smaller cloth plane floating GAP above the body."""
    return grid_mesh(6, 6, size=(0.6, 0.6), origin=(0.2, 0.2, GAP))


@pytest.fixture
def body_uv(plane_body):
    return rasterize_uv_layout(plane_body, 16)


def test_normal_rays_measure_the_gap(plane_body, body_uv, plane_cloth):
    transfer = compute_body_to_cloth(plane_body, body_uv, plane_cloth, "tops")
    assert 0 < transfer.hit_count < body_uv.valid_count
    np.testing.assert_allclose(transfer.distance[transfer.mask], GAP, atol=1e-12)
    # hits only where the cloth is above the body
    uv = body_uv.pixel_uv()[transfer.mask]
    assert uv.min() >= 0.2 - 1e-9
    assert uv.max() <= 0.8 + 1e-9


def test_ray_cap_drops_far_cloth(plane_body, body_uv):
    far = grid_mesh(2, 2, origin=(0.0, 0.0, 1.0))
    transfer = compute_body_to_cloth(plane_body, body_uv, far, max_distance=0.5)
    assert transfer.hit_count == 0


def test_offsets_at_rest(plane_body, body_uv, plane_cloth):
    transfer = compute_body_to_cloth(plane_body, body_uv, plane_cloth)
    offsets = bake_offsets(transfer, plane_body, plane_cloth, body_uv)
    assert offsets.semantic == Semantic.OFFSET
    np.testing.assert_array_equal(offsets.mask, transfer.mask)
    np.testing.assert_allclose(offsets.valid_values(), np.tile([0.0, 0.0, GAP], (offsets.valid_count, 1)), atol=1e-12)


def test_offsets_ignore_rigid_translation(plane_body, body_uv, plane_cloth):
    transfer = compute_body_to_cloth(plane_body, body_uv, plane_cloth)
    shift = np.array([0.3, 1.2, -0.4])
    rest = bake_offsets(transfer, plane_body, plane_cloth, body_uv)
    moved = bake_offsets(transfer, plane_body.with_vertices(plane_body.vertices + shift),
                         plane_cloth.with_vertices(plane_cloth.vertices + shift), body_uv)
    np.testing.assert_allclose(moved.data, rest.data, atol=1e-12)


def test_offsets_check_vertex_counts(plane_body, body_uv, plane_cloth):
    transfer = compute_body_to_cloth(plane_body, body_uv, plane_cloth)
    with pytest.raises(MapMismatchError):
        bake_offsets(transfer, plane_body, grid_mesh(2, 2), body_uv)


def test_binding_on_parallel_planes(plane_body, body_uv, plane_cloth):
    binding = bind_garment(plane_cloth, plane_body, body_uv)
    assert binding.ray_fraction == 1.0
    assert np.all(binding.status == RAY)
    np.testing.assert_allclose(binding.distance, GAP, atol=1e-12)
    np.testing.assert_allclose(binding.uv, plane_cloth.vertices[:, :2], atol=1e-12)


def test_binding_fails_without_body_uvs(plane_body, body_uv, plane_cloth):
    bare = TriMesh.create(plane_body.vertices, plane_body.faces)
    with pytest.raises(GarmentBindingError):
        bind_garment(plane_cloth, bare, body_uv)


def test_binding_fails_when_cloth_is_out_of_reach(plane_body, body_uv):
    far = grid_mesh(2, 2, origin=(0.0, 0.0, 3.0))
    with pytest.raises(GarmentBindingError):
        bind_garment(far, plane_body, body_uv, max_distance=0.5)


def test_low_threshold_keeps_unbound_vertices(plane_body, body_uv):
    # the outer half of this cloth hangs past the body's edge
    wide = grid_mesh(4, 4, size=(2.0, 2.0), origin=(0.0, 0.0, GAP))
    binding = bind_garment(wide, plane_body, body_uv, max_distance=0.2, min_fraction=0.1)
    assert 0.1 <= binding.bound_fraction < 1.0
    assert np.any(binding.status == UNBOUND)


def test_binding_sidecar_round_trip(tmp_path, plane_body, body_uv, plane_cloth):
    binding = bind_garment(plane_cloth, plane_body, body_uv)
    path = sidecar_path(tmp_path / "shirt.obj")
    assert path.name == "shirt.gbd"
    save_binding(binding, path)
    back = load_binding(path, plane_cloth)
    np.testing.assert_array_equal(back.face_index, binding.face_index)
    np.testing.assert_array_equal(back.status, binding.status)
    np.testing.assert_allclose(back.barycentric, binding.barycentric)
    np.testing.assert_allclose(back.uv, binding.uv)
    assert back.body_vertex_count == plane_body.vertex_count


def test_binding_sidecar_checks(tmp_path, plane_body, body_uv, plane_cloth):
    binding = bind_garment(plane_cloth, plane_body, body_uv)
    path = tmp_path / "shirt.gbd"
    save_binding(binding, path)
    with pytest.raises(MapMismatchError):
        load_binding(path, grid_mesh(2, 2))
    path.write_bytes(b"NOPE" + path.read_bytes()[4:])
    with pytest.raises(FormatVersionError):
        load_binding(path, plane_cloth)


def test_reconstruct_rest_pose(plane_body, body_uv, plane_cloth):
    transfer = compute_body_to_cloth(plane_body, body_uv, plane_cloth)
    offsets = bake_offsets(transfer, plane_body, plane_cloth, body_uv)
    binding = bind_garment(plane_cloth, plane_body, body_uv)
    positions, reported = reconstruct_vertices(binding, plane_body, offsets)
    assert reported.size == 0
    np.testing.assert_allclose(positions, plane_cloth.vertices, atol=1e-9)


def test_zero_offsets_collapse_onto_body(plane_body, body_uv, plane_cloth):
    transfer = compute_body_to_cloth(plane_body, body_uv, plane_cloth)
    binding = bind_garment(plane_cloth, plane_body, body_uv)
    garment = reconstruct_garment(binding, plane_body, UVMap.zeros(transfer.mask, Semantic.OFFSET)).mesh
    np.testing.assert_allclose(garment.vertices[:, 2], 0.0, atol=1e-12)
    np.testing.assert_allclose(garment.vertices[:, :2], plane_cloth.vertices[:, :2], atol=1e-12)


def test_reconstruct_needs_offsets(plane_body, body_uv, plane_cloth):
    binding = bind_garment(plane_cloth, plane_body, body_uv)
    normalized = UVMap.zeros(np.ones((16, 16), dtype=bool), Semantic.NORMALIZED)
    with pytest.raises(SemanticError):
        reconstruct_garment(binding, plane_body, normalized)


def test_sampling_skips_invalid_neighbours():
    mask = np.zeros((4, 4), dtype=bool)
    mask[1, 1] = True
    data = np.zeros((4, 4, 3))
    data[1, 1] = (1.0, 2.0, 3.0)
    offsets = UVMap.create(data, mask, Semantic.OFFSET)
    values, found = sample_bilinear(offsets, np.array([[0.5, 0.5], [0.99, 0.99]]), radius=1)
    assert found.tolist() == [True, False]
    np.testing.assert_allclose(values[0], (1.0, 2.0, 3.0))
    np.testing.assert_allclose(values[1], 0.0)


def test_sidecar_name():
    assert sidecar_path("garments/dress.obj") == Path("garments/dress.gbd")


def test_transfer_must_match_the_garment(plane_body, body_uv, plane_cloth):
    other = compute_body_to_cloth(plane_body, body_uv, grid_mesh(3, 3, origin=(0.0, 0.0, GAP)))
    with pytest.raises(MapMismatchError):
        bind_garment(plane_cloth, plane_body, body_uv, t_bc=other)


def test_given_transfer_binds_like_a_fresh_one(plane_body, body_uv, plane_cloth):
    transfer = compute_body_to_cloth(plane_body, body_uv, plane_cloth)
    given = bind_garment(plane_cloth, plane_body, body_uv, t_bc=transfer)
    fresh = bind_garment(plane_cloth, plane_body, body_uv)
    np.testing.assert_array_equal(given.face_index, fresh.face_index)
    np.testing.assert_allclose(given.uv, fresh.uv)


def test_bilinear_fit_inverts_a_flat_cell():
    # corners in (row, col) order: (0, 0), (0, 1), (1, 0), (1, 1)
    cell = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
    points = np.array([[0.3, 0.7, 0.2], [1.5, 0.5, 0.0]])
    s, t = fit_bilinear(np.stack([cell, cell]), points)
    np.testing.assert_allclose(s, [0.3, 1.0], atol=1e-12)
    np.testing.assert_allclose(t, [0.7, 0.5], atol=1e-12)


def test_bilinear_fit_on_a_skewed_cell(rng):
    cell = np.array([[0.0, 0.0, 0.0], [1.0, 0.2, 0.1], [0.1, 0.9, 0.0], [1.3, 1.2, 0.3]])
    s0, t0 = rng.uniform(0.1, 0.9, size=(2, 20))
    w = np.stack([(1 - s0) * (1 - t0), s0 * (1 - t0), (1 - s0) * t0, s0 * t0], axis=1)
    s, t = fit_bilinear(np.tile(cell, (20, 1, 1)), w @ cell)
    np.testing.assert_allclose(s, s0, atol=1e-9)
    np.testing.assert_allclose(t, t0, atol=1e-9)


def test_face_at_uv_finds_the_containing_triangle(plane_body):
    uv = np.array([[0.51, 0.52], [0.07, 0.93]])
    candidates = np.tile(np.arange(plane_body.face_count), (2, 1))
    face, bary = face_at_uv(plane_body, candidates, uv)
    assert np.all(bary >= 0.0)
    np.testing.assert_allclose(bary.sum(axis=1), 1.0)
    np.testing.assert_allclose(plane_body.uv_at(face, bary), uv, atol=1e-12)


def test_uv_islands_split_disconnected_charts():
    both = merge_meshes([grid_mesh(2, 2), grid_mesh(2, 2, origin=(0.0, 0.0, 1.0))])
    islands = uv_islands(both)
    assert len(set(islands[:8].tolist())) == 1
    assert len(set(islands[8:].tolist())) == 1
    assert islands[0] != islands[8]


def test_reconstruction_reports_vertices_without_offsets(plane_body, body_uv, plane_cloth):
    transfer = compute_body_to_cloth(plane_body, body_uv, plane_cloth)
    offsets = bake_offsets(transfer, plane_body, plane_cloth, body_uv)
    # keep only the left columns; the right side of the cloth is out of reach
    mask = offsets.mask.copy()
    mask[:, 6:] = False
    binding = bind_garment(plane_cloth, plane_body, body_uv)
    result = reconstruct_garment(binding, plane_body, UVMap.create(offsets.data, mask, Semantic.OFFSET))
    assert not result.complete
    assert result.filled.size == 0
    far = np.flatnonzero(plane_cloth.vertices[:, 0] > 0.7)
    assert set(far.tolist()) <= set(result.reported.tolist())
    np.testing.assert_allclose(result.mesh.vertices[result.reported, 2], 0.0, atol=1e-12)


def test_reconstruction_lists_filled_vertices(plane_body, body_uv):
    wide = grid_mesh(4, 4, size=(2.0, 2.0), origin=(0.0, 0.0, GAP))
    transfer = compute_body_to_cloth(plane_body, body_uv, wide)
    binding = bind_garment(wide, plane_body, body_uv, max_distance=0.2, min_fraction=0.1)
    result = reconstruct_garment(binding, plane_body, bake_offsets(transfer, plane_body, wide, body_uv))
    np.testing.assert_array_equal(result.filled, np.flatnonzero(binding.status == UNBOUND))
    assert result.reported.size == 0


@pytest.fixture(scope="module")
def rigs():
    return {res: build_rig(resolution=res) for res in (32, 64, 128)}


@pytest.fixture(scope="module")
def swing_cloth(body):
    """Every template simulated through 20 frames of swing_arms."""
    motion = make_action("swing_arms", frames=20)
    cloth = {t: simulate_sequence(build_garment(t, body), body, motion, SimParams()) for t in TEMPLATES}
    return motion, cloth


def rebuild_errors(rig, template, motion, frames, keys):
    """Mean vertex error per frame after baking and rebuilding the simulated cloth."""
    bake_body = rig.bake_body(template)
    uv = rig.bake_uv(template)
    transfer = rig.transfers[template]
    binding = bind_garment(rig.garments[template].mesh, bake_body.template, uv, t_bc=transfer)
    errors = []
    for k in keys:
        body_frame = pose_body(bake_body, motion.frame(k))
        offsets = bake_offsets(transfer, body_frame, frames[k], uv)
        result = reconstruct_garment(binding, body_frame, offsets)
        errors.append(float(np.linalg.norm(result.mesh.vertices - frames[k].vertices, axis=1).mean()))
    return np.array(errors)


@pytest.mark.slow
@pytest.mark.parametrize("template", TEMPLATES)
def test_template_rebuilds_itself_at_rest(rigs, template):
    rig = rigs[128]
    body = rig.bake_body(template).template
    uv = rig.bake_uv(template)
    garment = rig.garments[template].mesh
    binding = bind_garment(garment, body, uv, t_bc=rig.transfers[template])
    assert binding.bound_fraction == 1.0
    offsets = bake_offsets(rig.transfers[template], body, garment, uv)
    positions, reported = reconstruct_vertices(binding, body, offsets)
    assert reported.size == 0
    assert np.linalg.norm(positions - garment.vertices, axis=1).mean() < 1e-3


@pytest.mark.slow
@pytest.mark.parametrize("template", TEMPLATES)
def test_ground_truth_offsets_rebuild_simulated_cloth(rigs, swing_cloth, template):
    motion, cloth = swing_cloth
    frames = cloth[template]
    keys = range(len(frames))
    errors = rebuild_errors(rigs[64], template, motion, frames, keys)
    diagonals = np.array([frames[k].diagonal() for k in keys])
    assert np.mean(errors / diagonals) < 0.02


@pytest.mark.slow
@pytest.mark.parametrize("template", TEMPLATES)
def test_rebuild_error_shrinks_with_resolution(rigs, swing_cloth, template):
    motion, cloth = swing_cloth
    e32, e64, e128 = (rebuild_errors(rigs[res], template, motion, cloth[template], [10])[0] for res in (32, 64, 128))
    assert e32 > e64 > e128
