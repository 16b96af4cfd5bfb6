"""UV rasterization, baking, motion maps, normalization and the map file format."""

import numpy as np
import pytest

from uvdrape.errors import (
    DegenerateChannelError,
    FormatVersionError,
    MapMismatchError,
    SemanticError,
    UVLayoutError,
)
from uvdrape.geometry.mesh import TriMesh, grid_mesh, unit_cube
from uvdrape.maps.bake import acceleration_map, bake_positions, motion_maps, velocity_map
from uvdrape.maps.norm import NormStats, denormalize, fit_norm, normalize
from uvdrape.maps.raster import rasterize_uv_layout
from uvdrape.maps.uvmap import Semantic, UVMap, check_compatible, load_uvmap, save_uvmap


def constant_map(value, width=4, semantic=Semantic.POSITION, mask=None):
    mask = np.ones((width, width), dtype=bool) if mask is None else mask
    return UVMap.create(np.broadcast_to(np.asarray(value, dtype=np.float64), (width, width, 3)), mask, semantic)


def test_full_triangle_covers_ten_pixels(triangle):
    layout = rasterize_uv_layout(triangle, 4)
    assert layout.valid_count == 10
    expected = np.add.outer(np.arange(4), np.arange(4)) <= 3
    np.testing.assert_array_equal(layout.mask, expected)
    np.testing.assert_allclose(layout.valid_barycentrics().sum(axis=1), 1.0)


def test_grid_layout_covers_everything():
    layout = rasterize_uv_layout(grid_mesh(4, 4), 16)
    assert layout.valid_count == 256
    assert layout.overlap_pixels == 0


def test_layout_needs_uvs():
    with pytest.raises(UVLayoutError):
        rasterize_uv_layout(unit_cube(), 8)


def test_overlapping_layout_is_rejected():
    mesh = TriMesh.create(
        [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1), (0, 1, 1)],
        [(0, 1, 2), (3, 4, 5)],
        uv_coords=[(0, 0), (1, 0), (0, 1)] * 2,
    )
    with pytest.raises(UVLayoutError):
        rasterize_uv_layout(mesh, 8)


def test_bake_identity_positions():
    grid = grid_mesh(2, 2)
    layout = rasterize_uv_layout(grid, 8)
    baked = bake_positions(layout, grid)
    assert baked.semantic == Semantic.POSITION
    # the grid maps u, v straight onto x, y
    np.testing.assert_allclose(baked.valid_values()[:, :2], layout.pixel_uv()[layout.mask], atol=1e-12)


def test_bake_is_linear_in_translation():
    grid = grid_mesh(3, 3)
    layout = rasterize_uv_layout(grid, 8)
    shift = np.array([0.2, -0.1, 0.05])
    base = bake_positions(layout, grid)
    moved = bake_positions(layout, grid.with_vertices(grid.vertices + shift))
    np.testing.assert_allclose(moved.valid_values() - base.valid_values(), np.tile(shift, (base.valid_count, 1)),
                               atol=1e-12)


def test_bake_vertex_count_mismatch(triangle):
    layout = rasterize_uv_layout(triangle, 4)
    with pytest.raises(MapMismatchError):
        bake_positions(layout, grid_mesh(2, 2))


def test_velocity_and_acceleration():
    positions = [constant_map(x) for x in (0.0, 1.0, 3.0)]
    velocities, accelerations = motion_maps(positions)
    assert velocities[0] is None
    assert accelerations[1] is None
    np.testing.assert_allclose(velocities[1].data, 1.0)
    np.testing.assert_allclose(velocities[2].data, 2.0)
    np.testing.assert_allclose(accelerations[2].data, 1.0)
    assert velocities[2].semantic == Semantic.VELOCITY
    assert accelerations[2].semantic == Semantic.ACCELERATION


def test_motion_maps_check_semantics():
    with pytest.raises(SemanticError):
        velocity_map(constant_map(1.0, semantic=Semantic.VELOCITY), constant_map(0.0))
    with pytest.raises(SemanticError):
        acceleration_map(constant_map(1.0), constant_map(0.0))


def test_mask_mismatch():
    mask = np.ones((4, 4), dtype=bool)
    mask[0, 0] = False
    with pytest.raises(MapMismatchError):
        check_compatible(constant_map(1.0), constant_map(1.0, mask=mask))


def test_invalid_pixels_hold_zero():
    mask = np.zeros((4, 4), dtype=bool)
    mask[1, 2] = True
    m = constant_map(5.0, mask=mask)
    assert m.data[0, 0].tolist() == [0.0, 0.0, 0.0]
    assert m.data[1, 2].tolist() == [5.0, 5.0, 5.0]


def test_maps_are_square():
    with pytest.raises(MapMismatchError):
        UVMap.create(np.zeros((4, 8, 3)), np.ones((4, 8), dtype=bool), Semantic.POSITION)


def test_non_finite_values():
    with pytest.raises(ValueError):
        constant_map(np.nan)


def ramp_maps(rng, count=3):
    return [UVMap.create(rng.normal(size=(8, 8, 3)), np.ones((8, 8), dtype=bool), Semantic.VELOCITY)
            for _ in range(count)]


def test_normalized_span(rng):
    maps = ramp_maps(rng)
    stats = fit_norm(maps, "velocity")
    values = np.concatenate([normalize(m, stats).valid_values() for m in maps])
    np.testing.assert_allclose(values.min(axis=0), -1.0)
    np.testing.assert_allclose(values.max(axis=0), 1.0)


def test_normalize_round_trip(rng):
    maps = ramp_maps(rng)
    stats = fit_norm(maps, "velocity")
    back = denormalize(normalize(maps[1], stats), stats, "velocity")
    assert back.semantic == Semantic.VELOCITY
    np.testing.assert_allclose(back.data, maps[1].data, atol=1e-12)


def test_degenerate_channel():
    with pytest.raises(DegenerateChannelError) as info:
        fit_norm([constant_map([1.0, 2.0, 3.0], semantic=Semantic.VELOCITY)], "velocity")
    assert info.value.channel == "velocity.x"


def test_offset_stats_need_key(rng):
    offsets = UVMap.create(rng.normal(size=(4, 4, 3)), np.ones((4, 4), dtype=bool), Semantic.OFFSET)
    stats = fit_norm([offsets], "offset/dress")
    with pytest.raises(SemanticError):
        normalize(offsets, stats)
    assert normalize(offsets, stats, "offset/dress").semantic == Semantic.NORMALIZED
    with pytest.raises(SemanticError):
        normalize(offsets, stats, "velocity")


def test_stats_file_round_trip(tmp_path, rng):
    stats = fit_norm(ramp_maps(rng), "velocity")
    path = tmp_path / "stats.json"
    stats.save(path)
    back = NormStats.load(path)
    assert back.keys() == ["velocity"]
    assert back.digest() == stats.digest()


def test_uvmap_file_round_trip(tmp_path, rng):
    mask = rng.random((8, 8)) > 0.3
    m = UVMap.create(rng.normal(size=(8, 8, 3)), mask, Semantic.OFFSET)
    path = tmp_path / "offsets.uvm"
    save_uvmap(m, path)
    back = load_uvmap(path)
    assert back.semantic == Semantic.OFFSET
    np.testing.assert_array_equal(back.mask, mask)
    np.testing.assert_allclose(back.data, m.data.astype(np.float32), rtol=0, atol=0)


def test_uvmap_bad_magic(tmp_path):
    path = tmp_path / "bad.uvm"
    save_uvmap(constant_map(1.0), path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatVersionError):
        load_uvmap(path)


def test_uvmap_truncated(tmp_path):
    path = tmp_path / "short.uvm"
    save_uvmap(constant_map(1.0), path)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(FormatVersionError):
        load_uvmap(path)
