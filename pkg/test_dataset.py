"""Dataset configuration, manifest, split and sample windows."""

import json
from dataclasses import replace

import numpy as np
import pytest

from uvdrape.body.actions import action_catalog
from uvdrape.config import TEMPLATES, WINDOW_START
from uvdrape.dataset.generate import FIRST_MOTION_FRAME, frame_file, mask_file, stats_keys, template_params
from uvdrape.dataset.manifest import (
    TEST,
    TRAIN,
    ActionEntry,
    DatasetConfig,
    Manifest,
    load_manifest,
    save_manifest,
    split_actions,
)
from uvdrape.dataset.samples import SampleReader, load_sample, stack_samples
from uvdrape.errors import (
    ConfigError,
    DatasetError,
    FormatVersionError,
    StatsMismatchError,
    WindowUnderflowError,
)
from uvdrape.maps.norm import NormStats
from uvdrape.maps.uvmap import Semantic, UVMap, save_uvmap
from uvdrape.sim.params import FABRIC_PRESETS, SimParams


def manifest_of(names, frames=10, **kwargs):
    return Manifest(actions=tuple(ActionEntry(n, frames) for n in names), resolution=16, fps=30.0,
                    shape={}, sim_hash="s", **kwargs)


def test_frame_names():
    assert frame_file(7, "v") == "0007_v.uvm"
    assert frame_file(12, "a") == "0012_a.uvm"
    assert frame_file(7, "o", "dress") == "0007_o_dress.uvm"
    assert mask_file("body") == "body_mask.uvm"


def test_window_constants():
    # acceleration at k-2 reaches back to position k-4
    assert WINDOW_START == 4
    assert FIRST_MOTION_FRAME == 2


def test_sample_count():
    assert ActionEntry("a", 30).sample_count == 26
    assert ActionEntry("a", 3).sample_count == 0
    assert manifest_of(["a", "b"], frames=10).sample_count() == 12


def test_split_of_catalog():
    manifest = split_actions(manifest_of(action_catalog(34)), 22 / 34)
    assert len(manifest.names(TRAIN)) == 22
    assert len(manifest.names(TEST)) == 12
    # whole actions only
    assert set(manifest.names(TRAIN)).isdisjoint(manifest.names(TEST))


def test_split_is_order_independent():
    names = action_catalog(10)
    a = split_actions(manifest_of(names), 0.7)
    b = split_actions(manifest_of(list(reversed(names))), 0.7)
    assert sorted(a.names(TRAIN)) == sorted(b.names(TRAIN))


def test_split_keeps_both_sides():
    manifest = split_actions(manifest_of(["a", "b"]), 0.99)
    assert len(manifest.names(TRAIN)) == 1
    assert len(manifest.names(TEST)) == 1


def test_split_validation():
    with pytest.raises(ValueError):
        split_actions(manifest_of(["a", "b"]), 1.0)
    with pytest.raises(DatasetError):
        split_actions(manifest_of(["a"]), 0.5)


def test_dataset_config_validation():
    with pytest.raises(ValueError):
        DatasetConfig(resolution=24)
    with pytest.raises(ValueError):
        DatasetConfig(frames=WINDOW_START)
    with pytest.raises(ValueError):
        DatasetConfig(fabrics={"tops": "silk-velvet"})
    with pytest.raises(ConfigError):
        DatasetConfig.from_dict({"frame": 10})
    cfg = DatasetConfig.from_dict({"actions": ["jump", "walking"], "resolution": 32})
    assert cfg.actions == ("jump", "walking")


def test_template_fabrics():
    params = template_params(SimParams(), {"bottoms": "denim"})
    assert params["bottoms"].fabric == FABRIC_PRESETS["denim"]
    assert params["tops"] == SimParams()
    with pytest.raises(KeyError):
        template_params(SimParams(), {"tops": "silk-velvet"})


def test_stats_keys():
    assert stats_keys() == ["velocity", "acceleration", "offset/tops", "offset/bottoms", "offset/dress"]


def test_manifest_round_trip(tmp_path):
    manifest = split_actions(manifest_of(["jump", "walking", "punch"], stats_hash="abc"), 0.6)
    save_manifest(manifest, tmp_path)
    back = load_manifest(tmp_path)
    assert back.root == tmp_path
    assert replace(back, root=None) == manifest
    assert back.action("jump").frames == 10
    with pytest.raises(DatasetError):
        back.action("cartwheel")


def test_manifest_version_check(tmp_path):
    path = save_manifest(manifest_of(["a", "b"]), tmp_path)
    data = json.loads(path.read_text())
    data["format_version"] = 99
    path.write_text(json.dumps(data))
    with pytest.raises(FormatVersionError):
        load_manifest(path)


def test_missing_manifest(tmp_path):
    with pytest.raises(DatasetError):
        load_manifest(tmp_path)


def unit_stats():
    unit = (-np.ones(3), np.ones(3))
    return NormStats({key: unit for key in stats_keys()})


def write_dataset(root, frames=6, size=4):
    """One normalized action whose map values encode the frame index."""
    stats = unit_stats()
    manifest = manifest_of(["wave"], frames=frames, stats_hash=stats.digest(), root=root)
    stats.save(manifest.stats_path())
    full = np.ones((size, size), dtype=bool)
    templates = root / "templates"
    templates.mkdir(parents=True)
    for name in ("body",) + TEMPLATES:
        save_uvmap(UVMap.zeros(full, Semantic.OFFSET), templates / mask_file(name))
    directory = manifest.action_dir("wave") / "frames"
    directory.mkdir(parents=True)
    for k in range(FIRST_MOTION_FRAME, frames):
        value = np.full((size, size, 3), k / 10.0)
        save_uvmap(UVMap.create(value, full, Semantic.NORMALIZED), directory / frame_file(k, "v"))
        save_uvmap(UVMap.create(-value, full, Semantic.NORMALIZED), directory / frame_file(k, "a"))
        if k >= WINDOW_START:
            for t in TEMPLATES:
                save_uvmap(UVMap.create(value, full, Semantic.NORMALIZED), directory / frame_file(k, "o", t))
    return manifest


def test_sample_window(tmp_path):
    reader = SampleReader(write_dataset(tmp_path))
    sample = reader.load("wave", 5)
    x = sample.input_array()
    assert x.shape == (18, 4, 4)
    # v[k-2], v[k-1], v[k], a[k-2], a[k-1], a[k]
    np.testing.assert_allclose(x[::3, 0, 0], [0.3, 0.4, 0.5, -0.3, -0.4, -0.5], atol=1e-6)
    assert sample.target_array().shape == (9, 4, 4)
    assert sample.mask_array().shape == (3, 4, 4)
    offsets = sample.offsets("dress", reader.stats)
    assert offsets.semantic == Semantic.OFFSET
    np.testing.assert_allclose(offsets.valid_values(), 0.5, atol=1e-6)


def test_load_sample(tmp_path):
    sample = load_sample(write_dataset(tmp_path), "wave", 4)
    assert sample.input_array().shape == (18, 4, 4)
    np.testing.assert_allclose(sample.input_array()[0], 0.2, atol=1e-6)


def test_window_bounds(tmp_path):
    reader = SampleReader(write_dataset(tmp_path))
    with pytest.raises(WindowUnderflowError):
        reader.load("wave", WINDOW_START - 1)
    with pytest.raises(DatasetError):
        reader.load("wave", 6)
    assert reader.keys() == [("wave", 4), ("wave", 5)]
    assert set(reader.masks) == {"body", *TEMPLATES}


def test_stack_samples(tmp_path):
    reader = SampleReader(write_dataset(tmp_path))
    x, y, masks = stack_samples(list(reader.iter_samples()))
    assert x.shape == (2, 18, 4, 4)
    assert y.shape == (2, 9, 4, 4)
    assert masks.shape == (2, 3, 4, 4)


def test_reader_checks_stats_hash(tmp_path):
    manifest = write_dataset(tmp_path)
    with pytest.raises(StatsMismatchError):
        SampleReader(replace(manifest, stats_hash="0" * 64))


def test_reader_needs_stats(tmp_path):
    manifest = write_dataset(tmp_path)
    manifest.stats_path().unlink()
    with pytest.raises(DatasetError):
        SampleReader(manifest)


@pytest.mark.slow
def test_generated_dataset(tiny_dataset):
    manifest = load_manifest(tiny_dataset.root)
    assert manifest.stats_hash == tiny_dataset.stats_hash
    assert len(manifest.names(TRAIN)) == 2
    assert len(manifest.names(TEST)) == 1
    assert manifest.sample_count() == 3 * (7 - WINDOW_START)
    reader = SampleReader(manifest)
    x, y, masks = stack_samples(list(reader.iter_samples(TRAIN)))
    assert x.shape == (6, 18, 16, 16)
    # train inputs span the normalized range
    assert x.min() >= -1.0 - 1e-5
    assert x.max() <= 1.0 + 1e-5
    for t in TEMPLATES:
        assert (manifest.root / "templates" / f"{t}.obj").exists()
        assert (manifest.action_dir(manifest.names()[0]) / f"cloth_{t}.csq").exists()
    assert not (manifest.root / ".raw").exists()
