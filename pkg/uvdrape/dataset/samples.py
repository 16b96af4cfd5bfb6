"""Network samples read back from a generated dataset."""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..config import FORMAT_VERSION, INPUT_CHANNELS, TEMPLATES, WINDOW_START
from ..errors import DatasetError, FormatVersionError, StatsMismatchError, WindowUnderflowError
from ..maps.norm import NormStats, denormalize
from ..maps.uvmap import UVMap, load_uvmap
from .generate import frame_file, mask_file
from .manifest import Manifest


@dataclass(frozen=True)
class DatasetSample:
    """
    One window: six normalized body maps in input order and one
    normalized offset map per template.
    """

    action: str
    k: int
    inputs: Tuple[UVMap, ...]
    targets: Dict[str, UVMap]

    def input_array(self) -> np.ndarray:
        """(18, H, W) float32, channel order v[k-2], v[k-1], v[k], a[k-2], a[k-1], a[k]."""
        return np.concatenate([m.channels_first() for m in self.inputs]).astype(np.float32)

    def target_array(self, templates: Sequence[str] = TEMPLATES) -> np.ndarray:
        return np.concatenate([self.targets[t].channels_first() for t in templates]).astype(np.float32)

    def mask_array(self, templates: Sequence[str] = TEMPLATES) -> np.ndarray:
        return np.stack([self.targets[t].mask for t in templates])

    def offsets(self, template: str, stats: NormStats) -> UVMap:
        """Target offsets back in meters."""
        return denormalize(self.targets[template], stats, f"offset/{template}")


class SampleReader:
    """Reads samples of one dataset after checking its version and stats."""

    def __init__(self, manifest: Manifest):
        if manifest.root is None:
            raise DatasetError("manifest has no dataset root")
        if manifest.format_version != FORMAT_VERSION:
            raise FormatVersionError(
                f"dataset format {manifest.format_version}, expected {FORMAT_VERSION}"
            )
        self.manifest = manifest
        path = manifest.stats_path()
        if not path.exists():
            raise DatasetError(f"{path}: normalization stats missing")
        self.stats = NormStats.load(path)
        if manifest.stats_hash and self.stats.digest() != manifest.stats_hash:
            raise StatsMismatchError(f"{path} does not match the manifest's stats hash")
        self._masks: Optional[Dict[str, np.ndarray]] = None

    def _read(self, path: Path) -> UVMap:
        if not path.exists():
            raise DatasetError(f"{path}: missing sample file")
        return load_uvmap(path)

    @property
    def masks(self) -> Dict[str, np.ndarray]:
        """Validity masks of the body (``body``) and each template."""
        if self._masks is None:
            directory = self.manifest.root / "templates"
            names = ("body",) + tuple(self.manifest.templates)
            self._masks = {n: self._read(directory / mask_file(n)).mask for n in names}
        return self._masks

    def load(self, action: str, k: int) -> DatasetSample:
        entry = self.manifest.action(action)
        if k < WINDOW_START:
            raise WindowUnderflowError(f"frame {k} needs history back to k-{WINDOW_START}; first sample is k={WINDOW_START}")
        if k >= entry.frames:
            raise DatasetError(f"{action} has {entry.frames} frames, no frame {k}")
        directory = self.manifest.action_dir(action) / "frames"
        window = (k - 2, k - 1, k)
        inputs = tuple(self._read(directory / frame_file(j, "v")) for j in window) + tuple(
            self._read(directory / frame_file(j, "a")) for j in window
        )
        targets = {t: self._read(directory / frame_file(k, "o", t)) for t in self.manifest.templates}
        return DatasetSample(action, k, inputs, targets)

    def keys(self, split: Optional[str] = None) -> List[Tuple[str, int]]:
        """(action, k) for every sample, in manifest order."""
        return [(e.name, k) for e in self.manifest.entries(split) for k in range(WINDOW_START, e.frames)]

    def iter_samples(self, split: Optional[str] = None) -> Iterator[DatasetSample]:
        for action, k in self.keys(split):
            yield self.load(action, k)


def load_sample(manifest: Manifest, action: str, k: int) -> DatasetSample:
    return SampleReader(manifest).load(action, k)


def stack_samples(samples: Sequence[DatasetSample],
                  templates: Sequence[str] = TEMPLATES) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch arrays: inputs (B, 18, H, W), targets (B, 9, H, W), masks (B, 3, H, W)."""
    x = np.stack([s.input_array() for s in samples])
    if x.shape[1] != INPUT_CHANNELS:
        raise DatasetError(f"expected {INPUT_CHANNELS} input channels, got {x.shape[1]}")
    y = np.stack([s.target_array(templates) for s in samples])
    m = np.stack([s.mask_array(templates) for s in samples])
    return x, y, m
