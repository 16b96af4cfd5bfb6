"""Offset-map prediction from a trained generator."""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np

from ..errors import MapMismatchError, NetShapeError, SemanticError, StatsMismatchError
from ..maps.norm import NormStats, denormalize, normalize
from ..maps.uvmap import Semantic, UVMap
from .checkpoint import Checkpoint, load_checkpoint
from .generator import GeneratorNet

PathLike = Union[str, Path]

WINDOW_SEMANTICS = (Semantic.VELOCITY,) * 3 + (Semantic.ACCELERATION,) * 3


def window_array(window: Sequence[UVMap], stats: NormStats) -> np.ndarray:
    """
    (1, 18, H, W) network input from six body maps ordered
    v[k-2], v[k-1], v[k], a[k-2], a[k-1], a[k]. Raw maps are normalized,
    already-normalized maps pass through.
    """
    if len(window) != 6:
        raise ValueError(f"a body window has 6 maps, got {len(window)}")
    chans = []
    for m, semantic in zip(window, WINDOW_SEMANTICS):
        if m.semantic == Semantic.NORMALIZED:
            chans.append(m.channels_first())
        elif m.semantic == semantic:
            chans.append(normalize(m, stats).channels_first())
        else:
            raise SemanticError(f"expected a {semantic.name.lower()} map, got {m.semantic.name.lower()}")
    return np.concatenate(chans)[None].astype(np.float32)


def infer(net: GeneratorNet, window: Sequence[UVMap], stats: NormStats,
          masks: Dict[str, np.ndarray]) -> Dict[str, UVMap]:
    """
    Offset maps in meters for every template from one forward pass, each
    masked with its template mask.
    """
    x = window_array(window, stats)
    size = x.shape[2]
    for t in net.templates:
        if masks[t].shape != (size, size):
            raise MapMismatchError(f"{t} mask is {masks[t].shape}, input is {size}x{size}")
    outputs = net.predict(x)
    return {t: offsets_from_output(outputs[t][0], masks[t], stats, t) for t in net.templates}


def offsets_from_output(head: np.ndarray, mask: np.ndarray, stats: NormStats, template: str) -> UVMap:
    """(3, H, W) normalized head output to a masked offset map in meters."""
    normalized = UVMap.create(np.transpose(head, (1, 2, 0)), mask, Semantic.NORMALIZED)
    return denormalize(normalized, stats, f"offset/{template}")


@dataclass
class Predictor:
    """A generator restored from a checkpoint plus the stats it was trained with."""

    net: GeneratorNet
    stats: NormStats
    checkpoint: Checkpoint

    @classmethod
    def load(cls, path: PathLike, stats: NormStats, resolution: Optional[int] = None) -> "Predictor":
        ckpt = load_checkpoint(path)
        if ckpt.stats_hash and ckpt.stats_hash != stats.digest():
            raise StatsMismatchError(f"{path} was trained with different normalization stats")
        if resolution is not None and resolution != ckpt.resolution:
            raise NetShapeError(f"{path} was trained at {ckpt.resolution}x{ckpt.resolution}, data is {resolution}x{resolution}")
        return cls(ckpt.build_generator(), stats, ckpt)

    def predict_batch(self, x: np.ndarray) -> Dict[str, np.ndarray]:
        if x.shape[2] != self.checkpoint.resolution:
            raise NetShapeError(f"input is {x.shape[2]}x{x.shape[3]}, network expects {self.checkpoint.resolution}")
        return self.net.predict(x.astype(np.float32))

    def __call__(self, window: Sequence[UVMap], masks: Dict[str, np.ndarray]) -> Dict[str, UVMap]:
        if window[0].width != self.checkpoint.resolution:
            raise NetShapeError(f"maps are {window[0].width}x{window[0].width}, network expects {self.checkpoint.resolution}")
        return infer(self.net, window, self.stats, masks)
