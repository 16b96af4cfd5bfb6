"""UV map container and its binary file format.

File layout (little endian)::

    b"UVM1" | u32 width | u32 height | u8 semantic |
    f32 data[height][width][3] | packed validity bits (row-major)

Row ``i`` / column ``j`` samples the pixel center
``u = (j + 0.5) / width``, ``v = (i + 0.5) / height``.
"""

import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from scipy.spatial import cKDTree

from ..config import FALLBACK_PIXEL_RADIUS
from ..errors import FormatVersionError, MapMismatchError

PathLike = Union[str, Path]

MAGIC = b"UVM1"
_HEADER = struct.Struct("<4sIIB")


class Semantic(IntEnum):
    POSITION = 0
    VELOCITY = 1
    ACCELERATION = 2
    OFFSET = 3
    NORMALIZED = 4


UNITS = {
    Semantic.POSITION: "m",
    Semantic.VELOCITY: "m/frame",
    Semantic.ACCELERATION: "m/frame^2",
    Semantic.OFFSET: "m",
    Semantic.NORMALIZED: "1",
}


@dataclass(frozen=True)
class UVMap:
    """
    Square W x H x 3 grid with a validity mask.

    Invalid pixels always hold zeros.
    """

    data: np.ndarray
    mask: np.ndarray
    semantic: Semantic

    @classmethod
    def create(cls, data, mask, semantic: Semantic) -> "UVMap":
        d = np.array(data, dtype=np.float64)
        m = np.array(mask, dtype=bool)
        if d.ndim != 3 or d.shape[2] != 3 or d.shape[:2] != m.shape:
            raise MapMismatchError(f"data {d.shape} and mask {m.shape} do not form an HxWx3 map")
        if d.shape[0] != d.shape[1]:
            raise MapMismatchError(f"UV maps are square, got {d.shape[1]}x{d.shape[0]}")
        d[~m] = 0.0
        if not np.all(np.isfinite(d)):
            raise ValueError("UV map values must be finite")
        d.setflags(write=False)
        m.setflags(write=False)
        return cls(d, m, Semantic(semantic))

    @classmethod
    def zeros(cls, mask, semantic: Semantic) -> "UVMap":
        mask = np.asarray(mask, dtype=bool)
        return cls.create(np.zeros(mask.shape + (3,)), mask, semantic)

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def valid_count(self) -> int:
        return int(self.mask.sum())

    def valid_values(self) -> np.ndarray:
        """(valid_count, 3) values in row-major pixel order."""
        return self.data[self.mask]

    def channels_first(self) -> np.ndarray:
        """(3, H, W) view for network tensors."""
        return np.transpose(self.data, (2, 0, 1))


def check_compatible(a: UVMap, b: UVMap) -> None:
    """Raise MapMismatchError unless both maps share size and mask."""
    if a.data.shape != b.data.shape:
        raise MapMismatchError(f"map sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    if not np.array_equal(a.mask, b.mask):
        raise MapMismatchError("map validity masks differ")


def save_uvmap(uvmap: UVMap, path: PathLike) -> None:
    header = _HEADER.pack(MAGIC, uvmap.width, uvmap.height, int(uvmap.semantic))
    payload = np.ascontiguousarray(uvmap.data, dtype="<f4").tobytes()
    bits = np.packbits(uvmap.mask.ravel()).tobytes()
    Path(path).write_bytes(header + payload + bits)


def load_uvmap(path: PathLike) -> UVMap:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatVersionError(f"{path}: truncated UV map header")
    magic, width, height, semantic = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatVersionError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    n = width * height
    data_end = _HEADER.size + n * 3 * 4
    bits_len = (n + 7) // 8
    if len(raw) != data_end + bits_len:
        raise FormatVersionError(f"{path}: size {len(raw)} does not match a {width}x{height} map")
    data = np.frombuffer(raw, dtype="<f4", count=n * 3, offset=_HEADER.size).reshape(height, width, 3)
    mask = np.unpackbits(np.frombuffer(raw, dtype=np.uint8, offset=data_end), count=n).astype(bool)
    return UVMap.create(data.astype(np.float64), mask.reshape(height, width), Semantic(semantic))


def sample_bilinear(uvmap: UVMap, uv: np.ndarray,
                    radius: int = FALLBACK_PIXEL_RADIUS) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mask-aware bilinear sampling at UV coordinates.

    Invalid neighbours are dropped and the remaining weights renormalized;
    with no usable neighbour the nearest valid pixel within ``radius``
    pixels is taken.

    Returns:
        (values, found) where ``found`` is False for points with no valid
        pixel in reach; their values are zero.
    """
    h, w = uvmap.height, uvmap.width
    x = uv[:, 0] * w - 0.5
    y = uv[:, 1] * h - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    acc = np.zeros((uv.shape[0], 3))
    total = np.zeros(uv.shape[0])
    for dy, dx, weight in ((0, 0, (1 - fx) * (1 - fy)), (0, 1, fx * (1 - fy)),
                           (1, 0, (1 - fx) * fy), (1, 1, fx * fy)):
        r = y0 + dy
        c = x0 + dx
        inside = (r >= 0) & (r < h) & (c >= 0) & (c < w)
        valid = np.zeros(uv.shape[0], dtype=bool)
        valid[inside] = uvmap.mask[r[inside], c[inside]]
        wv = np.where(valid, weight, 0.0)
        acc[valid] += wv[valid, None] * uvmap.data[r[valid], c[valid]]
        total += wv
    found = total > 1e-12
    values = np.zeros_like(acc)
    values[found] = acc[found] / total[found, None]

    missing = np.flatnonzero(~found)
    if missing.size and uvmap.valid_count:
        rows, cols = np.nonzero(uvmap.mask)
        tree = cKDTree(np.stack([cols, rows], axis=1).astype(np.float64))
        d, idx = tree.query(np.stack([x[missing], y[missing]], axis=1), distance_upper_bound=radius + 0.5)
        near = np.isfinite(d)
        values[missing[near]] = uvmap.data[rows[idx[near]], cols[idx[near]]]
        found[missing[near]] = True
    return values, found
