"""Rasterize a mesh UV layout into a pixel-to-surface table."""

import logging
from dataclasses import dataclass

import numpy as np

from ..config import MAX_LAYOUT_OVERLAP
from ..errors import UVLayoutError
from ..geometry.mesh import TriMesh

logger = logging.getLogger(__name__)

INSIDE_TOLERANCE = -1e-12
INTERIOR_MARGIN = 1e-9


@dataclass(frozen=True)
class UvTransferMap:
    """
    Pixel to surface-point table.

    ``face_index`` is -1 on invalid pixels; ``barycentric`` rows of valid
    pixels are non-negative and sum to 1.
    """

    face_index: np.ndarray
    barycentric: np.ndarray
    vertex_count: int
    overlap_pixels: int = 0

    @property
    def width(self) -> int:
        return int(self.face_index.shape[1])

    @property
    def height(self) -> int:
        return int(self.face_index.shape[0])

    @property
    def mask(self) -> np.ndarray:
        return self.face_index >= 0

    @property
    def valid_count(self) -> int:
        return int(self.mask.sum())

    def valid_faces(self) -> np.ndarray:
        return self.face_index[self.mask]

    def valid_barycentrics(self) -> np.ndarray:
        return self.barycentric[self.mask]

    def pixel_uv(self) -> np.ndarray:
        """(H, W, 2) pixel-center UV coordinates."""
        u = (np.arange(self.width) + 0.5) / self.width
        v = (np.arange(self.height) + 0.5) / self.height
        gu, gv = np.meshgrid(u, v)
        return np.stack([gu, gv], axis=-1)


def rasterize_uv_layout(mesh: TriMesh, width: int, height: int = None) -> UvTransferMap:
    """
    Assign each pixel center to the UV triangle containing it.

    Edges are inclusive and the first face (in index order) to claim a
    pixel keeps it. A later face that contains an already claimed center
    strictly inside counts as overlap; more than 0.1% overlap is an error.
    """
    height = width if height is None else height
    if width != height:
        raise ValueError(f"UV maps are square, got {width}x{height}")
    if width <= 0:
        raise ValueError("map size must be positive")
    if mesh.uv_coords is None:
        raise UVLayoutError("mesh has no uv_coords")

    face_index = np.full((height, width), -1, dtype=np.int64)
    bary = np.zeros((height, width, 3))
    overlap = 0
    uv = mesh.uv_coords[mesh.faces]
    px = uv[..., 0] * width - 0.5
    py = uv[..., 1] * height - 0.5
    for f in range(mesh.face_count):
        (x0, x1, x2), (y0, y1, y2) = px[f], py[f]
        det = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2)
        if abs(det) < 1e-18:
            continue
        j_lo = max(int(np.ceil(min(x0, x1, x2))), 0)
        j_hi = min(int(np.floor(max(x0, x1, x2))), width - 1)
        i_lo = max(int(np.ceil(min(y0, y1, y2))), 0)
        i_hi = min(int(np.floor(max(y0, y1, y2))), height - 1)
        if j_lo > j_hi or i_lo > i_hi:
            continue
        jj, ii = np.meshgrid(np.arange(j_lo, j_hi + 1), np.arange(i_lo, i_hi + 1))
        b0 = ((y1 - y2) * (jj - x2) + (x2 - x1) * (ii - y2)) / det
        b1 = ((y2 - y0) * (jj - x2) + (x0 - x2) * (ii - y2)) / det
        b2 = 1.0 - b0 - b1
        inside = (b0 >= INSIDE_TOLERANCE) & (b1 >= INSIDE_TOLERANCE) & (b2 >= INSIDE_TOLERANCE)
        if not inside.any():
            continue
        rows, cols = ii[inside], jj[inside]
        taken = face_index[rows, cols] >= 0
        interior = ((b0[inside] > INTERIOR_MARGIN) & (b1[inside] > INTERIOR_MARGIN)
                    & (b2[inside] > INTERIOR_MARGIN))
        overlap += int(np.count_nonzero(taken & interior))
        free = ~taken
        w = np.stack([b0[inside][free], b1[inside][free], b2[inside][free]], axis=1)
        w = np.clip(w, 0.0, None)
        w /= w.sum(axis=1, keepdims=True)
        face_index[rows[free], cols[free]] = f
        bary[rows[free], cols[free]] = w

    covered = int((face_index >= 0).sum())
    if covered and overlap > MAX_LAYOUT_OVERLAP * covered:
        raise UVLayoutError(f"overlapping UV layout: {overlap} of {covered} covered pixels claimed twice")
    if overlap:
        logger.debug("%d overlapping pixels within tolerance", overlap)
    return UvTransferMap(face_index, bary, mesh.vertex_count, overlap)
