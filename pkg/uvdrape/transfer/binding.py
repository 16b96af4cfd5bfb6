"""Bind arbitrary garment vertices to the body surface and its UV layout."""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..config import (
    BINDING_CANDIDATES,
    FALLBACK_PIXEL_RADIUS,
    MAX_CELL_STRETCH,
    MAX_RAY_LENGTH,
    MIN_BOUND_FRACTION,
)
from ..errors import FormatVersionError, GarmentBindingError, MapMismatchError
from ..geometry.bvh import build_bvh, cast_rays
from ..geometry.mesh import TriMesh
from ..geometry.proximity import SurfaceProjector
from ..maps.raster import UvTransferMap
from ..maps.uvmap import UVMap, sample_bilinear
from .body_to_cloth import BodyToClothTransfer, bake_offsets, compute_body_to_cloth

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

RAY = 0
FALLBACK = 1
UNBOUND = 2

MAGIC = b"GBD1"
_HEADER = struct.Struct("<4sII")
_RECORD = np.dtype([
    ("face", "<i4"),
    ("bary", "<f8", (3,)),
    ("uv", "<f8", (2,)),
    ("distance", "<f8"),
    ("status", "u1"),
])

_CORNER_ROWS = np.array([0, 0, 1, 1])
_CORNER_COLS = np.array([0, 1, 0, 1])


@dataclass(frozen=True)
class GarmentBinding:
    """
    Per garment vertex: body face, barycentrics, body UV and distance.

    ``status`` is RAY for vertices resolved through a ray correspondence,
    FALLBACK for nearest-point projections and UNBOUND (``face == -1``)
    when nothing lies within the ray cap.
    """

    garment: TriMesh
    face_index: np.ndarray
    barycentric: np.ndarray
    uv: np.ndarray
    distance: np.ndarray
    status: np.ndarray
    body_vertex_count: int

    @property
    def vertex_count(self) -> int:
        return int(self.status.shape[0])

    @property
    def ray_fraction(self) -> float:
        return float(np.mean(self.status == RAY))

    @property
    def bound_fraction(self) -> float:
        """Fraction bound by ray or fallback."""
        return float(np.mean(self.status != UNBOUND))

    @property
    def bound(self) -> np.ndarray:
        return self.status != UNBOUND


def uv_islands(mesh: TriMesh) -> np.ndarray:
    """Per-face id of the connected UV chart the face lies in."""
    n = mesh.vertex_count
    f = mesh.faces
    rows = np.concatenate([f[:, 0], f[:, 1]])
    cols = np.concatenate([f[:, 1], f[:, 2]])
    graph = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels[f[:, 0]]


def bilinear_weights(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Weights of the corners (0, 0), (0, 1), (1, 0), (1, 1) in (row, col) order."""
    return np.stack([(1 - s) * (1 - t), s * (1 - t), (1 - s) * t, s * t], axis=-1)


def fit_bilinear(corners: np.ndarray, points: np.ndarray, iterations: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """
    Parameters in the unit square whose bilinear blend of ``corners``
    (N, 4, 3) lies nearest each of ``points`` (N, 3).

    Projected Gauss-Newton from the cell center; ``s`` runs along columns
    and ``t`` along rows.
    """
    p00, p01, p10, p11 = corners[:, 0], corners[:, 1], corners[:, 2], corners[:, 3]
    s = np.full(points.shape[0], 0.5)
    t = np.full(points.shape[0], 0.5)
    for _ in range(iterations):
        ds = (1 - t)[:, None] * (p01 - p00) + t[:, None] * (p11 - p10)
        dt = (1 - s)[:, None] * (p10 - p00) + s[:, None] * (p11 - p01)
        r = points - np.einsum("nk,nkd->nd", bilinear_weights(s, t), corners)
        a = np.einsum("nd,nd->n", ds, ds)
        b = np.einsum("nd,nd->n", ds, dt)
        c = np.einsum("nd,nd->n", dt, dt)
        gs = np.einsum("nd,nd->n", ds, r)
        gt = np.einsum("nd,nd->n", dt, r)
        det = a * c - b * b
        ok = np.abs(det) > 1e-24
        det = np.where(ok, det, 1.0)
        s = np.clip(s + np.where(ok, (c * gs - b * gt) / det, 0.0), 0.0, 1.0)
        t = np.clip(t + np.where(ok, (a * gt - b * gs) / det, 0.0), 0.0, 1.0)
    return s, t


def face_at_uv(mesh: TriMesh, candidates: np.ndarray, uv: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Of each row of candidate faces, the one whose UV triangle best contains
    the row's ``uv``, with clamped barycentrics.
    """
    tri = mesh.uv_coords[mesh.faces[candidates]]
    a = tri[..., 0, :]
    e0 = tri[..., 1, :] - a
    e1 = tri[..., 2, :] - a
    e2 = uv[:, None, :] - a
    d00 = np.sum(e0 * e0, axis=-1)
    d01 = np.sum(e0 * e1, axis=-1)
    d11 = np.sum(e1 * e1, axis=-1)
    d20 = np.sum(e2 * e0, axis=-1)
    d21 = np.sum(e2 * e1, axis=-1)
    den = d00 * d11 - d01 * d01
    den = np.where(np.abs(den) > 1e-30, den, 1.0)
    w1 = (d11 * d20 - d01 * d21) / den
    w2 = (d00 * d21 - d01 * d20) / den
    bary = np.stack([1.0 - w1 - w2, w1, w2], axis=-1)
    rows = np.arange(uv.shape[0])
    pick = bary.min(axis=-1).argmax(axis=-1)
    bary = np.clip(bary[rows, pick], 0.0, None)
    bary /= bary.sum(axis=1, keepdims=True)
    return candidates[rows, pick], bary


@dataclass(frozen=True)
class _Candidates:
    """Binding proposals; ``vertex`` may repeat."""

    vertex: np.ndarray
    face: np.ndarray
    bary: np.ndarray
    uv: np.ndarray


def _cell_candidates(garment: TriMesh, body_tpose: TriMesh, body_uv: UvTransferMap,
                     t_bc: BodyToClothTransfer, k: int) -> Optional[_Candidates]:
    """Fits inside the pixel cells whose four outward rays hit the garment."""
    hit = t_bc.mask
    h, w = hit.shape
    cloth = np.zeros((h, w, 3))
    base = np.zeros((h, w, 3))
    island = np.full((h, w), -1, dtype=np.int64)
    cloth[hit] = garment.points_at(t_bc.face_index[hit], t_bc.barycentric[hit])
    base[hit] = body_tpose.points_at(body_uv.face_index[hit], body_uv.barycentric[hit])
    island[hit] = uv_islands(body_tpose)[body_uv.face_index[hit]]

    ii, jj = np.meshgrid(np.arange(h - 1), np.arange(w - 1), indexing="ij")
    rr = ii[..., None] + _CORNER_ROWS
    cc = jj[..., None] + _CORNER_COLS
    usable = hit[rr, cc].all(axis=-1) & (island[rr, cc] == island[rr[..., :1], cc[..., :1]]).all(axis=-1)
    rows, cols = np.nonzero(usable)
    if rows.size == 0:
        return None
    r4 = rows[:, None] + _CORNER_ROWS
    c4 = cols[:, None] + _CORNER_COLS
    corners = cloth[r4, c4]
    # cells whose cloth corners scatter across the garment blend unrelated points
    compact = _span(corners) <= MAX_CELL_STRETCH * _span(base[r4, c4])
    rows, cols, r4, c4, corners = rows[compact], cols[compact], r4[compact], c4[compact], corners[compact]
    if rows.size == 0:
        return None

    k = min(k, rows.size)
    _, nearest = cKDTree(corners.mean(axis=1)).query(garment.vertices, k=k)
    nearest = np.reshape(nearest, (garment.vertex_count, k))
    vertex = np.repeat(np.arange(garment.vertex_count), k)
    cell = nearest.ravel()
    s, t = fit_bilinear(corners[cell], garment.vertices[vertex])
    uv = np.stack([(cols[cell] + 0.5 + s) / w, (rows[cell] + 0.5 + t) / h], axis=1)
    face, bary = face_at_uv(body_tpose, body_uv.face_index[r4[cell], c4[cell]], uv)
    return _Candidates(vertex, face, bary, uv)


def _pixel_candidates(garment: TriMesh, body_uv: UvTransferMap,
                      t_bc: BodyToClothTransfer) -> Optional[_Candidates]:
    """The pixel center whose outward hit lies nearest each vertex."""
    rows, cols = np.nonzero(t_bc.mask)
    if rows.size == 0:
        return None
    hits = garment.points_at(t_bc.face_index[rows, cols], t_bc.barycentric[rows, cols])
    _, idx = cKDTree(hits).query(garment.vertices)
    r, c = rows[idx], cols[idx]
    return _Candidates(np.arange(garment.vertex_count), body_uv.face_index[r, c],
                       body_uv.barycentric[r, c], body_uv.pixel_uv()[r, c])


def _inward_candidates(garment: TriMesh, body_tpose: TriMesh, max_distance: float) -> _Candidates:
    """The body point hit along each vertex's inward normal."""
    hits = cast_rays(build_bvh(body_tpose), body_tpose, garment.vertices, -garment.vertex_normals,
                     0.0, max_distance)
    found = hits.mask
    uv = np.zeros((garment.vertex_count, 2))
    uv[found] = body_tpose.uv_at(hits.face_index[found], hits.barycentric[found])
    return _Candidates(np.arange(garment.vertex_count), hits.face_index, hits.barycentric, uv)


def _span(points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(points - points.mean(axis=1, keepdims=True), axis=2).max(axis=1)


def _rest_errors(garment: TriMesh, body_tpose: TriMesh, rest_offsets: UVMap, cand: _Candidates,
                 max_distance: float) -> np.ndarray:
    """Distance between each proposal's T-pose rebuild and its vertex; inf when unusable."""
    errors = np.full(cand.vertex.shape[0], np.inf)
    ok = np.flatnonzero(cand.face >= 0)
    if ok.size == 0:
        return errors
    target = garment.vertices[cand.vertex[ok]]
    base = body_tpose.points_at(cand.face[ok], cand.bary[ok])
    values, found = sample_bilinear(rest_offsets, cand.uv[ok])
    near = np.linalg.norm(target - base, axis=1) <= max_distance
    errors[ok] = np.where(found & near, np.linalg.norm(base + values - target, axis=1), np.inf)
    return errors


def bind_garment(garment: TriMesh, body_tpose: TriMesh, body_uv: UvTransferMap,
                 max_distance: float = MAX_RAY_LENGTH,
                 min_fraction: float = MIN_BOUND_FRACTION,
                 t_bc: Optional[BodyToClothTransfer] = None) -> GarmentBinding:
    """
    Resolve each garment vertex to a body surface point and a body UV.

    Proposals come from the body pixels' outward rays (a bilinear fit inside
    the nearest pixel cells, and the single nearest hit pixel) and from the
    vertex's own inward normal ray. The proposal whose T-pose rebuild lands
    nearest the vertex wins, so body point plus sampled offset recovers the
    vertex. Vertices with no proposal fall back to the nearest body point
    within ``max_distance``.

    ``t_bc`` must have been cast from ``body_uv`` against ``garment``; it is
    computed when omitted. Raises GarmentBindingError when fewer than
    ``min_fraction`` of the vertices end up bound.
    """
    if body_tpose.uv_coords is None:
        raise GarmentBindingError("body mesh has no UV layout")
    if body_uv.vertex_count != body_tpose.vertex_count:
        raise MapMismatchError("body mesh does not match the rasterized layout")
    if t_bc is None:
        t_bc = compute_body_to_cloth(body_tpose, body_uv, garment, max_distance=max_distance)
    elif (t_bc.garment_vertex_count != garment.vertex_count
          or t_bc.body_vertex_count != body_tpose.vertex_count or t_bc.mask.shape != body_uv.mask.shape):
        raise MapMismatchError("body-to-cloth transfer was cast against another garment, body or layout")
    n = garment.vertex_count
    rest_offsets = bake_offsets(t_bc, body_tpose, garment, body_uv)

    proposals = [
        _cell_candidates(garment, body_tpose, body_uv, t_bc, BINDING_CANDIDATES),
        _pixel_candidates(garment, body_uv, t_bc),
        _inward_candidates(garment, body_tpose, max_distance),
    ]
    proposals = [p for p in proposals if p is not None]
    vertex = np.concatenate([p.vertex for p in proposals])
    cand_face = np.concatenate([p.face for p in proposals])
    cand_bary = np.concatenate([p.bary for p in proposals])
    cand_uv = np.concatenate([p.uv for p in proposals])
    errors = np.concatenate([_rest_errors(garment, body_tpose, rest_offsets, p, max_distance) for p in proposals])

    # lowest error per vertex, earliest proposal on ties
    order = np.lexsort((np.arange(vertex.size), errors, vertex))
    first = np.ones(order.size, dtype=bool)
    first[1:] = vertex[order[1:]] != vertex[order[:-1]]
    pick = order[first & np.isfinite(errors[order])]
    chosen = vertex[pick]

    face = np.full(n, -1, dtype=np.int64)
    bary = np.zeros((n, 3))
    uv = np.zeros((n, 2))
    residual = np.full(n, np.nan)
    status = np.full(n, UNBOUND, dtype=np.uint8)
    face[chosen] = cand_face[pick]
    bary[chosen] = cand_bary[pick]
    uv[chosen] = cand_uv[pick]
    residual[chosen] = errors[pick]
    status[chosen] = RAY

    missed = np.flatnonzero(status != RAY)
    if missed.size:
        projector = SurfaceProjector.build(body_tpose)
        f, b, d = projector.project(garment.vertices[missed])
        near = d <= max_distance
        face[missed[near]] = f[near]
        bary[missed[near]] = b[near]
        uv[missed[near]] = body_tpose.uv_at(f[near], b[near])
        status[missed[near]] = FALLBACK
        logger.warning("%d garment vertices had no ray correspondence; %d bound by nearest point",
                       missed.size, int(near.sum()))

    dist = np.zeros(n)
    ok = face >= 0
    dist[ok] = np.linalg.norm(garment.vertices[ok] - body_tpose.points_at(face[ok], bary[ok]), axis=1)
    if chosen.size:
        logger.info("bound %d of %d vertices by ray; T-pose residual mean %.2e m, max %.2e m",
                    chosen.size, n, float(np.nanmean(residual)), float(np.nanmax(residual)))
    binding = GarmentBinding(garment, face, bary, uv, dist, status, body_tpose.vertex_count)
    if binding.bound_fraction < min_fraction:
        raise GarmentBindingError(
            f"only {binding.bound_fraction:.1%} of garment vertices bound (need {min_fraction:.0%})"
        )
    far = uv_coverage(binding, body_uv) < 1.0
    if far:
        logger.warning("some bound vertices have no valid body pixel within %d pixels", FALLBACK_PIXEL_RADIUS)
    return binding


def uv_coverage(binding: GarmentBinding, body_uv: UvTransferMap,
                radius: int = FALLBACK_PIXEL_RADIUS) -> float:
    """Fraction of bound vertices whose UV has a valid body pixel within ``radius``."""
    bound = binding.bound
    if not bound.any():
        return 0.0
    mask = body_uv.mask
    h, w = mask.shape
    cols = np.clip(np.floor(binding.uv[bound, 0] * w).astype(int), 0, w - 1)
    rows = np.clip(np.floor(binding.uv[bound, 1] * h).astype(int), 0, h - 1)
    padded = np.pad(mask, radius)
    hits = np.zeros(rows.shape, dtype=bool)
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            hits |= padded[rows + radius + dr, cols + radius + dc]
    return float(hits.mean())


def save_binding(binding: GarmentBinding, path: PathLike) -> None:
    """Write the GBD1 sidecar (per-vertex records, no garment geometry)."""
    records = np.zeros(binding.vertex_count, dtype=_RECORD)
    records["face"] = binding.face_index
    records["bary"] = binding.barycentric
    records["uv"] = binding.uv
    records["distance"] = binding.distance
    records["status"] = binding.status
    header = _HEADER.pack(MAGIC, binding.vertex_count, binding.body_vertex_count)
    Path(path).write_bytes(header + records.tobytes())


def load_binding(path: PathLike, garment: TriMesh) -> GarmentBinding:
    """Read a GBD1 sidecar for ``garment``."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatVersionError(f"{path}: truncated binding header")
    magic, count, body_count = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatVersionError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if count != garment.vertex_count:
        raise MapMismatchError(f"{path}: binding has {count} vertices, garment has {garment.vertex_count}")
    if len(raw) != _HEADER.size + count * _RECORD.itemsize:
        raise FormatVersionError(f"{path}: size does not match {count} records")
    records = np.frombuffer(raw, dtype=_RECORD, count=count, offset=_HEADER.size)
    return GarmentBinding(
        garment=garment,
        face_index=records["face"].astype(np.int64),
        barycentric=records["bary"].astype(np.float64),
        uv=records["uv"].astype(np.float64),
        distance=records["distance"].astype(np.float64),
        status=records["status"].astype(np.uint8),
        body_vertex_count=int(body_count),
    )


def sidecar_path(garment_path: PathLike) -> Path:
    """``shirt.obj`` -> ``shirt.gbd``."""
    return Path(garment_path).with_suffix(".gbd")
