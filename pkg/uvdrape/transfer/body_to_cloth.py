"""Body pixel to cloth surface correspondences by normal ray casting."""

import logging
from dataclasses import dataclass

import numpy as np

from ..config import MAX_RAY_LENGTH, SURFACE_T_MIN
from ..errors import MapMismatchError
from ..geometry.bvh import build_bvh, cast_rays
from ..geometry.mesh import TriMesh
from ..maps.raster import UvTransferMap
from ..maps.uvmap import Semantic, UVMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BodyToClothTransfer:
    """
    Per body pixel: the garment face and barycentrics hit by the T-pose
    normal ray, or a miss (``face_index == -1``).
    """

    template: str
    face_index: np.ndarray
    barycentric: np.ndarray
    distance: np.ndarray
    body_vertex_count: int
    garment_vertex_count: int

    @property
    def mask(self) -> np.ndarray:
        return self.face_index >= 0

    @property
    def hit_count(self) -> int:
        return int(self.mask.sum())


def compute_body_to_cloth(
    body_tpose: TriMesh,
    body_uv: UvTransferMap,
    garment_tpose: TriMesh,
    template: str = "",
    max_distance: float = MAX_RAY_LENGTH,
) -> BodyToClothTransfer:
    """
    Cast a ray from every valid body pixel along the interpolated outward
    normal and keep the nearest garment hit within ``max_distance``.
    """
    if body_tpose.vertex_count != body_uv.vertex_count:
        raise MapMismatchError("body mesh does not match the rasterized layout")
    mask = body_uv.mask
    faces = body_uv.valid_faces()
    bary = body_uv.valid_barycentrics()
    origins = body_tpose.points_at(faces, bary)
    normals = body_tpose.normals_at(faces, bary)
    bvh = build_bvh(garment_tpose)

    aimed = np.any(normals != 0.0, axis=1)
    hits = cast_rays(bvh, garment_tpose, origins[aimed], normals[aimed], SURFACE_T_MIN, max_distance)

    shape = mask.shape
    hit_face = np.full(shape, -1, dtype=np.int64)
    hit_bary = np.zeros(shape + (3,))
    hit_dist = np.zeros(shape)
    rows, cols = np.nonzero(mask)
    rows, cols = rows[aimed], cols[aimed]
    hit_face[rows, cols] = hits.face_index
    hit_bary[rows, cols] = hits.barycentric
    hit_dist[rows, cols] = hits.distance
    transfer = BodyToClothTransfer(template, hit_face, hit_bary, hit_dist,
                                   body_tpose.vertex_count, garment_tpose.vertex_count)
    logger.info("%s: %d of %d body pixels hit the garment", template or "garment",
                transfer.hit_count, int(mask.sum()))
    return transfer


def bake_offsets(t_bc: BodyToClothTransfer, body_frame: TriMesh, garment_frame: TriMesh,
                 body_uv: UvTransferMap) -> UVMap:
    """Offset from the posed body point to the posed cloth point on every hit pixel."""
    if body_frame.vertex_count != t_bc.body_vertex_count or body_uv.vertex_count != t_bc.body_vertex_count:
        raise MapMismatchError("body frame does not match the transfer's body")
    if garment_frame.vertex_count != t_bc.garment_vertex_count:
        raise MapMismatchError(
            f"garment frame has {garment_frame.vertex_count} vertices, expected {t_bc.garment_vertex_count}"
        )
    mask = t_bc.mask
    cloth = garment_frame.points_at(t_bc.face_index[mask], t_bc.barycentric[mask])
    body = body_frame.points_at(body_uv.face_index[mask], body_uv.barycentric[mask])
    data = np.zeros(mask.shape + (3,))
    data[mask] = cloth - body
    return UVMap.create(data, mask, Semantic.OFFSET)
