"""Rebuild garments from posed bodies and offset maps."""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import MapMismatchError, SemanticError
from ..geometry.mesh import TriMesh
from ..maps.uvmap import Semantic, UVMap, sample_bilinear
from .binding import GarmentBinding

logger = logging.getLogger(__name__)


def fill_from_neighbours(positions: np.ndarray, known: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Give unknown vertices the mean of known mesh neighbours, ring by ring."""
    positions = positions.copy()
    known = known.copy()
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edges = np.concatenate([edges, edges[:, ::-1]])
    while not known.all():
        src, dst = edges[:, 0], edges[:, 1]
        usable = known[src] & ~known[dst]
        if not usable.any():
            break
        sums = np.zeros_like(positions)
        counts = np.zeros(positions.shape[0])
        np.add.at(sums, dst[usable], positions[src[usable]])
        np.add.at(counts, dst[usable], 1.0)
        newly = counts > 0
        positions[newly] = sums[newly] / counts[newly, None]
        known |= newly
    return positions


def reconstruct_vertices(binding: GarmentBinding, body_frame: TriMesh,
                         offsets: UVMap) -> Tuple[np.ndarray, np.ndarray]:
    """
    Garment vertex positions: posed body point plus sampled offset.

    Returns:
        (positions, reported) where ``reported`` lists bound vertices that
        found no offset and were left on the body surface.
    """
    if offsets.semantic != Semantic.OFFSET:
        raise SemanticError(f"reconstruction needs offsets in meters, got {offsets.semantic.name.lower()}")
    if body_frame.vertex_count != binding.body_vertex_count:
        raise MapMismatchError(
            f"body frame has {body_frame.vertex_count} vertices, binding expects {binding.body_vertex_count}"
        )
    bound = binding.bound
    positions = binding.garment.vertices.copy()
    body_points = body_frame.points_at(binding.face_index[bound], binding.barycentric[bound])
    values, found = sample_bilinear(offsets, binding.uv[bound])
    positions[bound] = body_points + values
    reported = np.flatnonzero(bound)[~found]
    if reported.size:
        logger.warning("%d vertices found no offset and stay on the body surface", reported.size)
    if not bound.all():
        positions = fill_from_neighbours(positions, bound, binding.garment.faces)
    return positions, reported


@dataclass(frozen=True)
class Reconstruction:
    """
    Rebuilt garment plus the vertices that did not get an offset.

    ``reported`` are bound vertices with no valid pixel in reach, left on
    the body surface; ``filled`` are unbound vertices placed from their
    mesh neighbours.
    """

    mesh: TriMesh
    reported: np.ndarray
    filled: np.ndarray

    @property
    def complete(self) -> bool:
        return self.reported.size == 0 and self.filled.size == 0


def reconstruct_garment(binding: GarmentBinding, body_frame: TriMesh, offsets: UVMap) -> Reconstruction:
    """Garment mesh at the body frame from an offset map."""
    positions, reported = reconstruct_vertices(binding, body_frame, offsets)
    filled = np.flatnonzero(~binding.bound)
    return Reconstruction(binding.garment.with_vertices(positions), reported, filled)
