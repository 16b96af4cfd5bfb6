"""Bake posed meshes into position maps and derive motion maps."""

from typing import List, Sequence

import numpy as np

from ..errors import MapMismatchError, SemanticError
from ..geometry.mesh import TriMesh
from .raster import UvTransferMap
from .uvmap import Semantic, UVMap, check_compatible


def bake_positions(transfer: UvTransferMap, posed: TriMesh) -> UVMap:
    """Interpolate posed vertex positions at every valid pixel."""
    if posed.vertex_count != transfer.vertex_count:
        raise MapMismatchError(
            f"mesh has {posed.vertex_count} vertices, layout was rasterized for {transfer.vertex_count}"
        )
    mask = transfer.mask
    data = np.zeros(mask.shape + (3,))
    data[mask] = posed.points_at(transfer.valid_faces(), transfer.valid_barycentrics())
    return UVMap.create(data, mask, Semantic.POSITION)


def _difference(a: UVMap, b: UVMap, expected: Semantic, result: Semantic) -> UVMap:
    for m in (a, b):
        if m.semantic != expected:
            raise SemanticError(f"expected {expected.name.lower()} maps, got {m.semantic.name.lower()}")
    check_compatible(a, b)
    return UVMap.create(a.data - b.data, a.mask, result)


def velocity_map(pos_k: UVMap, pos_km1: UVMap) -> UVMap:
    """First difference of position maps (m/frame)."""
    return _difference(pos_k, pos_km1, Semantic.POSITION, Semantic.VELOCITY)


def acceleration_map(vel_k: UVMap, vel_km1: UVMap) -> UVMap:
    """Difference of consecutive velocity maps (m/frame^2)."""
    return _difference(vel_k, vel_km1, Semantic.VELOCITY, Semantic.ACCELERATION)


def bake_sequence(transfer: UvTransferMap, frames: Sequence[TriMesh]) -> List[UVMap]:
    return [bake_positions(transfer, mesh) for mesh in frames]


def motion_maps(positions: Sequence[UVMap]):
    """
    Velocity and acceleration maps for a position sequence.

    Returns lists indexed by frame; entries that need earlier frames
    (velocity at 0, acceleration at 0 and 1) are None.
    """
    n = len(positions)
    velocities = [None] * n
    accelerations = [None] * n
    for k in range(1, n):
        velocities[k] = velocity_map(positions[k], positions[k - 1])
    for k in range(2, n):
        accelerations[k] = acceleration_map(velocities[k], velocities[k - 1])
    return velocities, accelerations
