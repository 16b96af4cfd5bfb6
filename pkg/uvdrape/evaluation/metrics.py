"""Error metrics in square millimeters."""

from typing import Sequence

import numpy as np

from ..body.model import BodyModel
from ..body.skinning import Pose, bone_transforms
from ..errors import MapMismatchError
from ..geometry.mesh import TriMesh
from ..maps.uvmap import UVMap, check_compatible

MM2_PER_M2 = 1e6


def mse_uv(estimate: UVMap, truth: UVMap) -> float:
    """Mean squared Euclidean distance over valid pixels, mm^2."""
    check_compatible(estimate, truth)
    if truth.valid_count == 0:
        raise MapMismatchError("maps have no valid pixels")
    diff = estimate.valid_values() - truth.valid_values()
    return float(np.mean(np.sum(diff * diff, axis=1)) * MM2_PER_M2)


def mse_points(estimate: np.ndarray, truth: np.ndarray) -> float:
    if estimate.shape != truth.shape:
        raise MapMismatchError(f"point sets differ: {estimate.shape} vs {truth.shape}")
    diff = np.asarray(estimate, dtype=np.float64) - truth
    return float(np.mean(np.sum(diff * diff, axis=1)) * MM2_PER_M2)


def mse_vertices(estimate: TriMesh, truth: TriMesh) -> float:
    """Mean squared vertex distance, mm^2."""
    if estimate.vertex_count != truth.vertex_count:
        raise MapMismatchError(f"vertex counts differ: {estimate.vertex_count} vs {truth.vertex_count}")
    return mse_points(estimate.vertices, truth.vertices)


def in_bone_frame(points: np.ndarray, body: BodyModel, pose: Pose, bone: str = "pelvis") -> np.ndarray:
    """Points mapped back through one bone's posed transform."""
    rot, offset = bone_transforms(body.skeleton, pose)
    b = body.skeleton.index(bone)
    return (points - offset[b]) @ rot[b]


def hem_variance(frames: Sequence[TriMesh], hem: np.ndarray, body: BodyModel,
                 poses: Sequence[Pose], bone: str = "pelvis") -> float:
    """
    Variance over frames of hem vertices expressed in the pelvis frame,
    summed over axes and averaged over vertices, mm^2.
    """
    if len(frames) != len(poses):
        raise MapMismatchError(f"{len(frames)} frames but {len(poses)} poses")
    if len(frames) < 2 or len(hem) == 0:
        return 0.0
    local = np.stack([in_bone_frame(f.vertices[hem], body, p, bone) for f, p in zip(frames, poses)])
    return float(np.mean(np.sum(local.var(axis=0), axis=1)) * MM2_PER_M2)
