"""Linear blend skinning: pose frames, bone transforms, posed colliders."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import PoseError
from ..geometry.mesh import TriMesh
from .model import BodyModel
from .skeleton import Skeleton


@dataclass(frozen=True)
class Pose:
    """
    One motion frame.

    ``rotations`` are local bone rotations as unit quaternions (w, x, y, z),
    one row per bone; ``translation`` offsets the root in meters.
    """

    rotations: np.ndarray
    translation: np.ndarray

    @classmethod
    def identity(cls, bone_count: int) -> "Pose":
        q = np.zeros((bone_count, 4))
        q[:, 0] = 1.0
        return cls(q, np.zeros(3))

    @classmethod
    def from_rotvecs(cls, rotvecs: np.ndarray, translation=(0.0, 0.0, 0.0)) -> "Pose":
        xyzw = Rotation.from_rotvec(np.asarray(rotvecs, dtype=np.float64)).as_quat()
        return cls(np.roll(xyzw, 1, axis=-1), np.asarray(translation, dtype=np.float64))

    @property
    def bone_count(self) -> int:
        return int(self.rotations.shape[0])


@dataclass(frozen=True)
class Capsules:
    """Posed collision capsules (segment a-b, radius)."""

    a: np.ndarray
    b: np.ndarray
    radius: np.ndarray

    @property
    def count(self) -> int:
        return int(self.radius.shape[0])


def local_rotations(pose: Pose) -> np.ndarray:
    """(B, 3, 3) rotation matrices from (w, x, y, z) quaternions."""
    xyzw = np.roll(np.asarray(pose.rotations, dtype=np.float64), -1, axis=-1)
    return Rotation.from_quat(xyzw).as_matrix()


def bone_transforms(skeleton: Skeleton, pose: Pose) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rest-to-posed affine transforms per bone.

    Returns ``(R, c)`` so that bone b maps a rest point v to ``R[b] @ v + c[b]``.
    The root rotates about the world origin and then translates; every
    other bone rotates about its rest head, which follows the parent.
    """
    if pose.bone_count != skeleton.bone_count:
        raise PoseError(f"pose has {pose.bone_count} rotations, skeleton has {skeleton.bone_count} bones")
    local = local_rotations(pose)
    heads = skeleton.heads()
    n = skeleton.bone_count
    rot = np.zeros((n, 3, 3))
    offset = np.zeros((n, 3))
    for i, parent in enumerate(skeleton.parents()):
        if parent is None:
            rot[i] = local[i]
            offset[i] = np.asarray(pose.translation, dtype=np.float64)
        else:
            rot[i] = rot[parent] @ local[i]
            posed_head = rot[parent] @ heads[i] + offset[parent]
            offset[i] = posed_head - rot[i] @ heads[i]
    return rot, offset


def skin_points(points: np.ndarray, bone_indices: np.ndarray, bone_weights: np.ndarray,
                rot: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """Blend bone transforms per point: v' = sum_b w_b (R_b v + c_b)."""
    blended_r = np.einsum("nk,nkij->nij", bone_weights, rot[bone_indices])
    blended_c = np.einsum("nk,nki->ni", bone_weights, offset[bone_indices])
    return np.einsum("nij,nj->ni", blended_r, points) + blended_c


def skin_dense(points: np.ndarray, dense_weights: np.ndarray, rot: np.ndarray,
               offset: np.ndarray) -> np.ndarray:
    """Same as skin_points with an (N, B) weight matrix."""
    blended_r = np.einsum("nb,bij->nij", dense_weights, rot)
    blended_c = dense_weights @ offset
    return np.einsum("nij,nj->ni", blended_r, points) + blended_c


def pose_body(body: BodyModel, pose: Pose) -> TriMesh:
    """Pose the template with linear blend skinning; normals are recomputed."""
    rot, offset = bone_transforms(body.skeleton, pose)
    posed = skin_points(body.template.vertices, body.bone_indices, body.bone_weights, rot, offset)
    return body.template.with_vertices(posed)


def pose_capsules(body: BodyModel, pose: Pose) -> Capsules:
    """Collision capsules rigidly attached to their bones."""
    rot, offset = bone_transforms(body.skeleton, pose)
    idx = body.capsule_bones
    heads = body.skeleton.heads()[idx]
    tails = body.skeleton.tails()[idx]
    a = np.einsum("nij,nj->ni", rot[idx], heads) + offset[idx]
    b = np.einsum("nij,nj->ni", rot[idx], tails) + offset[idx]
    return Capsules(a, b, body.capsule_radii.copy())


def surface_weights(body: BodyModel, face_index: np.ndarray, barycentric: np.ndarray) -> np.ndarray:
    """(N, bone_count) weights interpolated across body faces."""
    dense = body.dense_weights()
    corners = dense[body.template.faces[face_index]]
    return np.einsum("nk,nkb->nb", barycentric, corners)
