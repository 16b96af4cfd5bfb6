"""Procedural capsule humanoid with a packed UV layout and skin weights."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..geometry.mesh import TriMesh
from .skeleton import ShapeParams, Skeleton, build_skeleton

logger = logging.getLogger(__name__)

MAX_INFLUENCES = 4
BLEND_WIDTH = 0.06
CHART_INSET = 0.01
POLE_RADIUS_FRACTION = 0.2

# (u0, v0, u1, v1) cells of the body atlas; the bridge cell stays empty on
# the plain body and is filled by the dress proxy.
CHARTS: Dict[str, Tuple[float, float, float, float]] = {
    "torso": (0.0, 0.0, 0.5, 0.5),
    "upper_leg_l": (0.5, 0.0, 0.75, 0.5),
    "upper_leg_r": (0.75, 0.0, 1.0, 0.5),
    "lower_leg_l": (0.0, 0.5, 0.25, 0.75),
    "lower_leg_r": (0.25, 0.5, 0.5, 0.75),
    "upper_arm_l": (0.5, 0.5, 0.75, 0.75),
    "upper_arm_r": (0.75, 0.5, 1.0, 0.75),
    "lower_arm_l": (0.0, 0.75, 0.25, 1.0),
    "lower_arm_r": (0.25, 0.75, 0.5, 1.0),
    "neck": (0.5, 0.75, 0.75, 1.0),
    "bridge": (0.75, 0.75, 1.0, 1.0),
}


@dataclass(frozen=True)
class PartSpec:
    name: str
    start_bone: str
    end_bone: str
    radius_key: str
    candidates: Tuple[str, ...]
    rings: int
    segments: int


PARTS: Tuple[PartSpec, ...] = (
    PartSpec("torso", "pelvis", "spine", "torso", ("pelvis", "spine"), 24, 32),
    PartSpec("upper_leg_l", "upper_leg_l", "upper_leg_l", "upper_leg",
             ("pelvis", "upper_leg_l", "lower_leg_l"), 16, 16),
    PartSpec("upper_leg_r", "upper_leg_r", "upper_leg_r", "upper_leg",
             ("pelvis", "upper_leg_r", "lower_leg_r"), 16, 16),
    PartSpec("lower_leg_l", "lower_leg_l", "lower_leg_l", "lower_leg",
             ("upper_leg_l", "lower_leg_l"), 14, 16),
    PartSpec("lower_leg_r", "lower_leg_r", "lower_leg_r", "lower_leg",
             ("upper_leg_r", "lower_leg_r"), 14, 16),
    PartSpec("upper_arm_l", "upper_arm_l", "upper_arm_l", "upper_arm",
             ("spine", "upper_arm_l", "lower_arm_l"), 12, 16),
    PartSpec("upper_arm_r", "upper_arm_r", "upper_arm_r", "upper_arm",
             ("spine", "upper_arm_r", "lower_arm_r"), 12, 16),
    PartSpec("lower_arm_l", "lower_arm_l", "lower_arm_l", "lower_arm",
             ("upper_arm_l", "lower_arm_l"), 12, 16),
    PartSpec("lower_arm_r", "lower_arm_r", "lower_arm_r", "lower_arm",
             ("upper_arm_r", "lower_arm_r"), 12, 16),
    PartSpec("neck", "neck", "neck", "neck", ("spine", "neck"), 8, 16),
)

# Collision capsules: (bone, radius key)
CAPSULES: Tuple[Tuple[str, str], ...] = (
    ("pelvis", "torso"),
    ("spine", "torso"),
    ("neck", "neck"),
    ("upper_arm_l", "upper_arm"),
    ("lower_arm_l", "lower_arm"),
    ("upper_arm_r", "upper_arm"),
    ("lower_arm_r", "lower_arm"),
    ("upper_leg_l", "upper_leg"),
    ("lower_leg_l", "lower_leg"),
    ("upper_leg_r", "upper_leg"),
    ("lower_leg_r", "lower_leg"),
)


@dataclass(frozen=True)
class BodyModel:
    """
    Skinned body: T-pose template, skeleton and sparse skin weights.

    ``bone_indices``/``bone_weights`` hold up to four influences per vertex;
    unused slots have weight 0.
    """

    template: TriMesh
    skeleton: Skeleton
    bone_indices: np.ndarray
    bone_weights: np.ndarray
    shape: ShapeParams
    part_ids: np.ndarray
    part_names: Tuple[str, ...]
    capsule_bones: np.ndarray
    capsule_radii: np.ndarray
    is_proxy: bool = False

    @property
    def vertex_count(self) -> int:
        return self.template.vertex_count

    def dense_weights(self) -> np.ndarray:
        """(N, bone_count) weight matrix."""
        dense = np.zeros((self.vertex_count, self.skeleton.bone_count))
        rows = np.repeat(np.arange(self.vertex_count), MAX_INFLUENCES)
        np.add.at(dense, (rows, self.bone_indices.ravel()), self.bone_weights.ravel())
        return dense

    def part_mask(self, name: str) -> np.ndarray:
        return self.part_ids == self.part_names.index(name)


def smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point to the segment a-b."""
    ab = b - a
    t = np.clip((points - a) @ ab / float(ab @ ab), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(points - closest, axis=1)


def falloff_weights(points: np.ndarray, segments: Sequence[Tuple[np.ndarray, np.ndarray]],
                    blend: float = BLEND_WIDTH) -> np.ndarray:
    """
    Blend weights from distance-to-bone with a smooth falloff.

    The nearest bone gets full weight; others fade out once they are
    ``blend`` meters farther than the nearest. Rows sum to 1.
    """
    dist = np.stack([segment_distance(points, a, b) for a, b in segments], axis=1)
    excess = dist - dist.min(axis=1, keepdims=True)
    w = 1.0 - smoothstep(excess / blend)
    return w / w.sum(axis=1, keepdims=True)


def sparse_weights(dense: np.ndarray, bone_ids: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Keep the strongest four influences and renormalize."""
    n = dense.shape[0]
    idx = np.zeros((n, MAX_INFLUENCES), dtype=np.int64)
    w = np.zeros((n, MAX_INFLUENCES))
    order = np.argsort(-dense, axis=1, kind="stable")[:, :MAX_INFLUENCES]
    k = order.shape[1]
    idx[:, :k] = np.asarray(bone_ids, dtype=np.int64)[order]
    w[:, :k] = np.take_along_axis(dense, order, axis=1)
    w /= w.sum(axis=1, keepdims=True)
    return idx, w


def chart_uv(chart: Tuple[float, float, float, float], s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Map unit (s, t) into an inset atlas cell."""
    u0, v0, u1, v1 = chart
    u0, v0, u1, v1 = u0 + CHART_INSET, v0 + CHART_INSET, u1 - CHART_INSET, v1 - CHART_INSET
    return np.stack([u0 + s * (u1 - u0), v0 + t * (v1 - v0)], axis=-1)


def ring_grid(rings: np.ndarray, segments: int, chart, v_coords: np.ndarray):
    """
    Faces, UVs and weld ids for stacked rings of ``segments + 1`` vertices.

    ``rings`` is (R, S+1, 3) with the last column duplicating the first.
    """
    n_rings = rings.shape[0]
    stride = segments + 1
    verts = rings.reshape(-1, 3)
    s = np.tile(np.arange(stride) / segments, n_rings)
    t = np.repeat(v_coords, stride)
    uv = chart_uv(chart, s, t)
    weld = np.arange(verts.shape[0])
    weld[segments::stride] = weld[0::stride]
    faces = []
    for i in range(n_rings - 1):
        for j in range(segments):
            a = i * stride + j
            b = a + 1
            c = a + stride
            d = c + 1
            faces.append((a, b, d))
            faces.append((a, d, c))
    return verts, np.array(faces, dtype=np.int64), uv, weld


def tube_profile(length: float, radius: float, rings: int, cap_rings: int = 3):
    """Axial positions and radii of a capsule tube, caps ending at a small ring."""
    theta0 = np.arcsin(POLE_RADIUS_FRACTION)
    theta = np.linspace(theta0, np.pi / 2.0, cap_rings + 1)[:-1]
    bottom_a = -radius * np.cos(theta)
    bottom_r = radius * np.sin(theta)
    body_a = np.linspace(0.0, length, rings)
    body_r = np.full(rings, radius)
    top_a = length + radius * np.cos(theta[::-1])
    top_r = radius * np.sin(theta[::-1])
    axial = np.concatenate([bottom_a, body_a, top_a])
    radii = np.concatenate([bottom_r, body_r, top_r])
    step = np.hypot(np.diff(axial), np.diff(radii))
    arc = np.concatenate([[0.0], np.cumsum(step)])
    return axial, radii, arc / arc[-1]


def tube_frame(direction: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Two unit vectors orthogonal to ``direction``; the first faces forward where possible."""
    ref = np.array([0.0, 0.0, 1.0])
    if abs(direction @ ref) > 0.9:
        ref = np.array([1.0, 0.0, 0.0])
    e1 = ref - (ref @ direction) * direction
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(direction, e1)
    return e1, e2


def capsule_tube(head: np.ndarray, tail: np.ndarray, radius: float, rings: int,
                 segments: int, chart) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Outward-wound capsule surface from head to tail with a UV chart."""
    axis = tail - head
    length = float(np.linalg.norm(axis))
    direction = axis / length
    e1, e2 = tube_frame(direction)
    axial, radii, v_coords = tube_profile(length, radius, rings)
    phi = 2.0 * np.pi * np.arange(segments + 1) / segments
    phi[-1] = 0.0
    circle = np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
    grid = head + axial[:, None, None] * direction + radii[:, None, None] * circle[None, :, :]
    return ring_grid(grid, segments, chart, v_coords)


def build_procedural_body(shape: Optional[ShapeParams] = None) -> BodyModel:
    """
    Build the T-pose humanoid for a shape.

    Parts are capsule tubes (torso, neck stub, upper/lower arms and legs)
    with one rectangular UV chart each; there are no hands, feet or face.
    """
    shape = shape or ShapeParams()
    skeleton = build_skeleton(shape)
    verts: List[np.ndarray] = []
    faces: List[np.ndarray] = []
    uvs: List[np.ndarray] = []
    welds: List[np.ndarray] = []
    part_ids: List[np.ndarray] = []
    indices: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    offset = 0
    for pid, part in enumerate(PARTS):
        head = skeleton.bones[skeleton.index(part.start_bone)].head
        tail = skeleton.bones[skeleton.index(part.end_bone)].tail
        v, f, uv, weld = capsule_tube(head, tail, shape.radius(part.radius_key),
                                      part.rings, part.segments, CHARTS[part.name])
        bone_ids = [skeleton.index(name) for name in part.candidates]
        segs = [(skeleton.bones[b].head, skeleton.bones[b].tail) for b in bone_ids]
        idx, w = sparse_weights(falloff_weights(v, segs), bone_ids)
        verts.append(v)
        faces.append(f + offset)
        uvs.append(uv)
        welds.append(weld + offset)
        part_ids.append(np.full(v.shape[0], pid, dtype=np.int64))
        indices.append(idx)
        weights.append(w)
        offset += v.shape[0]

    template = TriMesh.create(np.concatenate(verts), np.concatenate(faces),
                              np.concatenate(uvs), weld=np.concatenate(welds))
    capsule_bones = np.array([skeleton.index(b) for b, _ in CAPSULES], dtype=np.int64)
    capsule_radii = np.array([shape.radius(key) for _, key in CAPSULES])
    body = BodyModel(
        template=template,
        skeleton=skeleton,
        bone_indices=np.concatenate(indices),
        bone_weights=np.concatenate(weights),
        shape=shape,
        part_ids=np.concatenate(part_ids),
        part_names=tuple(p.name for p in PARTS),
        capsule_bones=capsule_bones,
        capsule_radii=capsule_radii,
    )
    logger.debug("procedural body: %d vertices, %d faces", template.vertex_count, template.face_count)
    return body
