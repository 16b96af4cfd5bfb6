"""Dress proxy body: the inter-leg gap bridged by an ellipsoid."""

from typing import Tuple

import numpy as np

from ..geometry.mesh import TriMesh, merge_meshes
from .model import CHARTS, POLE_RADIUS_FRACTION, BodyModel, falloff_weights, ring_grid

BRIDGE_RINGS = 20
BRIDGE_SEGMENTS = 24


def bridge_axes(body: BodyModel) -> Tuple[np.ndarray, np.ndarray]:
    """Center and semi-axes of the bridge ellipsoid (hip to knee, between the leg axes)."""
    sk = body.skeleton
    upper = sk.bones[sk.index("upper_leg_l")]
    hip_y = float(upper.head[1])
    knee_y = float(upper.tail[1])
    center = np.array([0.0, 0.5 * (hip_y + knee_y), 0.0])
    semi = np.array([abs(float(upper.head[0])), 0.5 * (hip_y - knee_y), body.shape.radius("upper_leg")])
    return center, semi


def build_bridge(body: BodyModel):
    """Ellipsoid surface in the bridge atlas cell."""
    center, semi = bridge_axes(body)
    theta0 = np.arcsin(POLE_RADIUS_FRACTION)
    # rings run from the knee end up to the hip end
    theta = np.linspace(np.pi - theta0, theta0, BRIDGE_RINGS)
    phi = 2.0 * np.pi * np.arange(BRIDGE_SEGMENTS + 1) / BRIDGE_SEGMENTS
    phi[-1] = 0.0
    st = np.sin(theta)[:, None]
    grid = np.stack([
        semi[0] * st * np.cos(phi)[None, :],
        semi[1] * np.cos(theta)[:, None] * np.ones_like(phi)[None, :],
        semi[2] * st * np.sin(phi)[None, :],
    ], axis=-1) + center
    v_coords = np.linspace(0.0, 1.0, BRIDGE_RINGS)
    verts, faces, uv, weld = ring_grid(grid, BRIDGE_SEGMENTS, CHARTS["bridge"], v_coords)
    tri = verts[faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    inward = np.einsum("ij,ij->i", n, tri.mean(axis=1) - center) < 0
    faces[inward] = faces[inward][:, ::-1]
    return verts, faces, uv, weld


def bridge_weights(body: BodyModel, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weights over both leg chains.

    Lateral position blends left and right (50/50 at x = 0); within a side
    the upper/lower leg split follows the distance falloff.
    """
    sk = body.skeleton
    _, semi = bridge_axes(body)
    left = np.clip(0.5 + points[:, 0] / (2.0 * semi[0]), 0.0, 1.0)
    cols = []
    ids = []
    for side, share in (("l", left), ("r", 1.0 - left)):
        chain = [sk.index(f"upper_leg_{side}"), sk.index(f"lower_leg_{side}")]
        segs = [(sk.bones[b].head, sk.bones[b].tail) for b in chain]
        w = falloff_weights(points, segs)
        cols.append(w * share[:, None])
        ids.extend(chain)
    weights = np.concatenate(cols, axis=1)
    weights /= weights.sum(axis=1, keepdims=True)
    indices = np.tile(np.array(ids, dtype=np.int64), (points.shape[0], 1))
    return indices, weights


def build_dress_proxy(body: BodyModel) -> BodyModel:
    """
    Body variant whose legs are joined by an ellipsoidal bridge.

    The original vertices come first and are untouched; the skeleton is
    shared so any motion poses both bodies.
    """
    verts, faces, uv, weld = build_bridge(body)
    bridge = TriMesh.create(verts, faces, uv, weld=weld)
    template = merge_meshes([body.template, bridge])
    idx, w = bridge_weights(body, verts)
    bridge_id = len(body.part_names)
    return BodyModel(
        template=template,
        skeleton=body.skeleton,
        bone_indices=np.concatenate([body.bone_indices, idx]),
        bone_weights=np.concatenate([body.bone_weights, w]),
        shape=body.shape,
        part_ids=np.concatenate([body.part_ids, np.full(verts.shape[0], bridge_id, dtype=np.int64)]),
        part_names=body.part_names + ("bridge",),
        capsule_bones=body.capsule_bones,
        capsule_radii=body.capsule_radii,
        is_proxy=True,
    )
