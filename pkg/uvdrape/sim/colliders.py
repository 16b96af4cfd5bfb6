"""Capsule colliders: signed distance, projection and contact response."""

from typing import Optional, Tuple

import numpy as np

from ..body.skinning import Capsules

PROJECTION_PASSES = 2


def lerp_capsules(start: Capsules, end: Capsules, fraction: float) -> Capsules:
    """Capsules with endpoints interpolated linearly between two poses."""
    return Capsules(
        start.a + fraction * (end.a - start.a),
        start.b + fraction * (end.b - start.b),
        start.radius,
    )


def _closest_on_segments(points: np.ndarray, capsules: Capsules) -> Tuple[np.ndarray, np.ndarray]:
    """(N, C) segment parameters and (N, C, 3) closest points."""
    ab = capsules.b - capsules.a
    denom = np.maximum(np.einsum("cj,cj->c", ab, ab), 1e-18)
    rel = points[:, None, :] - capsules.a[None, :, :]
    t = np.clip(np.einsum("ncj,cj->nc", rel, ab) / denom, 0.0, 1.0)
    closest = capsules.a[None, :, :] + t[..., None] * ab[None, :, :]
    return t, closest


def signed_distance(points: np.ndarray, capsules: Capsules) -> np.ndarray:
    """(N, C) distance to each capsule surface, negative inside."""
    _, closest = _closest_on_segments(points, capsules)
    return np.linalg.norm(points[:, None, :] - closest, axis=-1) - capsules.radius[None, :]


def min_signed_distance(points: np.ndarray, capsules: Capsules) -> np.ndarray:
    return signed_distance(points, capsules).min(axis=1)


def _fallback_normals(axis: np.ndarray) -> np.ndarray:
    """Any unit vector perpendicular to each axis, for points exactly on a segment."""
    ref = np.where(np.abs(axis[:, 2:3]) < 0.9, np.array([[0.0, 0.0, 1.0]]), np.array([[1.0, 0.0, 0.0]]))
    n = np.cross(axis, ref)
    length = np.linalg.norm(n, axis=1, keepdims=True)
    return n / np.where(length > 0, length, 1.0)


def project_out(points: np.ndarray, capsules: Capsules, thickness: float,
                movable: Optional[np.ndarray] = None,
                passes: int = PROJECTION_PASSES) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Push points closer than ``thickness`` to a capsule onto the offset surface.

    Each pass moves every penetrating point out of its most-penetrating
    capsule.

    Returns:
        (points, contact, normals): ``contact`` flags points moved in any
        pass and ``normals`` holds the last contact normal for them.
    """
    points = points.copy()
    n = points.shape[0]
    contact = np.zeros(n, dtype=bool)
    normals = np.zeros((n, 3))
    if capsules is None or capsules.count == 0 or n == 0:
        return points, contact, normals
    movable = np.ones(n, dtype=bool) if movable is None else movable
    for _ in range(passes):
        _, closest = _closest_on_segments(points, capsules)
        diff = points[:, None, :] - closest
        dist = np.linalg.norm(diff, axis=-1)
        depth = dist - capsules.radius[None, :] - thickness
        worst = np.argmin(depth, axis=1)
        rows = np.arange(n)
        hit = (depth[rows, worst] < 0.0) & movable
        if not hit.any():
            break
        idx = np.flatnonzero(hit)
        c = worst[idx]
        d = dist[idx, c]
        dirs = diff[idx, c]
        safe = d > 1e-12
        nrm = np.zeros_like(dirs)
        nrm[safe] = dirs[safe] / d[safe, None]
        if not safe.all():
            axis = capsules.b[c[~safe]] - capsules.a[c[~safe]]
            axis /= np.maximum(np.linalg.norm(axis, axis=1, keepdims=True), 1e-18)
            nrm[~safe] = _fallback_normals(axis)
        points[idx] = closest[idx, c] + nrm * (capsules.radius[c] + thickness)[:, None]
        contact[idx] = True
        normals[idx] = nrm
    return points, contact, normals


def contact_velocity(capsules: Capsules, velocity_a: np.ndarray, velocity_b: np.ndarray,
                     points: np.ndarray) -> np.ndarray:
    """Collider surface velocity at the nearest capsule of each point."""
    t, _ = _closest_on_segments(points, capsules)
    dist = signed_distance(points, capsules)
    c = np.argmin(dist, axis=1)
    tt = t[np.arange(points.shape[0]), c][:, None]
    return (1.0 - tt) * velocity_a[c] + tt * velocity_b[c]


def respond(velocities: np.ndarray, contact: np.ndarray, normals: np.ndarray, friction: float,
            surface_velocity: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Contact response relative to the collider surface: the approaching
    normal component is removed and the tangential one scaled by
    ``1 - friction``.
    """
    v = velocities.copy()
    if not contact.any():
        return v
    idx = np.flatnonzero(contact)
    base = np.zeros((idx.size, 3)) if surface_velocity is None else surface_velocity[idx]
    rel = v[idx] - base
    n = normals[idx]
    vn = np.einsum("ij,ij->i", rel, n)
    tangential = rel - vn[:, None] * n
    separating = np.maximum(vn, 0.0)[:, None] * n
    v[idx] = base + separating + (1.0 - friction) * tangential
    return v
