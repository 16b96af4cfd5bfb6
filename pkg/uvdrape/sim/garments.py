"""Procedural garment templates fitted around the T-pose body."""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..body.model import BodyModel
from ..config import TEMPLATES
from ..errors import EmptyMeshError
from ..geometry.mesh import TriMesh

logger = logging.getLogger(__name__)

CLEARANCE = 0.03
RING_SPACING = 0.03


@dataclass(frozen=True)
class Garment:
    """
    Cloth template: welded mesh, the vertices pinned to the body and the
    hem vertices used for swing statistics.
    """

    name: str
    mesh: TriMesh
    pinned: np.ndarray
    hem: np.ndarray

    @property
    def vertex_count(self) -> int:
        return self.mesh.vertex_count


@dataclass
class _Piece:
    rings: np.ndarray
    pin_rings: Tuple[int, ...]
    hem_rings: Tuple[int, ...] = ()


def ring_faces(n_rings: int, segments: int) -> np.ndarray:
    """Quad-split faces joining consecutive closed rings of ``segments`` vertices."""
    faces = []
    for i in range(n_rings - 1):
        for j in range(segments):
            a = i * segments + j
            b = i * segments + (j + 1) % segments
            c = a + segments
            d = b + segments
            faces.append((a, b, d))
            faces.append((a, d, c))
    return np.array(faces, dtype=np.int64)


def orient_outward(vertices: np.ndarray, faces: np.ndarray, ring_centers: np.ndarray,
                   segments: int) -> np.ndarray:
    """Flip faces whose normal points toward the center of their ring."""
    tri = vertices[faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    center = ring_centers[faces[:, 0] // segments]
    inward = np.einsum("ij,ij->i", n, tri.mean(axis=1) - center) < 0
    faces = faces.copy()
    faces[inward] = faces[inward][:, ::-1]
    return faces


def ellipse_rings(centers: np.ndarray, axis: np.ndarray, semi_a: np.ndarray, semi_b: np.ndarray,
                  segments: int) -> np.ndarray:
    """(R, S, 3) elliptical rings around ``axis``; ``semi_a`` runs along the first frame vector."""
    axis = axis / np.linalg.norm(axis)
    ref = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = ref - (ref @ axis) * axis
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    phi = 2.0 * np.pi * np.arange(segments) / segments
    return (
        centers[:, None, :]
        + semi_a[:, None, None] * np.cos(phi)[None, :, None] * e1
        + semi_b[:, None, None] * np.sin(phi)[None, :, None] * e2
    )


def _ring_count(length: float) -> int:
    return max(2, int(round(length / RING_SPACING)) + 1)


def _assemble(name: str, pieces: Sequence[_Piece]) -> Garment:
    verts: List[np.ndarray] = []
    faces: List[np.ndarray] = []
    pinned: List[np.ndarray] = []
    hem: List[np.ndarray] = []
    offset = 0
    for piece in pieces:
        n_rings, segments = piece.rings.shape[:2]
        v = piece.rings.reshape(-1, 3)
        centers = piece.rings.mean(axis=1)
        f = orient_outward(v, ring_faces(n_rings, segments), centers, segments)
        pin = np.zeros(v.shape[0], dtype=bool)
        for r in piece.pin_rings:
            pin[r * segments:(r + 1) * segments] = True
        for r in piece.hem_rings:
            hem.append(offset + np.arange(r * segments, (r + 1) * segments))
        verts.append(v)
        faces.append(f + offset)
        pinned.append(pin)
        offset += v.shape[0]
    mesh = TriMesh.create(np.concatenate(verts), np.concatenate(faces))
    garment = Garment(name, mesh, np.concatenate(pinned), np.concatenate(hem).astype(np.int64))
    logger.debug("%s: %d vertices, %d pinned", name, mesh.vertex_count, int(garment.pinned.sum()))
    return garment


def _landmarks(body: BodyModel):
    sk = body.skeleton
    hip_y = float(sk.bones[sk.index("pelvis")].head[1])
    chest_y = float(sk.bones[sk.index("spine")].tail[1])
    knee_y = float(sk.bones[sk.index("upper_leg_l")].tail[1])
    ankle_y = float(sk.bones[sk.index("lower_leg_l")].tail[1])
    upper_arm = sk.bones[sk.index("upper_arm_l")]
    return hip_y, chest_y, knee_y, ankle_y, upper_arm


def build_tops(body: BodyModel) -> Garment:
    """
    Shirt body from just above the hips to below the armpits, plus short
    sleeves around the upper arms. The top ring and the sleeve openings
    at the shoulder are pinned.
    """
    hip_y, _, _, _, upper_arm = _landmarks(body)
    torso_r = body.shape.radius("torso") + CLEARANCE
    arm_r = body.shape.radius("upper_arm")
    shoulder_y = float(upper_arm.head[1])
    bottom = hip_y + 0.03
    top = shoulder_y - arm_r - 2.0 * CLEARANCE
    n = _ring_count(top - bottom)
    ys = np.linspace(bottom, top, n)
    centers = np.stack([np.zeros(n), ys, np.zeros(n)], axis=1)
    radii = np.full(n, torso_r)
    shirt = _Piece(ellipse_rings(centers, np.array([0.0, 1.0, 0.0]), radii, radii, 32),
                   pin_rings=(n - 1,), hem_rings=(0,))

    pieces = [shirt]
    sleeve_r = arm_r + CLEARANCE
    for side in (1.0, -1.0):
        start_x = side * (abs(float(upper_arm.head[0])) + sleeve_r - 0.03)
        end_x = side * (abs(float(upper_arm.head[0])) + 0.6 * upper_arm.length)
        m = _ring_count(abs(end_x - start_x))
        xs = np.linspace(start_x, end_x, m)
        c = np.stack([xs, np.full(m, shoulder_y), np.zeros(m)], axis=1)
        r = np.full(m, sleeve_r)
        pieces.append(_Piece(ellipse_rings(c, np.array([side, 0.0, 0.0]), r, r, 16), pin_rings=(0,)))
    return _assemble("tops", pieces)


def build_bottoms(body: BodyModel) -> Garment:
    """
    Trousers: an elliptical waistband around the pelvis and two leg tubes
    down to mid-shin. The waistband top and the leg tops are pinned.
    """
    hip_y, _, knee_y, ankle_y, _ = _landmarks(body)
    sk = body.skeleton
    hip_x = abs(float(sk.bones[sk.index("upper_leg_l")].head[0]))
    leg_r = body.shape.radius("upper_leg")
    shin_r = body.shape.radius("lower_leg")
    waist_a = hip_x + leg_r + 0.04
    waist_b = body.shape.radius("torso") + 0.04
    top = hip_y + 0.03
    crotch = hip_y - 0.15
    n = _ring_count(top - crotch)
    ys = np.linspace(crotch, top, n)
    centers = np.stack([np.zeros(n), ys, np.zeros(n)], axis=1)
    # first frame vector is +Z for a vertical axis, so semi_b spans X
    waist = _Piece(ellipse_rings(centers, np.array([0.0, 1.0, 0.0]), np.full(n, waist_b),
                                 np.full(n, waist_a), 32), pin_rings=(n - 1,))
    pieces = [waist]
    hem_y = 0.5 * (knee_y + ankle_y)
    m = _ring_count(crotch - hem_y)
    ys = np.linspace(hem_y, crotch, m)
    radii = np.linspace(shin_r, leg_r, m) + CLEARANCE
    radii = np.minimum(radii, hip_x - 0.005)
    for side in (1.0, -1.0):
        c = np.stack([np.full(m, side * hip_x), ys, np.zeros(m)], axis=1)
        pieces.append(_Piece(ellipse_rings(c, np.array([0.0, 1.0, 0.0]), radii, radii, 20),
                             pin_rings=(m - 1,), hem_rings=(0,)))
    return _assemble("bottoms", pieces)


def build_dress(body: BodyModel) -> Garment:
    """Flared tube from the chest to the knees, pinned along the top ring."""
    hip_y, _, knee_y, _, upper_arm = _landmarks(body)
    sk = body.skeleton
    hip_x = abs(float(sk.bones[sk.index("upper_leg_l")].head[0]))
    top_r = body.shape.radius("torso") + CLEARANCE
    hem_r = max(top_r, hip_x + body.shape.radius("upper_leg") + 0.12)
    top = float(upper_arm.head[1]) - body.shape.radius("upper_arm") - 2.0 * CLEARANCE
    bottom = knee_y
    n = _ring_count(top - bottom)
    ys = np.linspace(bottom, top, n)
    t = (ys - bottom) / (top - bottom)
    waist_t = (hip_y + 0.1 - bottom) / (top - bottom)
    # straight above the waist, flaring linearly below it
    radii = np.where(t >= waist_t, top_r, hem_r + (top_r - hem_r) * t / waist_t)
    centers = np.stack([np.zeros(n), ys, np.zeros(n)], axis=1)
    dress = _Piece(ellipse_rings(centers, np.array([0.0, 1.0, 0.0]), radii, radii, 40),
                   pin_rings=(n - 1,), hem_rings=(0,))
    return _assemble("dress", [dress])


BUILDERS = {"tops": build_tops, "bottoms": build_bottoms, "dress": build_dress}


def build_garment(template: str, body: BodyModel) -> Garment:
    if template not in BUILDERS:
        raise KeyError(f"unknown garment template '{template}' (known: {', '.join(TEMPLATES)})")
    return BUILDERS[template](body)


def boundary_vertices(mesh: TriMesh) -> np.ndarray:
    """Vertices on edges used by exactly one face."""
    f = mesh.faces
    edges = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
    unique, counts = np.unique(edges, axis=0, return_counts=True)
    return np.unique(unique[counts == 1].ravel())


def lowest_ring(mesh: TriMesh, band: float = 0.02) -> np.ndarray:
    """Boundary vertices within ``band`` of the lowest boundary vertex."""
    boundary = boundary_vertices(mesh)
    if boundary.size == 0:
        return boundary
    y = mesh.vertices[boundary, 1]
    return boundary[y <= y.min() + band]


def shorten_garment(garment: Garment, cut_height: float) -> Garment:
    """
    Copy of a garment with every vertex below ``cut_height`` removed.

    Faces losing a corner are dropped; the new lowest boundary becomes the hem.
    """
    keep = garment.mesh.vertices[:, 1] >= cut_height
    faces = garment.mesh.faces
    face_keep = keep[faces].all(axis=1)
    if not face_keep.any():
        raise EmptyMeshError(f"cutting {garment.name} at {cut_height} m leaves no faces")
    used = np.zeros(garment.vertex_count, dtype=bool)
    used[faces[face_keep].ravel()] = True
    remap = np.full(garment.vertex_count, -1, dtype=np.int64)
    remap[used] = np.arange(int(used.sum()))
    mesh = TriMesh.create(garment.mesh.vertices[used], remap[faces[face_keep]])
    pinned = garment.pinned[used]
    return Garment(f"{garment.name}_short", mesh, pinned, lowest_ring(mesh))
