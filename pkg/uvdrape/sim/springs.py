"""Spring network construction for triangle-mesh cloth."""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..errors import EmptyMeshError
from ..geometry.mesh import TriMesh
from .params import SimParams

STRUCTURAL = 0
SHEAR = 1
BENDING = 2
KIND_NAMES = ("structural", "shear", "bending")

# cross pairs count as shear only when the hinge is this flat
PLANAR_COS = np.cos(np.radians(20.0))


@dataclass(frozen=True)
class SpringSet:
    """
    Springs (i, j) with rest lengths, stiffness classes and particle masses.

    ``stiffness`` applies in tension, ``compression`` when shorter than rest.
    """

    i: np.ndarray
    j: np.ndarray
    rest: np.ndarray
    kind: np.ndarray
    stiffness: np.ndarray
    compression: np.ndarray
    damping: np.ndarray
    masses: np.ndarray

    @property
    def count(self) -> int:
        return int(self.i.shape[0])

    def count_of(self, kind: int) -> int:
        return int(np.count_nonzero(self.kind == kind))

    def counts(self) -> Dict[str, int]:
        return {name: self.count_of(k) for k, name in enumerate(KIND_NAMES)}


def lumped_masses(mesh: TriMesh, density: float) -> np.ndarray:
    """A third of each incident triangle's mass per vertex, floored at half the median."""
    share = mesh.face_areas() * density / 3.0
    masses = np.zeros(mesh.vertex_count)
    for corner in range(3):
        np.add.at(masses, mesh.faces[:, corner], share)
    positive = masses[masses > 0]
    floor = 0.5 * float(np.median(positive)) if positive.size else 1e-6
    return np.maximum(masses, floor)


def _unique_pairs(pairs: np.ndarray) -> np.ndarray:
    if pairs.size == 0:
        return pairs.reshape(0, 2)
    pairs = np.sort(pairs, axis=1)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    return np.unique(pairs, axis=0)


def cross_pairs(mesh: TriMesh) -> Tuple[np.ndarray, np.ndarray]:
    """
    Opposite-vertex pairs across every interior edge.

    Returns (shear, bending): pairs across an edge that is the longest edge
    of both triangles on a near-flat hinge (quad diagonals) are shear; the
    rest are bending.
    """
    faces = mesh.faces
    v = mesh.vertices
    edge_faces: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
    for f, (a, b, c) in enumerate(faces):
        for e0, e1, opp in ((a, b, c), (b, c, a), (c, a, b)):
            key = (min(e0, e1), max(e0, e1))
            edge_faces.setdefault(key, []).append((f, opp))

    tri = v[faces]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    lengths = np.stack([
        np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
        np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
        np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
    ], axis=1)
    longest = lengths.max(axis=1)

    shear: List[Tuple[int, int]] = []
    bending: List[Tuple[int, int]] = []
    for (e0, e1), incident in edge_faces.items():
        if len(incident) < 2:
            continue
        edge_len = float(np.linalg.norm(v[e0] - v[e1]))
        for x in range(len(incident)):
            for y in range(x + 1, len(incident)):
                (fa, ca), (fb, cb) = incident[x], incident[y]
                if ca == cb:
                    continue
                flat = float(normals[fa] @ normals[fb]) >= PLANAR_COS
                diagonal = edge_len >= longest[fa] - 1e-12 and edge_len >= longest[fb] - 1e-12
                (shear if flat and diagonal else bending).append((ca, cb))
    return _unique_pairs(np.array(shear, dtype=np.int64)), _unique_pairs(np.array(bending, dtype=np.int64))


def build_springs(garment: TriMesh, params: SimParams) -> SpringSet:
    """Structural (edges), shear (quad diagonals) and bending (cross-hinge) springs."""
    if garment.face_count == 0:
        raise EmptyMeshError("cloth mesh has no faces")
    f = garment.faces
    structural = _unique_pairs(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]))
    shear, bending = cross_pairs(garment)
    edge_set = {tuple(p) for p in structural}
    bending = np.array([p for p in bending if tuple(p) not in edge_set], dtype=np.int64).reshape(-1, 2)
    shear = np.array([p for p in shear if tuple(p) not in edge_set], dtype=np.int64).reshape(-1, 2)

    fabric = params.fabric
    groups = ((structural, STRUCTURAL, fabric.structural), (shear, SHEAR, fabric.shear),
              (bending, BENDING, fabric.bending))
    pairs = np.concatenate([g[0] for g in groups])
    kind = np.concatenate([np.full(len(g[0]), g[1], dtype=np.int64) for g in groups])
    stiffness = np.concatenate([np.full(len(g[0]), g[2]) for g in groups])
    # compression stiffness scales with the class's share of structural stiffness
    ratio = fabric.compression / fabric.structural if fabric.structural > 0 else 0.0
    compression = stiffness * ratio
    rest = np.linalg.norm(garment.vertices[pairs[:, 0]] - garment.vertices[pairs[:, 1]], axis=1)
    if np.any(rest <= 0):
        raise ValueError("springs with zero rest length")
    return SpringSet(
        i=pairs[:, 0].copy(),
        j=pairs[:, 1].copy(),
        rest=rest,
        kind=kind,
        stiffness=stiffness,
        compression=compression,
        damping=np.full(len(pairs), fabric.damping),
        masses=lumped_masses(garment, fabric.density),
    )
