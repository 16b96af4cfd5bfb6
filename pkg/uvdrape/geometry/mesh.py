"""Triangle mesh and ray types, validation, normals and primitive builders."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..config import MIN_TRIANGLE_AREA, NORMAL_TOLERANCE
from ..errors import MeshValidationError

logger = logging.getLogger(__name__)

UP = np.array([0.0, 0.0, 1.0])


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TriMesh:
    """
    Indexed triangle mesh in meters.

    ``weld`` maps every vertex to a canonical vertex id; vertices duplicated
    along UV seams share an id so normals are accumulated across the seam.
    """

    vertices: np.ndarray
    faces: np.ndarray
    vertex_normals: np.ndarray
    uv_coords: Optional[np.ndarray] = None
    weld: Optional[np.ndarray] = None

    @classmethod
    def create(
        cls,
        vertices,
        faces,
        uv_coords=None,
        vertex_normals=None,
        weld=None,
        validate: bool = True,
    ) -> "TriMesh":
        """Build a mesh, computing normals when none are given."""
        v = np.array(vertices, dtype=np.float64).reshape(-1, 3)
        f = np.array(faces, dtype=np.int64).reshape(-1, 3)
        uv = None if uv_coords is None else np.array(uv_coords, dtype=np.float64).reshape(-1, 2)
        w = None if weld is None else np.array(weld, dtype=np.int64).reshape(-1)
        if vertex_normals is None:
            n, isolated = vertex_normals_of(v, f, w)
            if isolated:
                logger.warning("%d isolated vertices given +Z normals", len(isolated))
        else:
            n = np.array(vertex_normals, dtype=np.float64).reshape(-1, 3)
        mesh = cls(_frozen(v), _frozen(f), _frozen(n), None if uv is None else _frozen(uv),
                   None if w is None else _frozen(w))
        if validate:
            validate_mesh(mesh)
        return mesh

    @property
    def vertex_count(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def face_count(self) -> int:
        return int(self.faces.shape[0])

    def with_vertices(self, vertices, validate: bool = False) -> "TriMesh":
        """Same topology and UVs, new positions, recomputed normals."""
        return TriMesh.create(vertices, self.faces, self.uv_coords, weld=self.weld, validate=validate)

    def triangles(self) -> np.ndarray:
        """(F, 3, 3) corner positions."""
        return self.vertices[self.faces]

    def face_areas(self) -> np.ndarray:
        tri = self.triangles()
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def diagonal(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def points_at(self, face_index: np.ndarray, barycentric: np.ndarray) -> np.ndarray:
        """Surface points from per-query faces and barycentrics."""
        corners = self.vertices[self.faces[face_index]]
        return np.einsum("...k,...kd->...d", barycentric, corners)

    def normals_at(self, face_index: np.ndarray, barycentric: np.ndarray) -> np.ndarray:
        """Interpolated unit normals from per-query faces and barycentrics."""
        corners = self.vertex_normals[self.faces[face_index]]
        n = np.einsum("...k,...kd->...d", barycentric, corners)
        length = np.linalg.norm(n, axis=-1, keepdims=True)
        return n / np.where(length > 0, length, 1.0)

    def uv_at(self, face_index: np.ndarray, barycentric: np.ndarray) -> np.ndarray:
        if self.uv_coords is None:
            raise MeshValidationError("uv_coords present", "mesh has no UV layout")
        corners = self.uv_coords[self.faces[face_index]]
        return np.einsum("...k,...kd->...d", barycentric, corners)


@dataclass(frozen=True)
class Ray:
    """Half-line with a unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    @classmethod
    def create(cls, origin, direction, normalize: bool = True) -> "Ray":
        o = np.asarray(origin, dtype=np.float64).reshape(3)
        d = np.asarray(direction, dtype=np.float64).reshape(3)
        length = float(np.linalg.norm(d))
        if normalize:
            if length == 0.0:
                raise ValueError("ray direction must be non-zero")
            d = d / length
        elif abs(length - 1.0) > 1e-9:
            raise ValueError(f"ray direction length {length} is not 1")
        return cls(_frozen(o.copy()), _frozen(d.copy()))


def validate_mesh(mesh: TriMesh) -> None:
    """Raise MeshValidationError naming the first violated invariant."""
    n_vert = mesh.vertex_count
    if mesh.faces.size and (mesh.faces.min() < 0 or mesh.faces.max() >= n_vert):
        raise MeshValidationError("face index < vertex count",
                                  f"indices span [{mesh.faces.min()}, {mesh.faces.max()}], {n_vert} vertices")
    if not np.all(np.isfinite(mesh.vertices)):
        raise MeshValidationError("finite vertex positions")
    if mesh.faces.size:
        areas = mesh.face_areas()
        bad = np.flatnonzero(areas <= MIN_TRIANGLE_AREA)
        if bad.size:
            raise MeshValidationError("triangle area > 1e-12 m^2",
                                      f"{bad.size} faces, first {int(bad[0])}")
    if mesh.vertex_normals.shape != mesh.vertices.shape:
        raise MeshValidationError("one normal per vertex")
    lengths = np.linalg.norm(mesh.vertex_normals, axis=1)
    if np.any(np.abs(lengths - 1.0) > NORMAL_TOLERANCE):
        raise MeshValidationError("unit normals", f"max deviation {np.max(np.abs(lengths - 1.0)):.3g}")
    if mesh.uv_coords is not None:
        if mesh.uv_coords.shape != (n_vert, 2):
            raise MeshValidationError("uv_coords length equals vertex count")
        if np.any(mesh.uv_coords < 0.0) or np.any(mesh.uv_coords > 1.0):
            raise MeshValidationError("uv_coords in [0,1]^2")
    if mesh.weld is not None and mesh.weld.shape != (n_vert,):
        raise MeshValidationError("weld map length equals vertex count")


def vertex_normals_of(
    vertices: np.ndarray,
    faces: np.ndarray,
    weld: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, List[int]]:
    """
    Area-weighted vertex normals.

    Returns:
        (normals, isolated) where isolated lists vertices with no incident
        face; those get +Z.
    """
    n_vert = vertices.shape[0]
    groups = np.arange(n_vert) if weld is None else weld
    n_groups = int(groups.max()) + 1 if n_vert else 0
    acc = np.zeros((n_groups, 3))
    if faces.size:
        tri = vertices[faces]
        # cross product magnitude is twice the area, so this is area weighting
        face_n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        for corner in range(3):
            np.add.at(acc, groups[faces[:, corner]], face_n)
    normals = acc[groups]
    length = np.linalg.norm(normals, axis=1)
    isolated = np.flatnonzero(length == 0.0)
    normals[isolated] = UP
    length[isolated] = 1.0
    return normals / length[:, None], [int(i) for i in isolated]


def compute_vertex_normals(mesh: TriMesh) -> Tuple[TriMesh, List[str]]:
    """Recompute area-weighted normals; warnings name isolated vertices."""
    normals, isolated = vertex_normals_of(mesh.vertices, mesh.faces, mesh.weld)
    warnings = [f"vertex {i} has no incident face; normal set to +Z" for i in isolated]
    for w in warnings:
        logger.warning(w)
    result = TriMesh(mesh.vertices, mesh.faces, _frozen(normals), mesh.uv_coords, mesh.weld)
    return result, warnings


def merge_meshes(meshes: List[TriMesh]) -> TriMesh:
    """Concatenate meshes; UVs kept only when every part has them."""
    verts, faces, uvs, welds = [], [], [], []
    offset = 0
    weld_offset = 0
    has_uv = all(m.uv_coords is not None for m in meshes)
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        if has_uv:
            uvs.append(m.uv_coords)
        w = np.arange(m.vertex_count) if m.weld is None else m.weld
        welds.append(w + weld_offset)
        offset += m.vertex_count
        weld_offset += int(w.max()) + 1 if m.vertex_count else 0
    return TriMesh.create(
        np.concatenate(verts),
        np.concatenate(faces),
        np.concatenate(uvs) if has_uv else None,
        weld=np.concatenate(welds),
    )


def grid_mesh(nx: int, ny: int, size: Tuple[float, float] = (1.0, 1.0),
              origin=(0.0, 0.0, 0.0)) -> TriMesh:
    """Flat (nx+1) x (ny+1) vertex grid in the XY plane with UVs."""
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    uv = np.stack([gx.ravel(), gy.ravel()], axis=1)
    verts = np.zeros((uv.shape[0], 3))
    verts[:, 0] = uv[:, 0] * size[0]
    verts[:, 1] = uv[:, 1] * size[1]
    verts += np.asarray(origin, dtype=np.float64)
    faces = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b = a + 1
            c = a + nx + 1
            d = c + 1
            faces.append((a, b, d))
            faces.append((a, d, c))
    return TriMesh.create(verts, faces, uv)


def unit_cube() -> TriMesh:
    """Axis-aligned cube [0,1]^3 with 12 outward-facing triangles."""
    v = [(x, y, z) for z in (0, 1) for y in (0, 1) for x in (0, 1)]
    f = [
        (0, 2, 1), (1, 2, 3),
        (4, 5, 6), (5, 7, 6),
        (0, 1, 4), (1, 5, 4),
        (2, 6, 3), (3, 6, 7),
        (0, 4, 2), (2, 4, 6),
        (1, 3, 5), (3, 7, 5),
    ]
    return TriMesh.create(v, f)


def icosphere(subdivisions: int = 2, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Subdivided icosahedron; 20 * 4**subdivisions faces."""
    t = (1.0 + 5.0 ** 0.5) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    points = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(a: int, b: int) -> int:
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = points[a] + points[b]
                points.append(m / np.linalg.norm(m))
                cache[key] = len(points) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined
    v = np.array(points) * radius + np.asarray(center, dtype=np.float64)
    return TriMesh.create(v, faces)


def uv_sphere(rings: int = 16, segments: int = 16, radius: float = 1.0,
              center=(0.0, 0.0, 0.0)) -> TriMesh:
    """
    Latitude/longitude sphere with a non-overlapping UV layout.

    The seam column is duplicated and welded; pole triangles that would
    collapse are dropped, so every face has positive area.
    """
    verts, uvs = [], []
    for r in range(rings + 1):
        theta = np.pi * r / rings
        for s in range(segments + 1):
            phi = 2.0 * np.pi * s / segments
            verts.append((np.sin(theta) * np.cos(phi), np.cos(theta), np.sin(theta) * np.sin(phi)))
            uvs.append((s / segments, 1.0 - r / rings))
    verts = np.array(verts) * radius + np.asarray(center, dtype=np.float64)
    weld = np.arange(len(verts))
    for r in range(rings + 1):
        row = r * (segments + 1)
        weld[row + segments] = row
        if r in (0, rings):
            weld[row:row + segments + 1] = row
    faces = []
    for r in range(rings):
        for s in range(segments):
            a = r * (segments + 1) + s
            b = a + 1
            c = a + segments + 1
            d = c + 1
            if r != 0:
                faces.append((a, b, d))
            if r != rings - 1:
                faces.append((a, d, c))
    faces = np.array(faces)
    # keep outward winding
    tri = verts[faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    inward = np.einsum("ij,ij->i", n, tri.mean(axis=1) - np.asarray(center)) < 0
    faces[inward] = faces[inward][:, ::-1]
    return TriMesh.create(verts, faces, np.array(uvs), weld=weld)
