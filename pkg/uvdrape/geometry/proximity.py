"""Closest-point queries on triangle meshes."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

from .mesh import TriMesh


def closest_point_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
                               ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closest points from p to triangles (a, b, c), vectorized over rows.

    Returns:
        (points, barycentrics) with barycentrics of shape (n, 3).
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    n = p.shape[0]
    bary = np.zeros((n, 3))
    done = np.zeros(n, dtype=bool)

    def assign(mask, w0, w1, w2):
        mask = mask & ~done
        bary[mask, 0] = w0[mask] if np.ndim(w0) else w0
        bary[mask, 1] = w1[mask] if np.ndim(w1) else w1
        bary[mask, 2] = w2[mask] if np.ndim(w2) else w2
        done[mask] = True

    with np.errstate(divide="ignore", invalid="ignore"):
        assign((d1 <= 0) & (d2 <= 0), 1.0, 0.0, 0.0)
        assign((d3 >= 0) & (d4 <= d3), 0.0, 1.0, 0.0)
        vc = d1 * d4 - d3 * d2
        v_ab = d1 / (d1 - d3)
        assign((vc <= 0) & (d1 >= 0) & (d3 <= 0), 1.0 - v_ab, v_ab, 0.0)
        assign((d6 >= 0) & (d5 <= d6), 0.0, 0.0, 1.0)
        vb = d5 * d2 - d1 * d6
        w_ac = d2 / (d2 - d6)
        assign((vb <= 0) & (d2 >= 0) & (d6 <= 0), 1.0 - w_ac, 0.0, w_ac)
        va = d3 * d6 - d5 * d4
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        assign((va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0), 0.0, 1.0 - w_bc, w_bc)
        denom = 1.0 / (va + vb + vc)
        v = vb * denom
        w = vc * denom
        assign(np.ones(n, dtype=bool), 1.0 - v - w, v, w)
    points = bary[:, :1] * a + bary[:, 1:2] * b + bary[:, 2:] * c
    return points, bary


@dataclass(frozen=True)
class SurfaceProjector:
    """Nearest-surface queries accelerated by a vertex KD-tree."""

    mesh: TriMesh
    tree: cKDTree
    vertex_faces: Tuple[np.ndarray, np.ndarray]

    @classmethod
    def build(cls, mesh: TriMesh) -> "SurfaceProjector":
        order = np.argsort(mesh.faces.ravel(), kind="stable")
        face_of_corner = order // 3
        counts = np.bincount(mesh.faces.ravel(), minlength=mesh.vertex_count)
        offsets = np.concatenate([[0], np.cumsum(counts)])
        return cls(mesh, cKDTree(mesh.vertices), (offsets, face_of_corner))

    def project(self, points: np.ndarray, k: int = 8) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Closest surface point for each query.

        Returns:
            (face_index, barycentric, distance)
        """
        points = np.atleast_2d(points)
        k = min(k, self.mesh.vertex_count)
        _, near = self.tree.query(points, k=k)
        near = near.reshape(points.shape[0], -1)
        offsets, face_of_corner = self.vertex_faces
        faces_out = np.empty(points.shape[0], dtype=np.int64)
        bary_out = np.empty((points.shape[0], 3))
        dist_out = np.empty(points.shape[0])
        for i, p in enumerate(points):
            cand = np.unique(np.concatenate([face_of_corner[offsets[v]:offsets[v + 1]] for v in near[i]]))
            tri = self.mesh.vertices[self.mesh.faces[cand]]
            q = np.repeat(p[None, :], cand.size, axis=0)
            closest, bary = closest_point_on_triangles(q, tri[:, 0], tri[:, 1], tri[:, 2])
            d = np.linalg.norm(closest - q, axis=1)
            best = int(np.argmin(d))
            faces_out[i] = cand[best]
            bary_out[i] = bary[best]
            dist_out[i] = d[best]
        return faces_out, bary_out, dist_out
