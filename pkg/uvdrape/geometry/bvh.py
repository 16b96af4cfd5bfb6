"""Median-split BVH over triangles and ray/mesh intersection."""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..config import BVH_MAX_DEPTH, BVH_MAX_LEAF_SIZE, RAY_EPSILON, SURFACE_T_MIN
from ..errors import EmptyMeshError
from .mesh import Ray, TriMesh


@dataclass(frozen=True)
class Hit:
    """Nearest ray/triangle intersection."""

    face_index: int
    distance: float
    barycentric: Tuple[float, float, float]


@dataclass(frozen=True)
class Bvh:
    """
    Flattened bounding volume hierarchy.

    Interior nodes have ``count == 0`` and children ``left``/``right``;
    leaves cover ``triangle_order[start:start + count]``.
    """

    bounds_min: np.ndarray
    bounds_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    triangle_order: np.ndarray

    @property
    def node_count(self) -> int:
        return int(self.bounds_min.shape[0])

    def depth(self) -> int:
        deepest = 0
        stack = [(0, 1)]
        while stack:
            node, d = stack.pop()
            deepest = max(deepest, d)
            if self.count[node] == 0:
                stack.append((int(self.left[node]), d + 1))
                stack.append((int(self.right[node]), d + 1))
        return deepest


def build_bvh(mesh: TriMesh, max_leaf_size: int = BVH_MAX_LEAF_SIZE,
              max_depth: int = BVH_MAX_DEPTH) -> Bvh:
    """Build a BVH by splitting at the centroid median along the widest axis."""
    if mesh.face_count == 0:
        raise EmptyMeshError("cannot build a BVH over a mesh with no faces")
    tri = mesh.triangles()
    tri_min = tri.min(axis=1)
    tri_max = tri.max(axis=1)
    centroids = tri.mean(axis=1)

    order = np.arange(mesh.face_count)
    nodes_min: List[np.ndarray] = []
    nodes_max: List[np.ndarray] = []
    left: List[int] = []
    right: List[int] = []
    start: List[int] = []
    count: List[int] = []

    def new_node(lo: int, hi: int) -> int:
        idx = order[lo:hi]
        nodes_min.append(tri_min[idx].min(axis=0))
        nodes_max.append(tri_max[idx].max(axis=0))
        left.append(-1)
        right.append(-1)
        start.append(lo)
        count.append(hi - lo)
        return len(nodes_min) - 1

    root = new_node(0, mesh.face_count)
    stack = [(root, 0, mesh.face_count, 1)]
    while stack:
        node, lo, hi, depth = stack.pop()
        n = hi - lo
        if n <= max_leaf_size or depth >= max_depth:
            continue
        idx = order[lo:hi]
        c = centroids[idx]
        extent = c.max(axis=0) - c.min(axis=0)
        axis = int(np.argmax(extent))
        # stable sort keeps coincident centroids in face order, so the split terminates
        local = np.argsort(c[:, axis], kind="stable")
        order[lo:hi] = idx[local]
        mid = lo + n // 2
        l_node = new_node(lo, mid)
        r_node = new_node(mid, hi)
        left[node] = l_node
        right[node] = r_node
        count[node] = 0
        stack.append((r_node, mid, hi, depth + 1))
        stack.append((l_node, lo, mid, depth + 1))

    return Bvh(
        bounds_min=np.array(nodes_min),
        bounds_max=np.array(nodes_max),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        start=np.array(start, dtype=np.int64),
        count=np.array(count, dtype=np.int64),
        triangle_order=order,
    )


def _moller_trumbore(v0: np.ndarray, v1: np.ndarray, v2: np.ndarray,
                     origin: np.ndarray, direction: np.ndarray):
    """
    Vectorized Moller-Trumbore over triangle rows against one ray or one ray per row.

    Products are written out component by component so every triangle is
    evaluated with the same arithmetic regardless of batch size.
    """
    e1 = v1 - v0
    e2 = v2 - v0
    dx, dy, dz = np.moveaxis(np.asarray(direction), -1, 0)
    px = dy * e2[:, 2] - dz * e2[:, 1]
    py = dz * e2[:, 0] - dx * e2[:, 2]
    pz = dx * e2[:, 1] - dy * e2[:, 0]
    det = e1[:, 0] * px + e1[:, 1] * py + e1[:, 2] * pz
    ok = np.abs(det) > RAY_EPSILON
    inv = np.where(ok, 1.0, 0.0) / np.where(ok, det, 1.0)
    s = origin - v0
    u = (s[:, 0] * px + s[:, 1] * py + s[:, 2] * pz) * inv
    qx = s[:, 1] * e1[:, 2] - s[:, 2] * e1[:, 1]
    qy = s[:, 2] * e1[:, 0] - s[:, 0] * e1[:, 2]
    qz = s[:, 0] * e1[:, 1] - s[:, 1] * e1[:, 0]
    v = (dx * qx + dy * qy + dz * qz) * inv
    t = (e2[:, 0] * qx + e2[:, 1] * qy + e2[:, 2] * qz) * inv
    ok &= (u >= -RAY_EPSILON) & (v >= -RAY_EPSILON) & (u + v <= 1.0 + RAY_EPSILON)
    return ok, t, u, v


def _best(faces: np.ndarray, ok: np.ndarray, t: np.ndarray, u: np.ndarray, v: np.ndarray,
          t_min: float, t_max: float) -> Optional[Hit]:
    ok = ok & (t > t_min) & (t <= t_max)
    if not np.any(ok):
        return None
    cand = np.flatnonzero(ok)
    # nearest distance, ties to the lowest face index
    pick = cand[np.lexsort((faces[cand], t[cand]))[0]]
    b1 = float(min(max(u[pick], 0.0), 1.0))
    b2 = float(min(max(v[pick], 0.0), 1.0 - b1))
    return Hit(int(faces[pick]), float(t[pick]), (1.0 - b1 - b2, b1, b2))


def _check_range(t_min: float, t_max: float) -> None:
    if t_min < 0.0:
        raise ValueError(f"t_min must be >= 0, got {t_min}")
    if not t_max > t_min:
        raise ValueError(f"t_max must exceed t_min, got [{t_min}, {t_max}]")


def brute_force_intersect(mesh: TriMesh, ray: Ray, t_min: float = SURFACE_T_MIN,
                          t_max: float = np.inf) -> Optional[Hit]:
    """Reference intersection testing every triangle."""
    _check_range(t_min, t_max)
    faces = np.arange(mesh.face_count)
    tri = mesh.triangles()
    ok, t, u, v = _moller_trumbore(tri[:, 0], tri[:, 1], tri[:, 2], ray.origin, ray.direction)
    return _best(faces, ok, t, u, v, t_min, t_max)


@dataclass(frozen=True)
class RayHits:
    """Nearest hit per ray; ``face_index`` is -1 on misses."""

    face_index: np.ndarray
    distance: np.ndarray
    barycentric: np.ndarray

    @property
    def mask(self) -> np.ndarray:
        return self.face_index >= 0

    def __len__(self) -> int:
        return int(self.face_index.shape[0])

    def hit(self, i: int) -> Optional[Hit]:
        if self.face_index[i] < 0:
            return None
        return Hit(int(self.face_index[i]), float(self.distance[i]), tuple(float(b) for b in self.barycentric[i]))


def cast_rays(bvh: Bvh, mesh: TriMesh, origins: np.ndarray, directions: np.ndarray,
              t_min: float = SURFACE_T_MIN, t_max: float = np.inf) -> RayHits:
    """
    Nearest hit of every ray with distance in (t_min, t_max].

    All rays descend the tree together one level at a time as (ray, node)
    pairs; a pair is dropped once its box starts beyond the ray's best hit.
    Directions must be unit length.
    """
    _check_range(t_min, t_max)
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    n = origins.shape[0]
    best_face = np.full(n, -1, dtype=np.int64)
    best_t = np.full(n, np.inf)
    best_u = np.zeros(n)
    best_v = np.zeros(n)
    limit = np.full(n, float(t_max))
    with np.errstate(divide="ignore"):
        inv_dir = 1.0 / directions

    rays = np.arange(n)
    nodes = np.zeros(n, dtype=np.int64)
    while rays.size:
        with np.errstate(invalid="ignore"):
            t0 = (bvh.bounds_min[nodes] - origins[rays]) * inv_dir[rays]
            t1 = (bvh.bounds_max[nodes] - origins[rays]) * inv_dir[rays]
        enter = np.nanmax(np.fmin(t0, t1), axis=1)
        leave = np.nanmin(np.fmax(t0, t1), axis=1)
        # slack keeps hits that sit exactly on a box face
        slack = 1e-9 * np.maximum(1.0, np.abs(leave))
        keep = ~((leave < enter - slack) | (leave < t_min - slack) | (enter > limit[rays] + slack))
        rays, nodes = rays[keep], nodes[keep]

        leaf = bvh.count[nodes] > 0
        if leaf.any():
            leaf_rays, leaf_nodes = rays[leaf], nodes[leaf]
            counts = bvh.count[leaf_nodes]
            pair_ray = np.repeat(leaf_rays, counts)
            within = np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
            faces = bvh.triangle_order[np.repeat(bvh.start[leaf_nodes], counts) + within]
            tri = mesh.vertices[mesh.faces[faces]]
            ok, t, u, v = _moller_trumbore(tri[:, 0], tri[:, 1], tri[:, 2], origins[pair_ray], directions[pair_ray])
            ok &= (t > t_min) & (t <= limit[pair_ray])
            cand = np.flatnonzero(ok)
            if cand.size:
                # nearest per ray, ties to the lowest face index
                cand = cand[np.lexsort((faces[cand], t[cand], pair_ray[cand]))]
                first = np.ones(cand.size, dtype=bool)
                first[1:] = pair_ray[cand[1:]] != pair_ray[cand[:-1]]
                cand = cand[first]
                r = pair_ray[cand]
                better = (t[cand] < best_t[r]) | ((t[cand] == best_t[r]) & (faces[cand] < best_face[r]))
                cand, r = cand[better], r[better]
                best_face[r] = faces[cand]
                best_t[r] = t[cand]
                best_u[r] = u[cand]
                best_v[r] = v[cand]
                limit[r] = t[cand]

        inner_rays, inner_nodes = rays[~leaf], nodes[~leaf]
        rays = np.concatenate([inner_rays, inner_rays])
        nodes = np.concatenate([bvh.left[inner_nodes], bvh.right[inner_nodes]])

    found = best_face >= 0
    b1 = np.clip(best_u, 0.0, 1.0)
    b2 = np.minimum(np.maximum(best_v, 0.0), 1.0 - b1)
    bary = np.where(found[:, None], np.stack([1.0 - b1 - b2, b1, b2], axis=1), 0.0)
    return RayHits(best_face, np.where(found, best_t, 0.0), bary)


def intersect(bvh: Bvh, mesh: TriMesh, ray: Ray, t_min: float = SURFACE_T_MIN,
              t_max: float = np.inf) -> Optional[Hit]:
    """Nearest hit with distance in (t_min, t_max], or None."""
    return cast_rays(bvh, mesh, ray.origin[None], ray.direction[None], t_min, t_max).hit(0)


def intersect_many(bvh: Bvh, mesh: TriMesh, origins: np.ndarray, directions: np.ndarray,
                   t_min: float = SURFACE_T_MIN, t_max: float = np.inf) -> List[Optional[Hit]]:
    """Cast one ray per row; directions are normalized."""
    directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    length = np.linalg.norm(directions, axis=1, keepdims=True)
    if np.any(length == 0.0):
        raise ValueError("ray direction must be non-zero")
    hits = cast_rays(bvh, mesh, origins, directions / length, t_min, t_max)
    return [hits.hit(i) for i in range(len(hits))]
