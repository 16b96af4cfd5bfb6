"""Wavefront OBJ subset reader and writer (v, vt, vn, f records)."""

import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from ..errors import MeshValidationError, ObjParseError
from .mesh import TriMesh

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _resolve(index_text: str, count: int, path: PathLike, line_no: int, kind: str) -> int:
    try:
        idx = int(index_text)
    except ValueError:
        raise ObjParseError(path, line_no, f"bad {kind} index '{index_text}'")
    if idx == 0:
        raise ObjParseError(path, line_no, f"{kind} index 0 (OBJ indices are 1-based)")
    resolved = idx - 1 if idx > 0 else count + idx
    if resolved < 0 or resolved >= count:
        raise ObjParseError(path, line_no, f"{kind} index {idx} out of range ({count} defined)")
    return resolved


def _floats(values: List[str], n: int, path: PathLike, line_no: int, record: str) -> List[float]:
    if len(values) < n:
        raise ObjParseError(path, line_no, f"'{record}' record needs {n} numbers")
    try:
        return [float(x) for x in values[:n]]
    except ValueError:
        raise ObjParseError(path, line_no, f"non-numeric '{record}' record")


def load_mesh(path: PathLike) -> TriMesh:
    """
    Load a triangle mesh from an OBJ file.

    Polygons are fan-triangulated. Corners that share a position but use
    different texture coordinates become separate vertices welded to the
    same position id. Normals are taken from vn records only when every
    corner of every face references one consistently; otherwise they are
    computed.
    """
    positions: List[List[float]] = []
    texcoords: List[List[float]] = []
    normals: List[List[float]] = []
    corners: List[Tuple[int, int, int]] = []
    faces: List[Tuple[int, int, int]] = []
    corner_ids: Dict[Tuple[int, int, int], int] = {}

    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            values = line.split()
            if not values or values[0].startswith("#"):
                continue
            record = values[0]
            if record == "v":
                positions.append(_floats(values[1:], 3, path, line_no, "v"))
            elif record == "vt":
                texcoords.append(_floats(values[1:], 2, path, line_no, "vt"))
            elif record == "vn":
                normals.append(_floats(values[1:], 3, path, line_no, "vn"))
            elif record == "f":
                if len(values) < 4:
                    raise ObjParseError(path, line_no, "face needs at least 3 corners")
                polygon = []
                for token in values[1:]:
                    parts = token.split("/")
                    vi = _resolve(parts[0], len(positions), path, line_no, "vertex")
                    ti = -1
                    ni = -1
                    if len(parts) > 1 and parts[1]:
                        ti = _resolve(parts[1], len(texcoords), path, line_no, "texcoord")
                    if len(parts) > 2 and parts[2]:
                        ni = _resolve(parts[2], len(normals), path, line_no, "normal")
                    key = (vi, ti, ni)
                    if key not in corner_ids:
                        corner_ids[key] = len(corners)
                        corners.append(key)
                    polygon.append(corner_ids[key])
                for k in range(1, len(polygon) - 1):
                    faces.append((polygon[0], polygon[k], polygon[k + 1]))
            # materials, groups, objects and smoothing records are ignored

    if not corners:
        raise ObjParseError(path, 0, "no faces")
    corner_arr = np.array(corners, dtype=np.int64)
    # stable vertex order: by texcoord, then normal, then position index
    order = np.lexsort((corner_arr[:, 0], corner_arr[:, 2], corner_arr[:, 1]))
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    corner_arr = corner_arr[order]
    faces = rank[np.array(faces, dtype=np.int64)]
    pos = np.array(positions, dtype=np.float64)
    vertices = pos[corner_arr[:, 0]]
    weld = corner_arr[:, 0]
    _, weld = np.unique(weld, return_inverse=True)

    uv = None
    if texcoords and np.all(corner_arr[:, 1] >= 0):
        uv = np.array(texcoords, dtype=np.float64)[corner_arr[:, 1]]
    vn = None
    if normals and np.all(corner_arr[:, 2] >= 0):
        vn = np.array(normals, dtype=np.float64)[corner_arr[:, 2]]
        length = np.linalg.norm(vn, axis=1)
        if np.any(length == 0.0):
            vn = None
        else:
            vn = vn / length[:, None]
    try:
        return TriMesh.create(vertices, faces, uv, vertex_normals=vn, weld=weld)
    except MeshValidationError:
        logger.error("validation failed for %s", path)
        raise


def save_mesh(mesh: TriMesh, path: PathLike, precision: int = 9) -> None:
    """
    Write a mesh as OBJ with v/vt/vn/f records.

    One ``v`` record is written per weld group so seam-duplicated vertices
    share a position; ``vt`` and ``vn`` are per vertex.
    """
    fmt = f"{{:.{precision}g}}"
    weld = np.arange(mesh.vertex_count) if mesh.weld is None else mesh.weld
    _, first, pos_index = np.unique(weld, return_index=True, return_inverse=True)
    lines = ["# uvdrape mesh"]
    for p in mesh.vertices[first]:
        lines.append("v " + " ".join(fmt.format(x) for x in p))
    has_uv = mesh.uv_coords is not None
    if has_uv:
        for t in mesh.uv_coords:
            lines.append("vt " + " ".join(fmt.format(x) for x in t))
    for n in mesh.vertex_normals:
        lines.append("vn " + " ".join(fmt.format(x) for x in n))
    for face in mesh.faces:
        tokens = []
        for corner in face:
            vi = int(pos_index[corner]) + 1
            ci = int(corner) + 1
            tokens.append(f"{vi}/{ci}/{ci}" if has_uv else f"{vi}//{ci}")
        lines.append("f " + " ".join(tokens))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
