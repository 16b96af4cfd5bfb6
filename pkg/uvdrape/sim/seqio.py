"""Packed cloth sequence files (CSQ1) and numbered OBJ export."""

import struct
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from ..errors import FormatVersionError, MapMismatchError
from ..geometry.mesh import TriMesh
from ..geometry.objio import save_mesh

PathLike = Union[str, Path]

MAGIC = b"CSQ1"
_HEADER = struct.Struct("<4sIII")


def save_sequence(frames: Sequence[TriMesh], path: PathLike) -> None:
    """Topology once, then float64 positions per frame."""
    if not frames:
        raise ValueError("cannot write an empty cloth sequence")
    faces = frames[0].faces
    for k, frame in enumerate(frames):
        if frame.vertex_count != frames[0].vertex_count or not np.array_equal(frame.faces, faces):
            raise MapMismatchError(f"frame {k} topology differs from frame 0")
    header = _HEADER.pack(MAGIC, len(frames), frames[0].vertex_count, faces.shape[0])
    positions = np.stack([f.vertices for f in frames]).astype("<f8")
    Path(path).write_bytes(header + positions.tobytes() + faces.astype("<i4").tobytes())


def load_sequence(path: PathLike) -> List[TriMesh]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatVersionError(f"{path}: truncated sequence header")
    magic, n_frames, n_verts, n_faces = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatVersionError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    pos_bytes = n_frames * n_verts * 3 * 8
    if len(raw) != _HEADER.size + pos_bytes + n_faces * 3 * 4:
        raise FormatVersionError(f"{path}: size does not match {n_frames} frames of {n_verts} vertices")
    positions = np.frombuffer(raw, dtype="<f8", count=n_frames * n_verts * 3, offset=_HEADER.size)
    positions = positions.reshape(n_frames, n_verts, 3)
    faces = np.frombuffer(raw, dtype="<i4", count=n_faces * 3, offset=_HEADER.size + pos_bytes)
    faces = faces.reshape(n_faces, 3).astype(np.int64)
    first = TriMesh.create(positions[0], faces)
    return [first] + [first.with_vertices(p) for p in positions[1:]]


def export_obj_frames(frames: Sequence[TriMesh], directory: PathLike, stem: str = "frame") -> List[Path]:
    """Write ``<stem>_0000.obj`` ... into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, frame in enumerate(frames):
        p = directory / f"{stem}_{k:04d}.obj"
        save_mesh(frame, p)
        paths.append(p)
    return paths
