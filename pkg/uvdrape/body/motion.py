"""Motion sequences and their plain-text file format.

Format::

    bones: pelvis spine ...
    fps: 30
    tx ty tz  w x y z  w x y z ...     (one line per frame)

Blank lines and ``#`` comments are ignored.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import MotionFormatError, PoseError
from .skeleton import BONE_NAMES
from .skinning import Pose

PathLike = Union[str, Path]

MIN_FRAMES = 5
UNIT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class MotionSequence:
    """Per-frame local bone rotations (w, x, y, z) and root translations."""

    frame_rate: float
    bone_names: Tuple[str, ...]
    rotations: np.ndarray
    translations: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.rotations.ndim != 3 or self.rotations.shape[1:] != (len(self.bone_names), 4):
            raise PoseError(f"rotations shape {self.rotations.shape} does not match {len(self.bone_names)} bones")
        if self.translations.shape != (self.rotations.shape[0], 3):
            raise PoseError("one root translation per frame required")
        if self.frame_count < MIN_FRAMES:
            raise PoseError(f"motion needs at least {MIN_FRAMES} frames, got {self.frame_count}")
        norms = np.linalg.norm(self.rotations, axis=-1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOLERANCE):
            raise PoseError("rotation quaternions must have unit length")
        if self.frame_rate <= 0:
            raise PoseError(f"frame rate must be positive, got {self.frame_rate}")

    @property
    def frame_count(self) -> int:
        return int(self.rotations.shape[0])

    def frame(self, k: int) -> Pose:
        return Pose(self.rotations[k], self.translations[k])

    def poses(self) -> List[Pose]:
        return [self.frame(k) for k in range(self.frame_count)]

    @classmethod
    def identity(cls, frames: int, frame_rate: float = 30.0,
                 bone_names: Sequence[str] = BONE_NAMES, name: str = "idle") -> "MotionSequence":
        rot = np.zeros((frames, len(bone_names), 4))
        rot[..., 0] = 1.0
        return cls(frame_rate, tuple(bone_names), rot, np.zeros((frames, 3)), name)


def load_motion(path: PathLike, bone_names: Sequence[str] = BONE_NAMES) -> MotionSequence:
    """Parse a motion file; bones may be listed in any order but must be known."""
    names: Optional[List[str]] = None
    fps: Optional[float] = None
    rows: List[List[float]] = []
    last_line = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            last_line = line_no
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if text.startswith("bones:"):
                names = text[len("bones:"):].split()
                unknown = [n for n in names if n not in bone_names]
                if unknown:
                    raise MotionFormatError(path, line_no, f"unknown bone '{unknown[0]}'")
                if sorted(names) != sorted(bone_names):
                    raise MotionFormatError(path, line_no, "bone list does not match the skeleton")
                continue
            if text.startswith("fps:"):
                try:
                    fps = float(text[len("fps:"):])
                except ValueError:
                    raise MotionFormatError(path, line_no, "bad fps value")
                continue
            if names is None or fps is None:
                raise MotionFormatError(path, line_no, "frame before 'bones:' and 'fps:' headers")
            try:
                values = [float(x) for x in text.split()]
            except ValueError:
                raise MotionFormatError(path, line_no, "non-numeric frame value")
            expected = 3 + 4 * len(names)
            if len(values) != expected:
                raise MotionFormatError(
                    path, line_no, f"expected {expected} values (translation + 4 per bone), got {len(values)}"
                )
            rows.append(values)

    if names is None or fps is None:
        raise MotionFormatError(path, last_line, "missing 'bones:' or 'fps:' header")
    if len(rows) < MIN_FRAMES:
        raise MotionFormatError(path, last_line, f"need at least {MIN_FRAMES} frames, got {len(rows)}")
    data = np.array(rows, dtype=np.float64)
    translations = data[:, :3]
    quats = data[:, 3:].reshape(len(rows), len(names), 4)
    order = [names.index(n) for n in bone_names]
    try:
        return MotionSequence(fps, tuple(bone_names), quats[:, order], translations, Path(path).stem)
    except PoseError as exc:
        raise MotionFormatError(path, last_line, str(exc)) from exc


def save_motion(motion: MotionSequence, path: PathLike, precision: int = 9) -> None:
    """Write a motion file with ``precision`` significant digits."""
    fmt = f"{{:.{precision}g}}"
    lines = [
        "bones: " + " ".join(motion.bone_names),
        "fps: " + fmt.format(motion.frame_rate),
    ]
    for t, q in zip(motion.translations, motion.rotations):
        values = list(t) + list(q.ravel())
        lines.append(" ".join(fmt.format(v) for v in values))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
