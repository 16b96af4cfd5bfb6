"""Skeleton and body shape parameters of the procedural humanoid."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import from_section, to_plain
from ..errors import ShapeParamError

# Y is up, X is lateral (``_l`` bones sit at +X), Z faces forward.
BONE_NAMES = (
    "pelvis",
    "spine",
    "neck",
    "upper_arm_l",
    "lower_arm_l",
    "upper_arm_r",
    "lower_arm_r",
    "upper_leg_l",
    "lower_leg_l",
    "upper_leg_r",
    "lower_leg_r",
)

SHAPE_RANGE = (0.5, 2.0)

# Rest measurements at unit shape (meters)
ANKLE_HEIGHT = 0.05
UPPER_LEG_LENGTH = 0.45
LOWER_LEG_LENGTH = 0.45
PELVIS_LENGTH = 0.15
SPINE_LENGTH = 0.35
NECK_LENGTH = 0.19
UPPER_ARM_LENGTH = 0.28
LOWER_ARM_LENGTH = 0.25
HIP_OFFSET = 0.10
SHOULDER_OFFSET = 0.19
SHOULDER_DROP = 0.05

RADII = {
    "torso": 0.14,
    "neck": 0.06,
    "upper_arm": 0.05,
    "lower_arm": 0.04,
    "upper_leg": 0.07,
    "lower_leg": 0.05,
}


@dataclass(frozen=True)
class ShapeParams:
    """Per-segment scale factors (alpha); every factor lies in [0.5, 2.0]."""

    torso: float = 1.0
    arms: float = 1.0
    legs: float = 1.0
    neck: float = 1.0
    girth: float = 1.0

    def __post_init__(self):
        lo, hi = SHAPE_RANGE
        for name, value in self.to_dict().items():
            if not lo <= float(value) <= hi:
                raise ShapeParamError(f"shape factor '{name}' = {value} outside [{lo}, {hi}]")

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "ShapeParams":
        return from_section(cls, data, "body.shape")

    def to_dict(self) -> Dict[str, float]:
        return to_plain(self)

    def radius(self, segment: str) -> float:
        return RADII[segment] * self.girth


@dataclass(frozen=True)
class Bone:
    name: str
    parent: Optional[int]
    head: np.ndarray
    tail: np.ndarray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.tail - self.head))


@dataclass(frozen=True)
class Skeleton:
    """Bones in topological order; the rest pose is a T-pose."""

    bones: Tuple[Bone, ...]
    _index: Dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        roots = [b for b in self.bones if b.parent is None]
        if len(roots) != 1:
            raise ValueError(f"skeleton needs exactly one root, found {len(roots)}")
        for i, bone in enumerate(self.bones):
            if bone.parent is not None and not 0 <= bone.parent < i:
                raise ValueError(f"bone '{bone.name}' parent {bone.parent} is not an earlier bone")
            if bone.length <= 1e-4:
                raise ValueError(f"bone '{bone.name}' is shorter than 1e-4 m")
            self._index[bone.name] = i

    @property
    def bone_count(self) -> int:
        return len(self.bones)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(b.name for b in self.bones)

    def index(self, name: str) -> int:
        return self._index[name]

    def heads(self) -> np.ndarray:
        return np.array([b.head for b in self.bones])

    def tails(self) -> np.ndarray:
        return np.array([b.tail for b in self.bones])

    def lengths(self) -> np.ndarray:
        return np.array([b.length for b in self.bones])

    def parents(self) -> List[Optional[int]]:
        return [b.parent for b in self.bones]


def build_skeleton(shape: ShapeParams) -> Skeleton:
    """T-pose skeleton scaled by the shape factors."""
    upper_leg = UPPER_LEG_LENGTH * shape.legs
    lower_leg = LOWER_LEG_LENGTH * shape.legs
    hip_y = ANKLE_HEIGHT + upper_leg + lower_leg
    knee_y = ANKLE_HEIGHT + lower_leg
    spine_y = hip_y + PELVIS_LENGTH * shape.torso
    chest_y = spine_y + SPINE_LENGTH * shape.torso
    crown_y = chest_y + NECK_LENGTH * shape.neck
    shoulder_y = chest_y - SHOULDER_DROP * shape.torso
    hip_x = HIP_OFFSET * shape.girth
    shoulder_x = SHOULDER_OFFSET * shape.girth
    elbow_x = shoulder_x + UPPER_ARM_LENGTH * shape.arms
    wrist_x = elbow_x + LOWER_ARM_LENGTH * shape.arms

    def p(x, y, z=0.0):
        return np.array([x, y, z], dtype=np.float64)

    layout = [
        ("pelvis", None, p(0, hip_y), p(0, spine_y)),
        ("spine", 0, p(0, spine_y), p(0, chest_y)),
        ("neck", 1, p(0, chest_y), p(0, crown_y)),
        ("upper_arm_l", 1, p(shoulder_x, shoulder_y), p(elbow_x, shoulder_y)),
        ("lower_arm_l", 3, p(elbow_x, shoulder_y), p(wrist_x, shoulder_y)),
        ("upper_arm_r", 1, p(-shoulder_x, shoulder_y), p(-elbow_x, shoulder_y)),
        ("lower_arm_r", 5, p(-elbow_x, shoulder_y), p(-wrist_x, shoulder_y)),
        ("upper_leg_l", 0, p(hip_x, hip_y), p(hip_x, knee_y)),
        ("lower_leg_l", 7, p(hip_x, knee_y), p(hip_x, ANKLE_HEIGHT)),
        ("upper_leg_r", 0, p(-hip_x, hip_y), p(-hip_x, knee_y)),
        ("lower_leg_r", 9, p(-hip_x, knee_y), p(-hip_x, ANKLE_HEIGHT)),
    ]
    bones = []
    for name, parent, head, tail in layout:
        head.setflags(write=False)
        tail.setflags(write=False)
        bones.append(Bone(name, parent, head, tail))
    return Skeleton(tuple(bones))
