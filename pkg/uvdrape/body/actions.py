"""Library of named procedural actions.

Every action starts from the T-pose (a smooth ramp over the first
``RAMP_SECONDS``) so cloth initialized on the rest body can settle at
frame 0. Variants ``<name>_v2``/``<name>_v3`` rescale the amplitude.
"""

from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from .motion import MotionSequence
from .skeleton import BONE_NAMES

RAMP_SECONDS = 0.3
VARIANT_AMPLITUDES = {1: 1.0, 2: 0.7, 3: 1.3}

_B = {name: i for i, name in enumerate(BONE_NAMES)}
_X, _Y, _Z = np.eye(3)

ActionFn = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


def _blank(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return np.zeros((t.size, len(BONE_NAMES), 3)), np.zeros((t.size, 3))


def _turn(rot: np.ndarray, bone: str, axis: np.ndarray, angle: np.ndarray) -> None:
    rot[:, _B[bone]] += np.asarray(angle)[:, None] * axis


def _wave(t: np.ndarray, hz: float, phase: float = 0.0) -> np.ndarray:
    return np.sin(2.0 * np.pi * hz * t + phase)


def _idle(t):
    return _blank(t)


def _swing_arms(t):
    rot, trans = _blank(t)
    s = _wave(t, 1.0)
    _turn(rot, "upper_arm_l", _Z, np.full(t.size, -0.6))
    _turn(rot, "upper_arm_r", _Z, np.full(t.size, 0.6))
    _turn(rot, "upper_arm_l", _Y, 0.7 * s)
    _turn(rot, "upper_arm_r", _Y, 0.7 * s)
    _turn(rot, "lower_arm_l", _Y, -0.3 * (1.0 + s))
    _turn(rot, "lower_arm_r", _Y, 0.3 * (1.0 - s))
    return rot, trans


def _jump(t):
    rot, trans = _blank(t)
    up = np.maximum(0.0, _wave(t, 1.2))
    crouch = 1.0 - up
    trans[:, 1] = 0.12 * up
    for side in "lr":
        _turn(rot, f"upper_leg_{side}", _X, -0.4 * crouch)
        _turn(rot, f"lower_leg_{side}", _X, 0.7 * crouch)
    _turn(rot, "upper_arm_l", _Z, 0.5 * up)
    _turn(rot, "upper_arm_r", _Z, -0.5 * up)
    return rot, trans


def _gait(t, hz: float, hip: float, knee: float, speed: float, bounce: float = 0.0):
    rot, trans = _blank(t)
    s = _wave(t, hz)
    _turn(rot, "upper_leg_l", _X, -hip * s)
    _turn(rot, "upper_leg_r", _X, hip * s)
    _turn(rot, "lower_leg_l", _X, knee * np.maximum(0.0, s))
    _turn(rot, "lower_leg_r", _X, knee * np.maximum(0.0, -s))
    _turn(rot, "upper_arm_l", _Z, np.full(t.size, -0.7))
    _turn(rot, "upper_arm_r", _Z, np.full(t.size, 0.7))
    _turn(rot, "upper_arm_l", _Y, -0.4 * s)
    _turn(rot, "upper_arm_r", _Y, -0.4 * s)
    trans[:, 2] = speed * t
    trans[:, 1] = bounce * np.abs(s)
    return rot, trans


def _walking(t):
    return _gait(t, 1.0, 0.45, 0.5, 0.6)


def _jogging(t):
    return _gait(t, 1.6, 0.6, 0.9, 1.2, bounce=0.03)


def _moon_walk(t):
    rot, trans = _gait(t, 0.8, 0.25, 0.4, -0.35)
    _turn(rot, "pelvis", _Z, 0.05 * _wave(t, 0.8))
    return rot, trans


def _chinese_dance(t):
    rot, trans = _blank(t)
    _turn(rot, "upper_arm_l", _X, 0.8 * _wave(t, 0.8))
    _turn(rot, "upper_arm_r", _X, -0.8 * _wave(t, 0.8))
    _turn(rot, "lower_arm_l", _X, 0.6 * _wave(t, 0.8, 1.0))
    _turn(rot, "lower_arm_r", _X, -0.6 * _wave(t, 0.8, 1.0))
    _turn(rot, "spine", _Y, 0.3 * _wave(t, 0.4))
    return rot, trans


def _punch(t):
    rot, trans = _blank(t)
    right = np.maximum(0.0, _wave(t, 2.0)) ** 2
    left = np.maximum(0.0, -_wave(t, 2.0)) ** 2
    _turn(rot, "upper_arm_r", _Y, 1.3 * right)
    _turn(rot, "upper_arm_l", _Y, -1.3 * left)
    _turn(rot, "lower_arm_r", _Y, 0.8 * (1.0 - right))
    _turn(rot, "lower_arm_l", _Y, -0.8 * (1.0 - left))
    _turn(rot, "spine", _Y, 0.25 * (right - left))
    return rot, trans


def _balancing(t):
    rot, trans = _blank(t)
    _turn(rot, "upper_leg_l", _Z, np.full(t.size, 0.5))
    _turn(rot, "lower_leg_l", _X, np.full(t.size, 0.6))
    _turn(rot, "upper_arm_l", _Z, 0.3 * _wave(t, 0.5))
    _turn(rot, "upper_arm_r", _Z, 0.3 * _wave(t, 0.5))
    _turn(rot, "spine", _Z, -0.1 * _wave(t, 0.5))
    return rot, trans


def _ballet(t):
    rot, trans = _blank(t)
    lift = 0.5 - 0.5 * np.cos(2.0 * np.pi * 0.5 * t)
    _turn(rot, "upper_arm_l", _Z, 1.2 * lift)
    _turn(rot, "upper_arm_r", _Z, -1.2 * lift)
    _turn(rot, "pelvis", _Y, 0.6 * _wave(t, 0.25))
    return rot, trans


def _stretch_arms(t):
    rot, trans = _blank(t)
    _turn(rot, "upper_arm_l", _Z, 0.9 * _wave(t, 0.5))
    _turn(rot, "upper_arm_r", _Z, -0.9 * _wave(t, 0.5))
    return rot, trans


def _salsa_dance(t):
    rot, trans = _blank(t)
    _turn(rot, "pelvis", _Y, 0.35 * _wave(t, 1.2))
    _turn(rot, "upper_leg_l", _X, 0.2 * _wave(t, 1.2))
    _turn(rot, "upper_leg_r", _X, -0.2 * _wave(t, 1.2))
    _turn(rot, "upper_arm_l", _Y, 0.5 * _wave(t, 1.2, 0.5))
    _turn(rot, "upper_arm_r", _Y, 0.5 * _wave(t, 1.2, 0.5))
    trans[:, 0] = 0.08 * _wave(t, 0.6)
    return rot, trans


def _side_step(t):
    rot, trans = _blank(t)
    s = _wave(t, 0.5)
    _turn(rot, "upper_leg_l", _Z, 0.25 * np.maximum(0.0, s))
    _turn(rot, "upper_leg_r", _Z, -0.25 * np.maximum(0.0, -s))
    trans[:, 0] = 0.25 * s
    return rot, trans


def _strong_gesture(t):
    rot, trans = _blank(t)
    push = _wave(t, 0.6) ** 2
    _turn(rot, "spine", _X, 0.35 * push)
    _turn(rot, "upper_arm_l", _Y, -0.9 * push)
    _turn(rot, "upper_arm_r", _Y, 0.9 * push)
    return rot, trans


ACTIONS: Dict[str, ActionFn] = {
    "idle": _idle,
    "swing_arms": _swing_arms,
    "jump": _jump,
    "walking": _walking,
    "moon_walk": _moon_walk,
    "chinese_dance": _chinese_dance,
    "punch": _punch,
    "balancing": _balancing,
    "ballet": _ballet,
    "stretch_arms": _stretch_arms,
    "salsa_dance": _salsa_dance,
    "jogging": _jogging,
    "side_step": _side_step,
    "strong_gesture": _strong_gesture,
}


def parse_action_name(name: str) -> Tuple[str, float]:
    """Split ``walking_v2`` into the base action and its amplitude."""
    base, _, suffix = name.rpartition("_v")
    if base in ACTIONS and suffix.isdigit() and int(suffix) in VARIANT_AMPLITUDES:
        return base, VARIANT_AMPLITUDES[int(suffix)]
    if name in ACTIONS:
        return name, 1.0
    raise KeyError(f"unknown action '{name}'")


def make_action(name: str, frames: int = 30, fps: float = 30.0, amplitude: float = 1.0) -> MotionSequence:
    """Sample a named action into a MotionSequence."""
    base, variant_amp = parse_action_name(name)
    t = np.arange(frames) / fps
    rotvecs, trans = ACTIONS[base](t)
    x = np.clip(t / RAMP_SECONDS, 0.0, 1.0)
    env = x * x * (3.0 - 2.0 * x) * amplitude * variant_amp
    rotvecs = rotvecs * env[:, None, None]
    trans = trans * env[:, None]
    xyzw = Rotation.from_rotvec(rotvecs.reshape(-1, 3)).as_quat()
    quats = np.roll(xyzw, 1, axis=-1).reshape(frames, len(BONE_NAMES), 4)
    return MotionSequence(fps, BONE_NAMES, quats, trans, name)


def action_catalog(count: int) -> List[str]:
    """``count`` distinct action names: base actions first, then amplitude variants."""
    names: List[str] = []
    for variant in sorted(VARIANT_AMPLITUDES):
        for base in ACTIONS:
            names.append(base if variant == 1 else f"{base}_v{variant}")
    if count > len(names):
        raise ValueError(f"only {len(names)} distinct actions available, asked for {count}")
    return names[:count]
