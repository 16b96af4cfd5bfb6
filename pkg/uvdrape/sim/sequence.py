"""Run a garment through a motion sequence on the skinned body."""

import logging
from typing import Callable, List, Optional

import numpy as np

from ..body.model import BodyModel
from ..body.motion import MotionSequence
from ..body.skinning import Pose, bone_transforms, pose_capsules, skin_dense, surface_weights
from ..geometry.mesh import TriMesh
from ..geometry.proximity import SurfaceProjector
from .colliders import lerp_capsules
from .garments import Garment
from .params import SimParams
from .solver import ClothState, step
from .springs import build_springs

logger = logging.getLogger(__name__)


def steps_per_frame(frame_rate: float, params: SimParams) -> int:
    return max(1, int(round(1.0 / (frame_rate * params.solver.dt))))


class PinDriver:
    """Moves pinned cloth vertices with the body they are attached to."""

    def __init__(self, body: BodyModel, rest_points: np.ndarray):
        self.body = body
        self.rest = np.asarray(rest_points, dtype=np.float64)
        if self.rest.shape[0]:
            face, bary, _ = SurfaceProjector.build(body.template).project(self.rest)
            self.weights = surface_weights(body, face, bary)
        else:
            self.weights = np.zeros((0, body.skeleton.bone_count))

    def targets(self, pose: Pose) -> np.ndarray:
        rot, offset = bone_transforms(self.body.skeleton, pose)
        return skin_dense(self.rest, self.weights, rot, offset)


def simulate_sequence(
    garment: Garment,
    body: BodyModel,
    motion: MotionSequence,
    params: SimParams,
    progress: Optional[Callable[[int], None]] = None,
) -> List[TriMesh]:
    """
    Simulate ``garment`` (dressed on the T-pose body) through ``motion``.

    The cloth first settles while the body blends from the T-pose into
    frame 0, then advances ``1 / (fps * dt)`` steps per frame with capsules
    and pins moving linearly between frames. Returns one mesh per frame.
    """
    springs = build_springs(garment.mesh, params)
    state = ClothState.at_rest(garment.mesh.vertices, garment.pinned)
    pins = PinDriver(body, garment.mesh.vertices[garment.pinned])
    rest_pose = Pose.identity(body.skeleton.bone_count)

    tpose_caps = pose_capsules(body, rest_pose)
    poses = motion.poses()
    caps = [pose_capsules(body, p) for p in poses]
    pin_frames = [pins.targets(p) for p in poses]

    settle = params.solver.settle_steps
    pin_rest = pins.targets(rest_pose)
    for s in range(settle):
        f0 = s / settle
        f1 = (s + 1) / settle
        start = lerp_capsules(tpose_caps, caps[0], f0)
        end = lerp_capsules(tpose_caps, caps[0], f1)
        target = pin_rest + f1 * (pin_frames[0] - pin_rest)
        state = step(state, springs, params, start, target, end)

    frames = [garment.mesh.with_vertices(state.positions)]
    n_steps = steps_per_frame(motion.frame_rate, params)
    for k in range(1, motion.frame_count):
        for s in range(n_steps):
            f0 = s / n_steps
            f1 = (s + 1) / n_steps
            start = lerp_capsules(caps[k - 1], caps[k], f0)
            end = lerp_capsules(caps[k - 1], caps[k], f1)
            target = pin_frames[k - 1] + f1 * (pin_frames[k] - pin_frames[k - 1])
            state = step(state, springs, params, start, target, end)
        frames.append(garment.mesh.with_vertices(state.positions))
        if progress is not None:
            progress(k)
    logger.debug("%s/%s: %d frames, %d steps per frame", motion.name or "motion", garment.name,
                 len(frames), n_steps)
    return frames
