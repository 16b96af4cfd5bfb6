"""Semi-implicit Euler integration of the spring network with body collisions."""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..body.skinning import Capsules
from ..errors import SimulationError
from .colliders import contact_velocity, lerp_capsules, project_out, respond
from .params import SimParams
from .springs import SpringSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClothState:
    """Particle positions (m), velocities (m/s) and the pinned mask."""

    positions: np.ndarray
    velocities: np.ndarray
    pinned: np.ndarray

    @classmethod
    def at_rest(cls, positions: np.ndarray, pinned: Optional[np.ndarray] = None) -> "ClothState":
        positions = np.array(positions, dtype=np.float64)
        n = positions.shape[0]
        pinned = np.zeros(n, dtype=bool) if pinned is None else np.asarray(pinned, dtype=bool)
        return cls(positions, np.zeros_like(positions), pinned)

    @property
    def vertex_count(self) -> int:
        return int(self.positions.shape[0])

    @property
    def free(self) -> np.ndarray:
        return ~self.pinned


def _accumulate(n: int, i: np.ndarray, j: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Add +f at i and -f at j, in a fixed order."""
    out = np.empty((n, 3))
    for axis in range(3):
        out[:, axis] = np.bincount(i, weights=f[:, axis], minlength=n) - np.bincount(
            j, weights=f[:, axis], minlength=n
        )
    return out


def spring_forces(positions: np.ndarray, velocities: np.ndarray, springs: SpringSet,
                  damping: bool = True) -> np.ndarray:
    """
    Internal forces per particle: Hooke springs with a separate stiffness
    under compression, plus damping along each spring axis.
    """
    d = positions[springs.j] - positions[springs.i]
    length = np.linalg.norm(d, axis=1)
    direction = d / np.maximum(length, 1e-12)[:, None]
    stretch = length - springs.rest
    k = np.where(stretch < 0.0, springs.compression, springs.stiffness)
    magnitude = k * stretch
    if damping:
        rel = np.einsum("ij,ij->i", velocities[springs.j] - velocities[springs.i], direction)
        magnitude = magnitude + springs.damping * rel
    return _accumulate(positions.shape[0], springs.i, springs.j, magnitude[:, None] * direction)


def external_forces(state: ClothState, springs: SpringSet, params: SimParams) -> np.ndarray:
    """Gravity and air drag (drag scales with particle mass)."""
    m = springs.masses[:, None]
    gravity = np.asarray(params.world.gravity, dtype=np.float64)
    return m * gravity[None, :] - params.world.air_drag * m * state.velocities


def net_forces(state: ClothState, springs: SpringSet, params: SimParams) -> np.ndarray:
    return spring_forces(state.positions, state.velocities, springs) + external_forces(state, springs, params)


def spring_energy(positions: np.ndarray, springs: SpringSet) -> float:
    d = np.linalg.norm(positions[springs.j] - positions[springs.i], axis=1)
    stretch = d - springs.rest
    k = np.where(stretch < 0.0, springs.compression, springs.stiffness)
    return float(0.5 * np.sum(k * stretch * stretch))


def kinetic_energy(state: ClothState, springs: SpringSet) -> float:
    return float(0.5 * np.sum(springs.masses * np.einsum("ij,ij->i", state.velocities, state.velocities)))


def mechanical_energy(state: ClothState, springs: SpringSet, params: SimParams) -> float:
    """Kinetic plus spring plus gravitational potential energy."""
    gravity = np.asarray(params.world.gravity, dtype=np.float64)
    potential = -float(np.sum(springs.masses * (state.positions @ gravity)))
    return kinetic_energy(state, springs) + spring_energy(state.positions, springs) + potential


def _guard(positions: np.ndarray, velocities: np.ndarray, max_speed: float) -> None:
    finite = np.isfinite(positions).all(axis=1) & np.isfinite(velocities).all(axis=1)
    if not finite.all():
        vertex = int(np.flatnonzero(~finite)[0])
        raise SimulationError(vertex, "non-finite state")
    speed = np.linalg.norm(velocities, axis=1)
    fast = speed >= max_speed
    if fast.any():
        vertex = int(np.flatnonzero(fast)[0])
        raise SimulationError(vertex, f"speed {speed[vertex]:.1f} m/s exceeds {max_speed:g} m/s")


def step(
    state: ClothState,
    springs: SpringSet,
    params: SimParams,
    colliders: Optional[Capsules] = None,
    pin_targets: Optional[np.ndarray] = None,
    colliders_end: Optional[Capsules] = None,
) -> ClothState:
    """
    Advance one ``params.solver.dt`` in ``substeps`` symplectic Euler substeps.

    Each substep accumulates forces, updates velocities then positions of
    free particles, and projects them out of the colliders. Colliders move
    linearly to ``colliders_end`` over the step when given. Pinned
    particles stay bit-identical unless ``pin_targets`` are given, in which
    case they travel linearly to the targets.
    """
    solver = params.solver
    h = solver.dt / solver.substeps
    free = state.free
    pinned = state.pinned
    x = state.positions.copy()
    v = state.velocities.copy()
    inv_m = 1.0 / springs.masses[:, None]

    pin_start = x[pinned].copy()
    if pin_targets is not None:
        pin_targets = np.asarray(pin_targets, dtype=np.float64)
        v[pinned] = (pin_targets - pin_start) / solver.dt

    moving = colliders is not None and colliders_end is not None
    if moving:
        vel_a = (colliders_end.a - colliders.a) / solver.dt
        vel_b = (colliders_end.b - colliders.b) / solver.dt

    for s in range(solver.substeps):
        current = ClothState(x, v, pinned)
        force = net_forces(current, springs, params)
        v[free] = v[free] + h * force[free] * inv_m[free]
        x[free] = x[free] + h * v[free]
        if pin_targets is not None:
            fraction = (s + 1) / solver.substeps
            x[pinned] = pin_start + fraction * (pin_targets - pin_start)
        if colliders is not None:
            caps = lerp_capsules(colliders, colliders_end, (s + 1) / solver.substeps) if moving else colliders
            x, contact, normals = project_out(x, caps, solver.thickness, movable=free)
            if contact.any():
                surface = contact_velocity(caps, vel_a, vel_b, x) if moving else None
                v = respond(v, contact, normals, solver.friction, surface)
        _guard(x, v, solver.max_speed)

    if pin_targets is None:
        x[pinned] = state.positions[pinned]
        v[pinned] = state.velocities[pinned]
    return replace(state, positions=x, velocities=v)


def run(state: ClothState, springs: SpringSet, params: SimParams, steps: int,
        colliders: Optional[Capsules] = None) -> ClothState:
    """Repeat ``step`` with static colliders and fixed pins."""
    for _ in range(steps):
        state = step(state, springs, params, colliders)
    return state
