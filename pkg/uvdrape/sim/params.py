"""Simulation parameter groups: fabric, world and solver."""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

from ..config import config_hash, from_section, to_plain


@dataclass(frozen=True)
class FabricParams:
    """Garment parameters. Spring stiffnesses are per spring in N/m."""

    structural: float = 40.0
    shear: float = 8.0
    bending: float = 1.5
    compression: float = 20.0
    damping: float = 0.02
    density: float = 0.25

    def __post_init__(self):
        for name in ("structural", "shear", "bending", "compression", "damping"):
            if getattr(self, name) < 0:
                raise ValueError(f"fabric {name} must be >= 0")
        if self.density <= 0:
            raise ValueError("fabric density must be > 0")


@dataclass(frozen=True)
class WorldParams:
    gravity: Tuple[float, float, float] = (0.0, -9.81, 0.0)
    air_drag: float = 0.3

    def __post_init__(self):
        if len(self.gravity) != 3:
            raise ValueError("gravity needs three components")
        if self.air_drag < 0:
            raise ValueError("air drag must be >= 0")


@dataclass(frozen=True)
class SolverParams:
    dt: float = 1.0 / 240.0
    substeps: int = 8
    thickness: float = 0.005
    friction: float = 0.3
    settle_steps: int = 30
    max_speed: float = 100.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if not 0.0 <= self.friction <= 1.0:
            raise ValueError("friction must lie in [0, 1]")
        if self.thickness < 0:
            raise ValueError("collision thickness must be >= 0")


@dataclass(frozen=True)
class SimParams:
    fabric: FabricParams = field(default_factory=FabricParams)
    world: WorldParams = field(default_factory=WorldParams)
    solver: SolverParams = field(default_factory=SolverParams)

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "SimParams":
        return from_section(cls, data, "sim")

    def to_dict(self) -> Dict:
        return to_plain(self)

    def config_hash(self) -> str:
        return config_hash(self)

    def with_fabric(self, fabric: FabricParams) -> "SimParams":
        return replace(self, fabric=fabric)


FABRIC_PRESETS: Dict[str, FabricParams] = {
    "cotton": FabricParams(),
    "denim": FabricParams(structural=60.0, shear=12.0, bending=3.0, compression=30.0,
                          damping=0.03, density=0.4),
    "light-cotton": FabricParams(structural=30.0, shear=6.0, bending=1.0, compression=15.0,
                                 damping=0.015, density=0.2),
}

TEMPLATE_FABRICS = {"tops": "cotton", "bottoms": "denim", "dress": "light-cotton"}


def fabric_preset(name: str) -> FabricParams:
    try:
        return FABRIC_PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown fabric preset '{name}' (known: {', '.join(sorted(FABRIC_PRESETS))})")
