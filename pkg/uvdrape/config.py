"""Configuration constants and config-file helpers for uvdrape."""

import dataclasses
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Type, TypeVar

import yaml

from .errors import ConfigError

# Data paths
RUNS_DIR = Path.cwd() / "runs"

# Cache settings (monitor)
CACHE_TTL_SECONDS = 30
AUTO_REFRESH_INTERVAL_SECONDS = 10

# Geometry
NORMAL_TOLERANCE = 1e-6
MIN_TRIANGLE_AREA = 1e-12
RAY_EPSILON = 1e-9
SURFACE_T_MIN = 1e-6
MAX_RAY_LENGTH = 0.5
BVH_MAX_LEAF_SIZE = 4
BVH_MAX_DEPTH = 64

# Maps
MAX_LAYOUT_OVERLAP = 0.001
FALLBACK_PIXEL_RADIUS = 3
MIN_BOUND_FRACTION = 0.95
# cloth extent of a pixel cell may exceed its body extent by this factor
MAX_CELL_STRETCH = 4.0
BINDING_CANDIDATES = 8

# Dataset window: acceleration at k-2 needs positions back to k-4
WINDOW_START = 4
INPUT_CHANNELS = 18
TEMPLATES = ("tops", "bottoms", "dress")
FORMAT_VERSION = 1

# Chart settings (monitor)
DEFAULT_SMOOTHING = 0.0
MAX_SMOOTHING = 20

# Plot settings (monitor)
PLOT_MIN_HEIGHT = 10

T = TypeVar("T")


def read_config_file(path: Path) -> Dict[str, Any]:
    """Read a YAML config file into a dict of sections."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def from_section(cls: Type[T], data: Dict[str, Any], section: str) -> T:
    """
    Build a dataclass from a config mapping, rejecting unknown keys.

    Nested dataclass fields are built recursively from nested mappings.
    """
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"[{section}] must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs: Dict[str, Any] = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"[{section}] unknown key '{key}'")
        ftype = fields[key].type
        nested = _nested_dataclass(cls, key, ftype)
        if nested is not None and isinstance(value, dict):
            kwargs[key] = from_section(nested, value, f"{section}.{key}")
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def _nested_dataclass(cls: type, name: str, ftype: Any):
    default = next(f for f in dataclasses.fields(cls) if f.name == name)
    if default.default_factory is not dataclasses.MISSING:  # type: ignore[misc]
        sample = default.default_factory()  # type: ignore[misc]
        if dataclasses.is_dataclass(sample):
            return type(sample)
    if isinstance(ftype, type) and dataclasses.is_dataclass(ftype):
        return ftype
    return None


def to_plain(obj: Any) -> Any:
    """Convert dataclasses/tuples/paths into JSON- and YAML-friendly values."""
    if dataclasses.is_dataclass(obj):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def config_hash(obj: Any) -> str:
    """SHA-256 of the canonical JSON form of a config object."""
    canonical = json.dumps(to_plain(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
