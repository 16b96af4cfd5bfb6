"""Dataset-level [-1, 1] normalization statistics for UV maps."""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from ..errors import DegenerateChannelError, FormatVersionError, SemanticError
from .uvmap import Semantic, UVMap

PathLike = Union[str, Path]

AXES = ("x", "y", "z")
STATS_FORMAT = "uvdrape-normstats"
STATS_VERSION = 1


def key_semantic(key: str) -> Semantic:
    """Semantic of a stats key such as ``velocity`` or ``offset/dress``."""
    return Semantic[key.split("/", 1)[0].upper()]


@dataclass(frozen=True)
class NormStats:
    """Per-key min/max vectors; every key's max exceeds its min componentwise."""

    entries: Dict[str, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        for key, (lo, hi) in self.entries.items():
            for axis in range(3):
                if not hi[axis] > lo[axis]:
                    raise DegenerateChannelError(f"{key}.{AXES[axis]}")

    def keys(self):
        return sorted(self.entries)

    def range(self, key: str) -> Tuple[np.ndarray, np.ndarray]:
        if key not in self.entries:
            raise KeyError(f"no normalization stats for '{key}'")
        return self.entries[key]

    def merged(self, other: "NormStats") -> "NormStats":
        entries = dict(self.entries)
        entries.update(other.entries)
        return NormStats(entries)

    def to_dict(self) -> Dict:
        return {
            "format": STATS_FORMAT,
            "version": STATS_VERSION,
            "channels": {
                key: {"min": [float(x) for x in lo], "max": [float(x) for x in hi]}
                for key, (lo, hi) in sorted(self.entries.items())
            },
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "NormStats":
        if data.get("format") != STATS_FORMAT or data.get("version") != STATS_VERSION:
            raise FormatVersionError(f"unsupported stats format {data.get('format')} v{data.get('version')}")
        entries = {
            key: (np.array(v["min"], dtype=np.float64), np.array(v["max"], dtype=np.float64))
            for key, v in data["channels"].items()
        }
        return cls(entries)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def save(self, path: PathLike) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: PathLike) -> "NormStats":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_norm(maps: Iterable[UVMap], key: str) -> NormStats:
    """Min/max over the valid pixels of all maps, per channel."""
    semantic = key_semantic(key)
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    count = 0
    for m in maps:
        count += 1
        if m.semantic != semantic:
            raise SemanticError(f"'{key}' stats need {semantic.name.lower()} maps, got {m.semantic.name.lower()}")
        values = m.valid_values()
        if values.shape[0] == 0:
            continue
        m_lo, m_hi = values.min(axis=0), values.max(axis=0)
        lo = m_lo if lo is None else np.minimum(lo, m_lo)
        hi = m_hi if hi is None else np.maximum(hi, m_hi)
    if count == 0:
        raise ValueError("fit_norm needs at least one map")
    if lo is None:
        raise DegenerateChannelError(f"{key}.x")
    return NormStats({key: (lo, hi)})


def _default_key(m: UVMap) -> str:
    if m.semantic in (Semantic.VELOCITY, Semantic.ACCELERATION):
        return m.semantic.name.lower()
    raise SemanticError(f"a stats key is required for {m.semantic.name.lower()} maps")


def normalize(m: UVMap, stats: NormStats, key: Optional[str] = None) -> UVMap:
    """x -> 2 (x - min) / (max - min) - 1 on valid pixels."""
    if m.semantic == Semantic.NORMALIZED:
        raise SemanticError("map is already normalized")
    key = key or _default_key(m)
    if key_semantic(key) != m.semantic:
        raise SemanticError(f"stats '{key}' do not apply to {m.semantic.name.lower()} maps")
    lo, hi = stats.range(key)
    data = 2.0 * (m.data - lo) / (hi - lo) - 1.0
    return UVMap.create(data, m.mask, Semantic.NORMALIZED)


def denormalize(m: UVMap, stats: NormStats, key: str) -> UVMap:
    """Inverse of normalize; the result carries the key's semantic."""
    if m.semantic != Semantic.NORMALIZED:
        raise SemanticError(f"expected a normalized map, got {m.semantic.name.lower()}")
    lo, hi = stats.range(key)
    data = (m.data + 1.0) * 0.5 * (hi - lo) + lo
    return UVMap.create(data, m.mask, key_semantic(key))
