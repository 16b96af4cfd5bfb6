"""Dataset manifest, configuration and the per-action train/test split."""

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..config import FORMAT_VERSION, TEMPLATES, WINDOW_START, from_section, to_plain
from ..errors import DatasetError, FormatVersionError
from ..sim.params import FABRIC_PRESETS

PathLike = Union[str, Path]

MANIFEST_NAME = "manifest.json"
STATS_NAME = "stats.json"
TRAIN = "train"
TEST = "test"

INPUT_LAYOUT = (
    "velocity[k-2]", "velocity[k-1]", "velocity[k]",
    "acceleration[k-2]", "acceleration[k-1]", "acceleration[k]",
)


@dataclass(frozen=True)
class DatasetConfig:
    """``dataset`` section. ``action_count`` > 0 takes actions from the catalog instead of ``actions``."""

    actions: Tuple[str, ...] = ("swing_arms", "walking", "jump", "punch", "ballet", "side_step",
                                "jogging", "stretch_arms")
    action_count: int = 0
    frames: int = 30
    fps: float = 30.0
    resolution: int = 64
    train_fraction: float = 0.75
    workers: int = 2
    fabrics: Dict[str, str] = field(
        default_factory=lambda: {"tops": "cotton", "bottoms": "denim", "dress": "light-cotton"}
    )

    def __post_init__(self):
        if self.frames <= WINDOW_START:
            raise ValueError(f"frames must exceed {WINDOW_START}")
        if self.resolution < 16 or self.resolution % 16:
            raise ValueError("resolution must be a positive multiple of 16")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        unknown = sorted(set(self.fabrics.values()) - set(FABRIC_PRESETS))
        if unknown:
            raise ValueError(f"unknown fabric presets: {', '.join(unknown)}")

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "DatasetConfig":
        return from_section(cls, data, "dataset")


@dataclass(frozen=True)
class ActionEntry:
    name: str
    frames: int
    split: str = TRAIN

    @property
    def sample_count(self) -> int:
        return max(0, self.frames - WINDOW_START)


@dataclass(frozen=True)
class Manifest:
    """
    Description of a generated dataset.

    ``root`` is where the manifest was read from or written to; it is not
    serialized.
    """

    actions: Tuple[ActionEntry, ...]
    resolution: int
    fps: float
    shape: Dict[str, float]
    sim_hash: str
    stats_hash: str = ""
    stats_file: str = STATS_NAME
    format_version: int = FORMAT_VERSION
    window_start: int = WINDOW_START
    units: str = "m/frame"
    templates: Tuple[str, ...] = TEMPLATES
    input_layout: Tuple[str, ...] = INPUT_LAYOUT
    config: Dict[str, Any] = field(default_factory=dict)
    root: Optional[Path] = None

    def action(self, name: str) -> ActionEntry:
        for entry in self.actions:
            if entry.name == name:
                return entry
        raise DatasetError(f"action '{name}' is not in the dataset")

    def names(self, split: Optional[str] = None) -> List[str]:
        return [a.name for a in self.actions if split is None or a.split == split]

    def entries(self, split: Optional[str] = None) -> List[ActionEntry]:
        return [a for a in self.actions if split is None or a.split == split]

    def sample_count(self, split: Optional[str] = None) -> int:
        return sum(a.sample_count for a in self.entries(split))

    def action_dir(self, name: str) -> Path:
        if self.root is None:
            raise DatasetError("manifest has no dataset root")
        return self.root / "actions" / name

    def stats_path(self) -> Path:
        if self.root is None:
            raise DatasetError("manifest has no dataset root")
        return self.root / self.stats_file

    def to_dict(self) -> Dict[str, Any]:
        data = to_plain(replace(self, root=None))
        data.pop("root")
        return data


def action_key(name: str) -> str:
    return hashlib.sha256(name.encode("utf-8")).hexdigest()


def split_actions(manifest: Manifest, train_fraction: float) -> Manifest:
    """
    Assign whole actions to train or test.

    Actions are ordered by the SHA-256 of their name and the first
    ``round(train_fraction * n)`` go to train, keeping both sides non-empty.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(manifest.actions)
    if n < 2:
        raise DatasetError(f"need at least 2 actions to split, got {n}")
    n_train = min(max(int(round(train_fraction * n)), 1), n - 1)
    order = sorted(manifest.actions, key=lambda a: action_key(a.name))
    train = {a.name for a in order[:n_train]}
    actions = tuple(replace(a, split=TRAIN if a.name in train else TEST) for a in manifest.actions)
    return replace(manifest, actions=actions)


def save_manifest(manifest: Manifest, root: PathLike) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    path = root / MANIFEST_NAME
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_manifest(path: PathLike) -> Manifest:
    """Read ``manifest.json`` from a dataset directory or a direct path."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise DatasetError(f"{path}: no dataset manifest")
    data = json.loads(path.read_text(encoding="utf-8"))
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"{path}: dataset format {version}, expected {FORMAT_VERSION}")
    try:
        actions = tuple(ActionEntry(**a) for a in data.pop("actions"))
        return Manifest(
            actions=actions,
            templates=tuple(data.pop("templates")),
            input_layout=tuple(data.pop("input_layout")),
            root=path.parent,
            **data,
        )
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"{path}: malformed manifest ({exc})") from exc
