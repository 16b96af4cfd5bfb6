"""Project configuration: one YAML file, one dataclass per section."""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional

from .body.skeleton import ShapeParams
from .config import RUNS_DIR, AUTO_REFRESH_INTERVAL_SECONDS, from_section, read_config_file, to_plain
from .dataset.manifest import DatasetConfig
from .errors import ConfigError
from .evaluation.runner import EvalConfig
from .net.train import TrainConfig
from .sim.params import SimParams
from .tracking import TrackingConfig

SECTIONS = ("body", "sim", "dataset", "train", "eval", "tracking", "monitor")


@dataclass(frozen=True)
class MonitorConfig:
    """``monitor`` section."""

    runs_dir: str = str(RUNS_DIR)
    refresh_seconds: float = AUTO_REFRESH_INTERVAL_SECONDS

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "MonitorConfig":
        return from_section(cls, data, "monitor")


@dataclass(frozen=True)
class ProjectConfig:
    shape: ShapeParams = field(default_factory=ShapeParams)
    sim: SimParams = field(default_factory=SimParams)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProjectConfig":
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"unknown config section '{unknown[0]}'")
        body = data.get("body") or {}
        if not isinstance(body, dict) or set(body) - {"shape"}:
            raise ConfigError("[body] only takes a 'shape' mapping")
        return cls(
            shape=ShapeParams.from_dict(body.get("shape")),
            sim=SimParams.from_dict(data.get("sim")),
            dataset=DatasetConfig.from_dict(data.get("dataset")),
            train=TrainConfig.from_dict(data.get("train")),
            eval=EvalConfig.from_dict(data.get("eval")),
            tracking=TrackingConfig.from_dict(data.get("tracking")),
            monitor=MonitorConfig.from_dict(data.get("monitor")),
        )

    def to_dict(self) -> Dict[str, Any]:
        data = to_plain(self)
        data["body"] = {"shape": data.pop("shape")}
        return data

    def with_overrides(self, seed: Optional[int] = None, resolution: Optional[int] = None,
                       epochs: Optional[int] = None) -> "ProjectConfig":
        """Apply command-line overrides."""
        cfg = self
        try:
            if seed is not None:
                cfg = replace(cfg, train=replace(cfg.train, seed=seed))
            if resolution is not None:
                cfg = replace(cfg, dataset=replace(cfg.dataset, resolution=resolution))
            if epochs is not None:
                cfg = replace(cfg, train=replace(cfg.train, epochs=epochs))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg


def load_settings(path: Optional[Path] = None) -> ProjectConfig:
    """Read a project config file; no path gives the built-in defaults."""
    if path is None:
        return ProjectConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: config file not found")
    return ProjectConfig.from_dict(read_config_file(path))
