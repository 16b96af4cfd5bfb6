"""Training-log CSV writer with optional trackio mirroring."""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import trackio

from .config import from_section

logger = logging.getLogger(__name__)

LOG_NAME = "train_log.csv"


@dataclass(frozen=True)
class TrackingConfig:
    """``tracking`` section."""

    enabled: bool = False
    project: str = "uvdrape"
    run_name: str = ""

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> "TrackingConfig":
        return from_section(cls, data, "tracking")


class RunLog:
    """
    Appends one CSV row per epoch and, when tracking is enabled, logs the
    same values to trackio with the epoch as step.
    """

    def __init__(self, path: Path, columns: Sequence[str], tracking: Optional[TrackingConfig] = None,
                 run_name: str = "", config: Optional[Dict[str, Any]] = None):
        self.path = Path(path)
        self.columns = list(columns)
        self.tracking = tracking or TrackingConfig()
        self.rows: List[Dict[str, Any]] = []
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow(self.columns)
        self._run = None
        if self.tracking.enabled:
            name = self.tracking.run_name or run_name or self.path.parent.name
            try:
                self._run = trackio.init(project=self.tracking.project, name=name, config=config or {})
            except Exception as exc:
                logger.warning("trackio unavailable, logging to CSV only: %s", exc)

    def append(self, row: Dict[str, Any]) -> None:
        missing = [c for c in self.columns if c not in row]
        if missing:
            raise KeyError(f"log row is missing {', '.join(missing)}")
        self.rows.append(dict(row))
        with open(self.path, "a", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow([row[c] for c in self.columns])
        if self._run is not None:
            step = int(row.get("epoch", len(self.rows)))
            trackio.log({k: v for k, v in row.items() if k != "epoch"}, step=step)

    def close(self) -> None:
        if self._run is not None:
            trackio.finish()
            self._run = None

    def __enter__(self) -> "RunLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_log(path: Path) -> List[Dict[str, float]]:
    """Rows of a training log with numeric values."""
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
