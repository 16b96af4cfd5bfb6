"""Async access to run directories, with a TTL cache.

A runs directory holds experiments; an experiment holds runs. A run is any
directory below the experiment holding a ``train_log.csv`` or a
``report.csv``; its name is the path relative to the experiment (``.`` when
the experiment directory is itself the run).
"""

import asyncio
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ..config import CACHE_TTL_SECONDS
from ..errors import UvDrapeError
from ..evaluation.runner import REPORT_NAME, EvalReport, load_report
from ..tracking import LOG_NAME, read_log
from ..utils.series import metric_columns

logger = logging.getLogger(__name__)


class TTLCache:
    """Key/value store whose entries expire ``ttl_seconds`` after being set."""

    def __init__(self, ttl_seconds: float = CACHE_TTL_SECONDS):
        self._entries: Dict[str, Tuple[Any, float]] = {}
        self._ttl = ttl_seconds

    def get(self, key: str) -> Optional[Any]:
        entry = self._entries.get(key)
        if entry is None:
            return None
        value, stamp = entry
        if time.monotonic() - stamp >= self._ttl:
            del self._entries[key]
            return None
        return value

    def set(self, key: str, value: Any) -> None:
        self._entries[key] = (value, time.monotonic())

    def invalidate_prefix(self, prefix: str) -> None:
        for key in [k for k in self._entries if k.startswith(prefix)]:
            del self._entries[key]

    def clear(self) -> None:
        self._entries.clear()

    def __len__(self) -> int:
        return len(self._entries)


def list_experiments(runs_dir: Path) -> List[str]:
    if not runs_dir.is_dir():
        return []
    return sorted(p.name for p in runs_dir.iterdir() if p.is_dir() and list_runs(runs_dir, p.name))


def list_runs(runs_dir: Path, experiment: str) -> List[str]:
    root = runs_dir / experiment
    if not root.is_dir():
        return []
    found = {p.parent for p in root.rglob(LOG_NAME)} | {p.parent for p in root.rglob(REPORT_NAME)}
    return sorted(str(p.relative_to(root)) for p in found)


def read_run_series(log_path: Path) -> Dict[str, List[Dict[str, float]]]:
    """
    Per-metric points of one training log.

    Each point carries ``step`` (the epoch), ``value`` and ``timestamp``.
    The log stores seconds since training start, so absolute timestamps are
    anchored on the file's modification time, taken as the last row's.
    """
    rows = read_log(log_path)
    if not rows:
        return {}
    end = log_path.stat().st_mtime - rows[-1].get("wall_time", 0.0)
    series: Dict[str, List[Dict[str, float]]] = {}
    for name in metric_columns(list(rows[0])):
        series[name] = [
            {"step": row["epoch"], "value": row[name], "timestamp": end + row.get("wall_time", 0.0)}
            for row in rows
        ]
    return series


class RunsLoader:
    """Async wrapper around the run-directory readers, caching every answer."""

    def __init__(self, runs_dir: Path, ttl_seconds: float = CACHE_TTL_SECONDS, workers: int = 4):
        self.runs_dir = Path(runs_dir)
        self._cache = TTLCache(ttl_seconds)
        self._executor = ThreadPoolExecutor(max_workers=workers)

    async def _cached(self, key: str, fn, *args):
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        loop = asyncio.get_running_loop()
        value = await loop.run_in_executor(self._executor, fn, *args)
        self._cache.set(key, value)
        return value

    async def get_experiments(self) -> List[str]:
        return await self._cached("experiments", list_experiments, self.runs_dir)

    async def get_runs(self, experiment: str) -> List[str]:
        return await self._cached(f"runs:{experiment}", list_runs, self.runs_dir, experiment)

    async def _series(self, experiment: str, run: str) -> Dict[str, List[Dict[str, float]]]:
        path = self.runs_dir / experiment / run / LOG_NAME
        return await self._cached(f"series:{experiment}/{run}", self._read_series, path)

    @staticmethod
    def _read_series(path: Path) -> Dict[str, List[Dict[str, float]]]:
        if not path.exists():
            return {}
        try:
            return read_run_series(path)
        except (OSError, ValueError, KeyError) as exc:
            logger.warning("unreadable training log %s: %s", path, exc)
            return {}

    async def get_metrics_for_run(self, experiment: str, run: str) -> List[str]:
        return sorted(await self._series(experiment, run))

    async def get_metric_values(self, experiment: str, run: str, metric: str) -> List[Dict[str, float]]:
        return (await self._series(experiment, run)).get(metric, [])

    async def get_report(self, experiment: str, run: str) -> Optional[EvalReport]:
        path = self.runs_dir / experiment / run / REPORT_NAME
        result = await self._cached(f"report:{experiment}/{run}", self._read_report, path)
        return result or None

    @staticmethod
    def _read_report(path: Path):
        if not path.exists():
            return False
        try:
            return load_report(path)
        except (OSError, UvDrapeError, ValueError, KeyError) as exc:
            logger.warning("unreadable report %s: %s", path, exc)
            return False

    def invalidate_cache(self) -> None:
        self._cache.clear()

    def shutdown(self) -> None:
        self._executor.shutdown(wait=False)
