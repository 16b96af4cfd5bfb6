"""Metric-series helpers for the monitor and reports."""

from typing import Dict, List, Sequence, Tuple

import numpy as np

# log columns that are axes, not metrics
AXIS_COLUMNS = ("epoch", "wall_time")


def metric_columns(columns: Sequence[str]) -> List[str]:
    return [c for c in columns if c not in AXIS_COLUMNS]


def group_metrics(metric_names: Sequence[str]) -> Dict[str, List[str]]:
    """
    Group metrics by the prefix before the first ``_`` (``loss_D`` and
    ``loss_G`` go to ``loss``, ``L1_tops`` to ``L1``); names without one go
    to ``other``.
    """
    groups: Dict[str, List[str]] = {}
    for metric in metric_names:
        group = metric.split("_", 1)[0] if "_" in metric else "other"
        groups.setdefault(group, []).append(metric)
    return {g: sorted(names) for g, names in groups.items()}


def filter_metrics(metric_names: Sequence[str], filter_text: str) -> List[str]:
    """Case-insensitive substring filter."""
    if not filter_text:
        return list(metric_names)
    needle = filter_text.lower()
    return [m for m in metric_names if needle in m.lower()]


def smooth(values: Sequence[float], smoothing: float, max_smoothing: float = 20.0) -> List[float]:
    """Exponential moving average; ``smoothing`` in [0, max_smoothing], 0 leaves the data as is."""
    if not len(values) or smoothing <= 0:
        return list(values)
    alpha = min(1.0, smoothing / max_smoothing)
    out = []
    last = float(values[0])
    for v in values:
        last = alpha * last + (1.0 - alpha) * float(v)
        out.append(last)
    return out


def downsample(x: Sequence[float], y: Sequence[float], max_points: int = 1000) -> Tuple[List[float], List[float]]:
    """Every n-th point so at most about ``max_points`` remain."""
    if len(x) <= max_points:
        return list(x), list(y)
    stride = int(np.ceil(len(x) / max_points))
    return list(x[::stride]), list(y[::stride])


def format_number(value: float, precision: int = 4) -> str:
    if value != value:
        return "-"
    if value != 0 and (abs(value) < 0.01 or abs(value) > 10000):
        return f"{value:.{precision}e}"
    return f"{value:.{precision}f}".rstrip("0").rstrip(".")


def format_duration(seconds: float) -> str:
    if seconds < 60:
        return f"{seconds:.1f}s"
    if seconds < 3600:
        return f"{seconds / 60:.1f}m"
    return f"{seconds / 3600:.1f}h"
