"""Monitor state."""

from dataclasses import dataclass, field
from typing import Optional, Set

from ..config import DEFAULT_SMOOTHING

X_AXES = ("epoch", "relative", "wall")


@dataclass
class ChartConfig:
    x_axis: str = "epoch"  # one of X_AXES
    smoothing: float = DEFAULT_SMOOTHING
    log_scale_x: bool = False
    log_scale_y: bool = False


@dataclass
class MonitorState:
    current_experiment: Optional[str] = None
    selected_runs: Set[str] = field(default_factory=set)
    metric_filter: str = ""
    report_method: Optional[str] = None
    chart_config: ChartConfig = field(default_factory=ChartConfig)

    def toggle_run(self, run: str) -> None:
        if run in self.selected_runs:
            self.selected_runs.remove(run)
        else:
            self.selected_runs.add(run)

    def set_experiment(self, experiment: str) -> None:
        """Switch experiment; run selection and filters start over."""
        if self.current_experiment != experiment:
            self.current_experiment = experiment
            self.selected_runs.clear()
            self.metric_filter = ""
            self.report_method = None
