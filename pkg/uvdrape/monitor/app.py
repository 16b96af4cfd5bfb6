"""The uvdrape terminal monitor."""

from pathlib import Path

from textual import on
from textual.app import App
from textual.binding import Binding
from textual.widgets import Button

from ..config import AUTO_REFRESH_INTERVAL_SECONDS, RUNS_DIR
from .loader import RunsLoader
from .screens import EvaluationScreen, MetricsScreen
from .state import MonitorState

HELP_TEXT = """
[b]uvdrape monitor[/b]

[cyan]q[/cyan] quit
[cyan]r[/cyan] reload run directories
[cyan]m[/cyan] training curves
[cyan]e[/cyan] evaluation reports
[cyan]?[/cyan] this help
"""


class UvDrapeMonitor(App):
    """Browse training logs and evaluation reports under a runs directory."""

    BINDINGS = [
        Binding("q", "quit", "Quit"),
        Binding("r", "refresh", "Refresh"),
        Binding("m", "show_metrics", "Training"),
        Binding("e", "show_evaluation", "Evaluation"),
        Binding("?", "help", "Help"),
    ]

    def __init__(self, runs_dir: Path = RUNS_DIR, refresh_seconds: float = AUTO_REFRESH_INTERVAL_SECONDS):
        super().__init__()
        self.loader = RunsLoader(runs_dir)
        self.state = MonitorState()
        self.refresh_seconds = refresh_seconds
        self.title = "uvdrape monitor"
        self.sub_title = str(runs_dir)

    def on_mount(self) -> None:
        self.install_screen(MetricsScreen(self.loader, self.state), name="metrics")
        self.install_screen(EvaluationScreen(self.loader, self.state), name="evaluation")
        self.push_screen("metrics")
        if self.refresh_seconds > 0:
            self.set_interval(self.refresh_seconds, self._auto_refresh)

    def _auto_refresh(self) -> None:
        self.loader.invalidate_cache()
        reload = getattr(self.screen, "reload", None)
        if reload is not None:
            reload()

    @on(Button.Pressed, "#nav-metrics")
    def action_show_metrics(self) -> None:
        self.switch_screen("metrics")

    @on(Button.Pressed, "#nav-evaluation")
    def action_show_evaluation(self) -> None:
        self.switch_screen("evaluation")

    def action_refresh(self) -> None:
        self._auto_refresh()
        self.notify("Reloaded run directories", severity="information")

    def action_help(self) -> None:
        self.notify(HELP_TEXT, severity="information", timeout=10)

    def on_unmount(self) -> None:
        self.loader.shutdown()


def run_monitor(runs_dir: Path, refresh_seconds: float = AUTO_REFRESH_INTERVAL_SECONDS) -> None:
    UvDrapeMonitor(Path(runs_dir), refresh_seconds).run()
