"""Monitor widgets: navigation header, sidebar, run selector, chart controls and metric plots."""

from typing import Dict, List, Optional, Set

from textual import on
from textual.app import ComposeResult
from textual.containers import Horizontal, Vertical, VerticalScroll
from textual.css.query import NoMatches
from textual.message import Message
from textual.widgets import Button, Checkbox, Input, Label, Select
from textual_plotext import PlotextPlot

from ..config import MAX_SMOOTHING, PLOT_MIN_HEIGHT
from ..utils.colors import ColorManager
from ..utils.series import downsample, smooth
from .state import ChartConfig

SCREENS = (("metrics", "Training"), ("evaluation", "Evaluation"))


class ExperimentChanged(Message):
    def __init__(self, experiment: str) -> None:
        self.experiment = experiment
        super().__init__()


class MetricFilterChanged(Message):
    def __init__(self, filter_text: str) -> None:
        self.filter_text = filter_text
        super().__init__()


class RunSelectionChanged(Message):
    def __init__(self, selected_runs: Set[str]) -> None:
        self.selected_runs = selected_runs
        super().__init__()


class ChartConfigChanged(Message):
    def __init__(self, config: ChartConfig) -> None:
        self.config = config
        super().__init__()


class Header(Horizontal):
    """Navigation bar; the active screen's button is highlighted."""

    DEFAULT_CSS = """
    Header {
        width: 100%;
        height: 3;
        dock: top;
        background: $primary;
        padding: 0 1 0 36;
    }

    Header Button {
        width: auto;
        min-width: 15;
        margin: 0 1;
    }
    """

    def __init__(self, active: str = "metrics", **kwargs):
        super().__init__(**kwargs)
        self._active = active

    def compose(self) -> ComposeResult:
        for name, title in SCREENS:
            yield Button(title, id=f"nav-{name}", variant="primary" if name == self._active else "default")


class RunSelector(Vertical):
    """Checkbox list of runs, each tagged with its plot color."""

    DEFAULT_CSS = """
    RunSelector {
        width: 100%;
        height: auto;
        border: solid $primary;
        padding: 0 1;
    }

    RunSelector Input {
        margin-bottom: 1;
    }
    """

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self._runs: List[str] = []
        self._selected: Set[str] = set()
        self._filter_text = ""
        self.colors = ColorManager()

    def compose(self) -> ComposeResult:
        yield Label("Runs")
        yield Input(placeholder="Filter runs...", id="run-filter")
        yield VerticalScroll(id="run-list")

    def visible_runs(self) -> List[str]:
        needle = self._filter_text.lower()
        return [r for r in self._runs if needle in r.lower()]

    def update_runs(self, runs: List[str], selected: Set[str]) -> None:
        self._runs = list(runs)
        self._selected = set(selected)
        self._rebuild()

    def _rebuild(self) -> None:
        if not self.is_mounted:
            return
        try:
            run_list = self.query_one("#run-list", VerticalScroll)
        except NoMatches:
            return
        run_list.remove_children()
        boxes = []
        for run in self.visible_runs():
            box = Checkbox(f"[{self.colors.get_color(run)}]●[/] {run}", value=run in self._selected)
            box.run_name = run
            boxes.append(box)
        run_list.mount_all(boxes)

    @on(Input.Changed, "#run-filter")
    def _filter_changed(self, event: Input.Changed) -> None:
        event.stop()
        self._filter_text = event.value
        self._rebuild()

    @on(Checkbox.Changed)
    def _checkbox_changed(self, event: Checkbox.Changed) -> None:
        run = getattr(event.checkbox, "run_name", None)
        if run is None:
            return
        event.stop()
        if event.value:
            self._selected.add(run)
        else:
            self._selected.discard(run)
        self.post_message(RunSelectionChanged(set(self._selected)))


class ControlPanel(Vertical):
    """X-axis, smoothing and log-scale controls."""

    DEFAULT_CSS = """
    ControlPanel {
        width: 100%;
        height: auto;
        border: solid $primary;
        padding: 1;
    }

    ControlPanel Select {
        width: 100%;
        margin-bottom: 1;
    }

    ControlPanel Horizontal {
        width: 100%;
        height: auto;
    }
    """

    def __init__(self, config: Optional[ChartConfig] = None, **kwargs):
        super().__init__(**kwargs)
        self.config = config or ChartConfig()

    def compose(self) -> ComposeResult:
        yield Label("[b]Chart[/b]")
        yield Select(
            options=[("Epoch", "epoch"), ("Training time", "relative"), ("Wall clock", "wall")],
            value=self.config.x_axis,
            allow_blank=False,
            id="x-axis-select",
        )
        with Horizontal():
            yield Label(self._smoothing_text(), id="smoothing-label")
            yield Button("-", id="smooth-dec", variant="primary")
            yield Button("+", id="smooth-inc", variant="primary")
        yield Checkbox("Log scale X", value=self.config.log_scale_x, id="log-x")
        yield Checkbox("Log scale Y", value=self.config.log_scale_y, id="log-y")

    def _smoothing_text(self) -> str:
        return f"Smoothing: {self.config.smoothing:.0f}"

    def _changed(self) -> None:
        self.post_message(ChartConfigChanged(self.config))

    @on(Select.Changed, "#x-axis-select")
    def _x_axis(self, event: Select.Changed) -> None:
        event.stop()
        self.config.x_axis = str(event.value)
        self._changed()

    @on(Button.Pressed, "#smooth-inc")
    def _smooth_more(self, event: Button.Pressed) -> None:
        event.stop()
        self._set_smoothing(self.config.smoothing + 1.0)

    @on(Button.Pressed, "#smooth-dec")
    def _smooth_less(self, event: Button.Pressed) -> None:
        event.stop()
        self._set_smoothing(self.config.smoothing - 1.0)

    def _set_smoothing(self, value: float) -> None:
        self.config.smoothing = min(float(MAX_SMOOTHING), max(0.0, value))
        self.query_one("#smoothing-label", Label).update(self._smoothing_text())
        self._changed()

    @on(Checkbox.Changed, "#log-x")
    def _log_x(self, event: Checkbox.Changed) -> None:
        event.stop()
        self.config.log_scale_x = event.value
        self._changed()

    @on(Checkbox.Changed, "#log-y")
    def _log_y(self, event: Checkbox.Changed) -> None:
        event.stop()
        self.config.log_scale_y = event.value
        self._changed()


class Sidebar(Vertical):
    """Experiment picker, metric filter, run selector and chart controls."""

    DEFAULT_CSS = """
    Sidebar {
        width: 35;
        height: 1fr;
        dock: left;
        border-right: solid $primary;
    }

    Sidebar > Label {
        width: 100%;
        padding: 1;
        background: $primary;
    }

    Sidebar Select, Sidebar #metric-filter {
        margin: 1;
    }
    """

    def __init__(self, config: Optional[ChartConfig] = None, **kwargs):
        super().__init__(**kwargs)
        self._config = config

    def compose(self) -> ComposeResult:
        yield Label("[b]uvdrape monitor[/b]")
        with VerticalScroll():
            yield Select([], prompt="Experiment...", id="experiment-select")
            yield Input(placeholder="Filter metrics...", id="metric-filter")
            yield RunSelector(id="run-selector")
            yield ControlPanel(self._config, id="control-panel")

    def update_experiments(self, experiments: List[str], current: Optional[str]) -> None:
        select = self.query_one("#experiment-select", Select)
        select.set_options([(e, e) for e in experiments])
        if current is not None:
            select.value = current

    @property
    def run_selector(self) -> RunSelector:
        return self.query_one("#run-selector", RunSelector)

    @on(Select.Changed, "#experiment-select")
    def _experiment(self, event: Select.Changed) -> None:
        event.stop()
        if event.value != Select.BLANK:
            self.post_message(ExperimentChanged(str(event.value)))

    @on(Input.Changed, "#metric-filter")
    def _metric_filter(self, event: Input.Changed) -> None:
        event.stop()
        self.post_message(MetricFilterChanged(event.value))


def series_xy(points: List[Dict[str, float]], x_axis: str):
    """x and y lists of one run's points for the given x-axis mode."""
    y = [float(p["value"]) for p in points]
    if x_axis == "epoch":
        x = [float(p["step"]) for p in points]
    elif x_axis == "relative":
        first = float(points[0]["timestamp"]) if points else 0.0
        x = [float(p["timestamp"]) - first for p in points]
    else:
        x = [float(p["timestamp"]) for p in points]
    return x, y


class MetricPlot(Vertical):
    """One metric, one line per selected run."""

    DEFAULT_CSS = f"""
    MetricPlot {{
        width: 1fr;
        height: auto;
        min-height: {PLOT_MIN_HEIGHT + 5};
        border: solid $accent;
        padding: 1;
        margin: 1;
    }}

    MetricPlot PlotextPlot {{
        width: 100%;
        height: {PLOT_MIN_HEIGHT + 2};
    }}
    """

    def __init__(self, metric_name: str, **kwargs):
        super().__init__(**kwargs)
        self.metric_name = metric_name
        self._data: Dict[str, List[Dict[str, float]]] = {}
        self._colors: Dict[str, str] = {}
        self._config = ChartConfig()

    def compose(self) -> ComposeResult:
        yield Label(f"[b]{self.metric_name}[/b]")
        yield PlotextPlot()

    def set_data(self, run_data: Dict[str, List[Dict[str, float]]], colors: Dict[str, str],
                 config: ChartConfig) -> None:
        self._data = run_data
        self._colors = colors
        self._config = config
        self.call_after_refresh(self._redraw)

    def update_config(self, config: ChartConfig) -> None:
        self._config = config
        self._redraw()

    def _redraw(self) -> None:
        if not self.is_mounted:
            return
        try:
            widget = self.query_one(PlotextPlot)
        except NoMatches:
            return
        plt = widget.plt
        plt.clear_data()
        plt.clear_color()
        if not self._data:
            plt.title(f"{self.metric_name} (no data)")
            widget.refresh()
            return
        for run, points in self._data.items():
            if not points:
                continue
            x, y = series_xy(points, self._config.x_axis)
            y = smooth(y, self._config.smoothing, MAX_SMOOTHING)
            x, y = downsample(x, y)
            plt.plot(x, y, label=run, color=self._colors.get(run, "white"))
        plt.xlabel({"epoch": "Epoch", "relative": "Time (s)"}.get(self._config.x_axis, "Wall clock"))
        plt.xscale("log" if self._config.log_scale_x else "linear")
        plt.yscale("log" if self._config.log_scale_y else "linear")
        widget.refresh()
