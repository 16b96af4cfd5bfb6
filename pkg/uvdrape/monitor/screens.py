"""Monitor screens: training curves and evaluation reports."""

from typing import Dict

from textual import on, work
from textual.app import ComposeResult
from textual.containers import Vertical, VerticalScroll
from textual.screen import Screen
from textual.widgets import DataTable, Label, Select, Static

from ..utils.series import filter_metrics, format_number, group_metrics
from .loader import RunsLoader
from .state import MonitorState
from .widgets import (
    ChartConfigChanged,
    ExperimentChanged,
    Header,
    MetricFilterChanged,
    MetricPlot,
    RunSelectionChanged,
    Sidebar,
)


class MetricsScreen(Screen):
    """Training-log curves of the selected runs, one plot per metric."""

    CSS = """
    #main-content {
        width: 1fr;
        height: 100%;
        padding: 1;
    }

    #no-data {
        width: 100%;
        text-align: center;
    }
    """

    def __init__(self, loader: RunsLoader, state: MonitorState, **kwargs):
        super().__init__(**kwargs)
        self._loader = loader
        self._state = state
        self._plots: Dict[str, MetricPlot] = {}

    def compose(self) -> ComposeResult:
        yield Header("metrics")
        yield Sidebar(self._state.chart_config, id="sidebar")
        with Vertical(id="main-content"):
            yield Label("Select an experiment and runs to view training curves", id="no-data")

    def on_mount(self) -> None:
        self.reload()

    def reload(self) -> None:
        self._load_experiments()

    @work(exclusive=True, group="experiments")
    async def _load_experiments(self) -> None:
        experiments = await self._loader.get_experiments()
        if not experiments:
            self._show_message(f"No runs under {self._loader.runs_dir}")
            return
        current = self._state.current_experiment
        if current not in experiments:
            current = experiments[0]
        self.query_one("#sidebar", Sidebar).update_experiments(experiments, current)
        self._state.set_experiment(current)
        self._load_runs()

    @on(ExperimentChanged)
    def _experiment_changed(self, event: ExperimentChanged) -> None:
        if event.experiment != self._state.current_experiment:
            self._state.set_experiment(event.experiment)
            self._load_runs()

    @work(exclusive=True, group="runs")
    async def _load_runs(self) -> None:
        experiment = self._state.current_experiment
        if experiment is None:
            return
        runs = await self._loader.get_runs(experiment)
        if not self._state.selected_runs:
            self._state.selected_runs = set(runs)
        else:
            self._state.selected_runs &= set(runs)
        self.query_one("#sidebar", Sidebar).run_selector.update_runs(runs, self._state.selected_runs)
        self._update_metrics()

    @on(RunSelectionChanged)
    def _runs_changed(self, event: RunSelectionChanged) -> None:
        self._state.selected_runs = event.selected_runs
        self._update_metrics()

    @on(MetricFilterChanged)
    def _filter_changed(self, event: MetricFilterChanged) -> None:
        self._state.metric_filter = event.filter_text
        self._update_metrics()

    @on(ChartConfigChanged)
    def _chart_changed(self, event: ChartConfigChanged) -> None:
        self._state.chart_config = event.config
        for plot in self._plots.values():
            plot.update_config(event.config)

    def _show_message(self, text: str) -> None:
        self._plots.clear()
        main = self.query_one("#main-content", Vertical)
        main.remove_children()
        main.mount(Label(text, id="no-data"))

    @work(exclusive=True, group="metrics")
    async def _update_metrics(self) -> None:
        experiment = self._state.current_experiment
        runs = sorted(self._state.selected_runs)
        if experiment is None or not runs:
            self._show_message("Select runs to view training curves")
            return
        names = set()
        for run in runs:
            names.update(await self._loader.get_metrics_for_run(experiment, run))
        names = filter_metrics(sorted(names), self._state.metric_filter)
        if not names:
            self._show_message("No metrics match the filter")
            return

        self._plots.clear()
        main = self.query_one("#main-content", Vertical)
        await main.remove_children()
        scroll = VerticalScroll()
        await main.mount(scroll)
        for group, metrics in sorted(group_metrics(names).items()):
            await scroll.mount(Label(f"[b][u]{group.upper()}[/u][/b]"))
            for metric in metrics:
                plot = MetricPlot(metric)
                self._plots[metric] = plot
                await scroll.mount(plot)

        colors = self.query_one("#sidebar", Sidebar).run_selector.colors
        for metric, plot in self._plots.items():
            data = {}
            for run in runs:
                points = await self._loader.get_metric_values(experiment, run, metric)
                if points:
                    data[run] = points
            plot.set_data(data, {run: colors.get_color(run) for run in data}, self._state.chart_config)


class EvaluationScreen(Screen):
    """Evaluation report of one run: means per template and method, then per action."""

    CSS = """
    #report-picker {
        width: 60;
        margin: 1;
    }

    #report-body {
        padding: 1;
    }

    #report-body DataTable {
        height: auto;
        margin-bottom: 1;
    }
    """

    def __init__(self, loader: RunsLoader, state: MonitorState, **kwargs):
        super().__init__(**kwargs)
        self._loader = loader
        self._state = state

    def compose(self) -> ComposeResult:
        yield Header("evaluation")
        yield Select([], prompt="Run with a report...", id="report-picker")
        with VerticalScroll(id="report-body"):
            yield Label("No report selected", id="report-title")
            yield DataTable(id="summary-table", zebra_stripes=True)
            yield DataTable(id="action-table", zebra_stripes=True)
            yield Static("", id="report-meta")

    def on_mount(self) -> None:
        summary = self.query_one("#summary-table", DataTable)
        summary.add_columns("Template", "Method", "UV MSE (mm²)", "Vertex MSE (mm²)", "Hem var (mm²)", "Frames")
        self.reload()

    def reload(self) -> None:
        self._load_choices()

    @work(exclusive=True, group="choices")
    async def _load_choices(self) -> None:
        choices = []
        for experiment in await self._loader.get_experiments():
            for run in await self._loader.get_runs(experiment):
                if await self._loader.get_report(experiment, run) is not None:
                    choices.append(f"{experiment}/{run}")
        picker = self.query_one("#report-picker", Select)
        picker.set_options([(c, c) for c in choices])
        if choices:
            picker.value = choices[0]

    @on(Select.Changed, "#report-picker")
    def _picked(self, event: Select.Changed) -> None:
        if event.value != Select.BLANK:
            experiment, run = str(event.value).split("/", 1)
            self._show_report(experiment, run)

    @work(exclusive=True, group="report")
    async def _show_report(self, experiment: str, run: str) -> None:
        report = await self._loader.get_report(experiment, run)
        if report is None:
            return
        self.query_one("#report-title", Label).update(f"[b]{experiment}/{run}[/b] ({report.split} split)")

        summary = self.query_one("#summary-table", DataTable)
        summary.clear()
        for template in report.templates():
            for method in report.methods():
                rows = report.select(template, method)
                if rows:
                    summary.add_row(
                        template, method,
                        format_number(report.mean("mse_uv_mm2", template, method)),
                        format_number(report.mean("mse_vert_mm2", template, method)),
                        format_number(report.mean("hem_var_mm2", template, method)),
                        str(sum(r.frames for r in rows)),
                    )

        actions = self.query_one("#action-table", DataTable)
        actions.clear(columns=True)
        keys = [(t, m) for t in report.templates() for m in report.methods() if report.select(t, m)]
        actions.add_columns("Action", *[f"{t}/{m}" for t, m in keys])
        lookup = {(r.action, r.template, r.method): r.mse_vert_mm2 for r in report.rows}
        for action in report.actions():
            cells = [lookup.get((action, t, m)) for t, m in keys]
            actions.add_row(action, *["-" if c is None else format_number(c) for c in cells])

        meta = [f"{k}: {v:.2f} ms/frame" for k, v in sorted(report.timings_ms.items())]
        if report.checkpoint_bytes:
            meta.append(f"checkpoint: {report.checkpoint_bytes / 1e6:.2f} MB")
        self.query_one("#report-meta", Static).update("\n".join(meta))
