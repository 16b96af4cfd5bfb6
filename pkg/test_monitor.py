"""Monitor data access, state and series helpers."""

import asyncio

import pytest

from uvdrape.evaluation.runner import GAN, LBS, EvalReport, EvalRow, save_report
from uvdrape.monitor.app import UvDrapeMonitor
from uvdrape.monitor.loader import RunsLoader, TTLCache, list_experiments, list_runs, read_run_series
from uvdrape.monitor.state import MonitorState
from uvdrape.monitor.widgets import series_xy
from uvdrape.tracking import LOG_NAME, RunLog
from uvdrape.utils.colors import RUN_COLORS, ColorManager
from uvdrape.utils.series import (
    downsample,
    filter_metrics,
    format_duration,
    format_number,
    group_metrics,
    metric_columns,
    smooth,
)

COLUMNS = ("epoch", "loss_D", "loss_G", "L1_tops", "wall_time")


def write_log(path, epochs=3):
    with RunLog(path / LOG_NAME, COLUMNS) as log:
        for e in range(1, epochs + 1):
            log.append({"epoch": e, "loss_D": 1.0 / e, "loss_G": 2.0 / e, "L1_tops": 0.1 * e, "wall_time": 10.0 * e})


@pytest.fixture
def runs_dir(tmp_path):
    root = tmp_path / "runs"
    write_log(root / "desk" / "seed0")
    write_log(root / "desk" / "seed1", epochs=2)
    save_report(EvalReport([EvalRow("jump", "tops", GAN, 1.0, 2.0, 3, 0.0),
                            EvalRow("jump", "tops", LBS, 4.0, 5.0, 3, 0.0)]), root / "desk" / "seed0" / "eval")
    (root / "empty").mkdir(parents=True)
    return root


def test_ttl_cache():
    cache = TTLCache(ttl_seconds=60)
    cache.set("series:a/b", 1)
    cache.set("runs:a", 2)
    assert cache.get("series:a/b") == 1
    cache.invalidate_prefix("series:")
    assert cache.get("series:a/b") is None
    assert len(cache) == 1
    cache.clear()
    assert len(cache) == 0


def test_ttl_expiry():
    cache = TTLCache(ttl_seconds=0)
    cache.set("k", "v")
    assert cache.get("k") is None


def test_listing(runs_dir):
    assert list_experiments(runs_dir) == ["desk"]
    assert list_runs(runs_dir, "desk") == ["seed0", "seed0/eval", "seed1"]
    assert list_runs(runs_dir, "missing") == []
    assert list_experiments(runs_dir / "nowhere") == []


def test_run_series(runs_dir):
    series = read_run_series(runs_dir / "desk" / "seed0" / LOG_NAME)
    assert sorted(series) == ["L1_tops", "loss_D", "loss_G"]
    points = series["loss_G"]
    assert [p["step"] for p in points] == [1.0, 2.0, 3.0]
    assert points[1]["value"] == pytest.approx(1.0)
    assert points[2]["timestamp"] - points[0]["timestamp"] == pytest.approx(20.0)


def test_loader(runs_dir):
    async def scenario():
        loader = RunsLoader(runs_dir)
        try:
            experiments = await loader.get_experiments()
            runs = await loader.get_runs("desk")
            metrics = await loader.get_metrics_for_run("desk", "seed1")
            values = await loader.get_metric_values("desk", "seed1", "loss_D")
            report = await loader.get_report("desk", "seed0/eval")
            no_report = await loader.get_report("desk", "seed1")
            no_metrics = await loader.get_metrics_for_run("desk", "seed0/eval")
        finally:
            loader.shutdown()
        return experiments, runs, metrics, values, report, no_report, no_metrics

    experiments, runs, metrics, values, report, no_report, no_metrics = asyncio.run(scenario())
    assert experiments == ["desk"]
    assert "seed1" in runs
    assert metrics == ["L1_tops", "loss_D", "loss_G"]
    assert [v["value"] for v in values] == [1.0, 0.5]
    assert report.methods() == [GAN, LBS]
    assert no_report is None
    assert no_metrics == []


def test_loader_caches_until_invalidated(runs_dir):
    async def count_runs(loader):
        return len(await loader.get_runs("desk"))

    loader = RunsLoader(runs_dir)
    try:
        before = asyncio.run(count_runs(loader))
        write_log(runs_dir / "desk" / "seed2")
        assert asyncio.run(count_runs(loader)) == before
        loader.invalidate_cache()
        assert asyncio.run(count_runs(loader)) == before + 1
    finally:
        loader.shutdown()


def test_state_switch_experiment():
    state = MonitorState()
    state.set_experiment("desk")
    state.toggle_run("seed0")
    state.metric_filter = "loss"
    state.set_experiment("desk")
    assert state.selected_runs == {"seed0"}
    state.set_experiment("full")
    assert state.selected_runs == set()
    assert state.metric_filter == ""
    state.toggle_run("a")
    state.toggle_run("a")
    assert state.selected_runs == set()


def test_series_xy():
    points = [{"step": 1, "value": 0.5, "timestamp": 100.0}, {"step": 2, "value": 0.25, "timestamp": 130.0}]
    assert series_xy(points, "epoch") == ([1.0, 2.0], [0.5, 0.25])
    assert series_xy(points, "relative")[0] == [0.0, 30.0]
    assert series_xy(points, "wall")[0] == [100.0, 130.0]


def test_metric_helpers():
    names = ["loss_D", "loss_G", "L1_tops", "L1_dress", "lr"]
    assert group_metrics(names) == {"loss": ["loss_D", "loss_G"], "L1": ["L1_dress", "L1_tops"], "other": ["lr"]}
    assert filter_metrics(names, "L1") == ["L1_tops", "L1_dress"]
    assert filter_metrics(names, "") == names
    assert metric_columns(list(COLUMNS)) == ["loss_D", "loss_G", "L1_tops"]


def test_smooth():
    assert smooth([1.0, 2.0, 3.0], 0.0) == [1.0, 2.0, 3.0]
    out = smooth([0.0, 10.0], 10.0)
    assert out == [0.0, 5.0]
    assert smooth([], 5.0) == []


def test_downsample():
    x = list(range(2500))
    dx, dy = downsample(x, x, max_points=1000)
    assert len(dx) <= 1000
    assert dx[0] == 0
    assert downsample([1, 2], [3, 4]) == ([1, 2], [3, 4])


def test_formatting():
    assert format_number(0.5) == "0.5"
    assert format_number(2.0) == "2"
    assert format_number(0.001) == "1.0000e-03"
    assert format_number(float("nan")) == "-"
    assert format_duration(30) == "30.0s"
    assert format_duration(90) == "1.5m"
    assert format_duration(5400) == "1.5h"


def test_colors_are_stable():
    colors = ColorManager()
    first = colors.get_color("seed0")
    assert colors.get_color("seed1") != first
    assert colors.get_color("seed0") == first
    for i in range(len(RUN_COLORS)):
        colors.get_color(f"r{i}")
    colors.reset()
    assert colors.get_color("x") == RUN_COLORS[0]


def test_monitor_app_builds(runs_dir):
    app = UvDrapeMonitor(runs_dir, refresh_seconds=0)
    try:
        assert app.title == "uvdrape monitor"
        assert app.sub_title == str(runs_dir)
        assert {b.key for b in app.BINDINGS} >= {"q", "r", "m", "e"}
    finally:
        app.loader.shutdown()
