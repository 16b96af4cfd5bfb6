"""Rich tables for evaluation reports and training logs."""

import math
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.table import Table

from ..tracking import read_log
from ..utils.colors import TEMPLATE_COLORS
from ..utils.series import format_duration
from .runner import EvalReport


def _fmt(value: float) -> str:
    return "-" if math.isnan(value) else f"{value:.3f}"


def _template(name: str) -> str:
    color = TEMPLATE_COLORS.get(name)
    return f"[{color}]{name}[/]" if color else name


def _cell(column: str, value: float) -> str:
    return format_duration(value) if column == "wall_time" else f"{value:.4f}"


def report_table(report: EvalReport) -> Table:
    """Frame-weighted means per template and method."""
    table = Table(title=f"Evaluation ({report.split} split)")
    table.add_column("Template")
    table.add_column("Method", style="green")
    table.add_column("UV MSE (mm²)", justify="right")
    table.add_column("Vertex MSE (mm²)", justify="right")
    table.add_column("Hem var (mm²)", justify="right")
    table.add_column("Frames", justify="right")
    for template in report.templates():
        for method in report.methods():
            rows = report.select(template, method)
            if not rows:
                continue
            table.add_row(
                _template(template), method,
                _fmt(report.mean("mse_uv_mm2", template, method)),
                _fmt(report.mean("mse_vert_mm2", template, method)),
                _fmt(report.mean("hem_var_mm2", template, method)),
                str(sum(r.frames for r in rows)),
            )
    return table


def action_table(report: EvalReport, method: str) -> Table:
    """Per-action vertex MSE for one method, one column per template."""
    table = Table(title=f"Vertex MSE per action ({method})")
    table.add_column("Action", style="cyan")
    templates = report.templates()
    for t in templates:
        table.add_column(_template(t), justify="right")
    for action in report.actions():
        cells = []
        for t in templates:
            match = [r for r in report.rows if r.action == action and r.template == t and r.method == method]
            cells.append(_fmt(match[0].mse_vert_mm2) if match else "-")
        table.add_row(action, *cells)
    return table


def training_table(log_path: Path) -> Optional[Table]:
    rows = read_log(log_path)
    if not rows:
        return None
    table = Table(title=f"Training log {log_path}")
    table.add_column("")
    columns = [c for c in rows[0] if c != "epoch"]
    table.add_column("Epoch", justify="right")
    for c in columns:
        table.add_column(c, justify="right")
    for label, row in (("first", rows[0]), ("last", rows[-1])):
        table.add_row(label, str(int(row["epoch"])), *[_cell(c, row[c]) for c in columns])
    return table


def print_report(report: EvalReport, console: Optional[Console] = None,
                 log_path: Optional[Path] = None) -> None:
    console = console or Console()
    console.print(report_table(report))
    for method in report.methods():
        console.print(action_table(report, method))
    if report.timings_ms:
        timing = ", ".join(f"{k} {v:.2f} ms/frame" for k, v in sorted(report.timings_ms.items()))
        console.print(f"[dim]Timing: {timing}[/dim]")
    if report.checkpoint_bytes:
        console.print(f"[dim]Checkpoint size: {report.checkpoint_bytes / 1e6:.2f} MB[/dim]")
    if log_path is not None and log_path.exists():
        table = training_table(log_path)
        if table is not None:
            console.print(table)
