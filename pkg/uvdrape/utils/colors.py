"""Stable colors for runs and templates."""

from typing import Dict

RUN_COLORS = (
    "blue",
    "red",
    "green",
    "yellow",
    "magenta",
    "cyan",
    "bright_blue",
    "bright_red",
    "bright_green",
    "bright_yellow",
    "bright_magenta",
    "bright_cyan",
)

TEMPLATE_COLORS = {"tops": "cyan", "bottoms": "yellow", "dress": "magenta"}


class ColorManager:
    """Hands out palette colors in first-seen order; a run keeps its color."""

    def __init__(self):
        self._colors: Dict[str, str] = {}

    def get_color(self, key: str) -> str:
        if key not in self._colors:
            self._colors[key] = RUN_COLORS[len(self._colors) % len(RUN_COLORS)]
        return self._colors[key]

    def reset(self) -> None:
        self._colors.clear()
