"""uvdrape - learned cloth dynamics on body UV maps."""

__version__ = "0.1.0"
