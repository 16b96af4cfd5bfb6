"""Central finite-difference gradient checks."""

from typing import Callable

import numpy as np

DEFAULT_STEP = 1e-4


def numeric_gradient(f: Callable[[], float], x: np.ndarray, h: float = DEFAULT_STEP) -> np.ndarray:
    """Gradient of the scalar ``f()`` with respect to ``x``, perturbing ``x`` in place."""
    grad = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"], op_flags=["readwrite"])
    while not it.finished:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        plus = f()
        x[idx] = old - h
        minus = f()
        x[idx] = old
        grad[idx] = (plus - minus) / (2.0 * h)
        it.iternext()
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - n| / max(|a| + |n|, tiny)."""
    num = np.max(np.abs(analytic - numeric))
    den = max(np.max(np.abs(analytic) + np.abs(numeric)), 1e-12)
    return float(num / den)


def projection(y: np.ndarray, seed: int = 0) -> np.ndarray:
    """Random weights turning a tensor output into a scalar loss ``sum(w * y)``."""
    return np.random.default_rng(seed).standard_normal(y.shape)
