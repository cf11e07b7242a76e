"""Composite Simpson rules on uniform grids."""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_simpson as _scipy_cumulative_simpson


def simpson_weights(n_intervals: int, h: float) -> np.ndarray:
    """Weights of composite Simpson on ``n_intervals + 1`` equispaced nodes.

    Odd interval counts finish with a Simpson 3/8 panel on the last three
    intervals, so the rule stays exact for cubics for every ``n >= 2``.
    """
    n = int(n_intervals)
    if n < 2:
        raise ValueError("Simpson's rule needs at least 2 intervals")
    w = np.zeros(n + 1)
    even = n if n % 2 == 0 else n - 3
    if even > 0:
        w[0:even + 1:2] += 2.0
        w[1:even:2] += 4.0
        w[0] -= 1.0
        w[even] -= 1.0
        w[:even + 1] *= h / 3.0
    if n % 2 == 1:
        w[even:even + 4] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    return w


def simpson(values: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    w = simpson_weights(values.shape[axis] - 1, h)
    return np.tensordot(np.moveaxis(values, axis, -1), w, axes=([-1], [0]))


def cumulative_simpson(values: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Running integral from the first node, same length as ``values`` (first entry 0)."""
    values = np.asarray(values, dtype=float)
    return _scipy_cumulative_simpson(values, dx=h, axis=axis, initial=0.0)
