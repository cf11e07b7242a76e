"""Deterministic point sets on spheres and in balls."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import qmc

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def sphere_points(k: int, n: int, radius: float = 1.0) -> np.ndarray:
    """Points on the sphere ``|x| = radius`` in R^k, shape ``(m, k)``.

    k=1 gives ``{-R, R}``; k=2 equally spaced angles; k=3 a Fibonacci spiral;
    higher k a tensor grid in hyperspherical angles (``m >= n``).
    """
    if k < 1 or n < 1:
        raise ValueError("need k >= 1 and n >= 1")
    if k == 1:
        pts = np.array([[-1.0], [1.0]])
    elif k == 2:
        th = 2.0 * math.pi * np.arange(n) / n
        pts = np.column_stack([np.cos(th), np.sin(th)])
    elif k == 3:
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        rho = np.sqrt(1.0 - z * z)
        th = GOLDEN_ANGLE * np.arange(n)
        pts = np.column_stack([rho * np.cos(th), rho * np.sin(th), z])
    else:
        per = max(2, math.ceil(n ** (1.0 / (k - 1))))
        polar = (np.arange(per) + 0.5) * math.pi / per
        azim = 2.0 * math.pi * np.arange(per) / per
        grids = np.meshgrid(*([polar] * (k - 2) + [azim]), indexing="ij")
        angles = np.column_stack([g.ravel() for g in grids])
        pts = np.ones((len(angles), k))
        for a in range(k - 1):
            pts[:, a] *= np.cos(angles[:, a])
            pts[:, a + 1:] *= np.sin(angles[:, a])[:, None]
    return radius * pts


def ball_seeds(k: int, n_min: int, radius: float) -> np.ndarray:
    """At least ``n_min`` unscrambled Sobol points inside the open ball, in Sobol order."""
    sampler_m = max(4, math.ceil(math.log2(n_min)))
    while True:
        sobol = qmc.Sobol(d=k, scramble=False)
        pts = 2.0 * sobol.random_base2(sampler_m) - 1.0
        pts = pts[1:]  # the first unscrambled point is the origin corner
        inside = pts[np.linalg.norm(pts, axis=1) < 1.0]
        if len(inside) >= n_min or sampler_m >= 20:
            return radius * inside
        sampler_m += 1


def cube_grid(k: int, per_axis: int, half_width: float) -> np.ndarray:
    """Uniform tensor grid on ``[-w, w]^k`` in lexicographic order, shape ``(per_axis**k, k)``."""
    axis = np.linspace(-half_width, half_width, per_axis) if per_axis > 1 else np.zeros(1)
    mesh = np.meshgrid(*([axis] * k), indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])
