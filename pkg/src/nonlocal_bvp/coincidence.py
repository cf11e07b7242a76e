"""The boundary value problem ``x' = f(t, x)``, ``h(∫ x dg) = 0`` and its operator maps.

With ``L x = (x', 0)``, ``N x = (f(·, x), h(∫ x dg))``, the projections
``(Px)(t) = x(0)``, ``Q(z, α) = (-α, α)`` and ``J(-α, α) = α``, the reduced
map on ``ker L`` is ``JQN(x) = h(∫ x dg)`` and

    (K_{P,Q} N)(x)(t) = ∫_0^t f(s, x(s)) ds + t · h(∫ x dg).

Solutions are fixed points ``x = Px + JQNx + K_{P,Q}Nx``. Since ``ker L``
is the constants, it is parametrised by initial values ``c`` and the
shooting map ``S_λ(c) = h(∫ x_{c,λ} dg)`` carries the whole problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .degree import BoundaryMap
from .measure import BVFunction, stieltjes
from .ode import DEFAULT_STEPS, Trajectory, VectorField, integrate_batch
from .quadrature import cumulative_simpson

__all__ = [
    "Problem", "Escaped", "nonlocal_value", "boundary_residual", "kpq_n",
    "coincidence_residual", "shooting", "shooting_batch",
]


class Escaped(RuntimeError):
    """The trajectory from this initial value stopped being finite."""

    def __init__(self, c, t: float):
        super().__init__(f"trajectory from c = {list(map(float, c))} escaped at t = {t:.6g}")
        self.c = np.asarray(c, dtype=float)
        self.t = t


@dataclass(frozen=True)
class Problem:
    """Problem data. ``split`` marks ``h = (h1(u1..us), h2(u_{s+1}..))``, enabling product degrees."""

    f: VectorField
    g: BVFunction
    h: BoundaryMap
    split: Optional[int] = None

    def __post_init__(self):
        if not (self.f.k == self.g.k == self.h.k):
            raise ValueError(f"dimension mismatch: f has {self.f.k}, g has {self.g.k}, h has {self.h.k} components")
        if self.split is not None and not 0 < self.split < self.k:
            raise ValueError("split index out of range")

    @property
    def k(self) -> int:
        return self.f.k


def _h_checked(h: BoundaryMap, u: np.ndarray) -> np.ndarray:
    out = h.rows(np.atleast_2d(u))
    bad = ~np.isfinite(out).all(axis=1)
    if bad.any():
        h.evaluate(np.atleast_2d(u)[np.flatnonzero(bad)[0]])  # raises a precise EvaluationError
    return out


def nonlocal_value(x: Trajectory, p: Problem) -> np.ndarray:
    """``∫_0^1 x(s) dg(s)``."""
    return stieltjes(x, p.g)


def boundary_residual(x: Trajectory, p: Problem) -> np.ndarray:
    """``(JQN)(x) = h(∫ x dg)``."""
    return _h_checked(p.h, nonlocal_value(x, p))[0]


def _field_on_trajectory(x: Trajectory, p: Problem) -> np.ndarray:
    vals = p.f(x.grid, x.values.T).T  # (N+1, k)
    if not np.all(np.isfinite(vals)):
        n = int(np.flatnonzero(~np.isfinite(vals).all(axis=1))[0])
        p.f.evaluate(x.grid[n], x.values[n])
        raise ValueError(f"f is not finite at t = {x.grid[n]}")
    return vals


def kpq_n(x: Trajectory, p: Problem) -> Trajectory:
    """``(K_{P,Q} N)(x)`` node-wise: cumulative Simpson of ``f(s, x(s))`` plus ``t · h(∫ x dg)``."""
    fvals = _field_on_trajectory(x, p)
    h = 1.0 / x.steps
    integral = cumulative_simpson(fvals, h, axis=0)
    return Trajectory(x.grid, integral + np.outer(x.grid, boundary_residual(x, p)))


def coincidence_residual(x: Trajectory, p: Problem) -> float:
    """``sup_t |x(t) - x(0) - (1 + t) h(∫ x dg) - ∫_0^t f(s, x(s)) ds|``."""
    fvals = _field_on_trajectory(x, p)
    integral = cumulative_simpson(fvals, 1.0 / x.steps, axis=0)
    br = boundary_residual(x, p)
    resid = x.values - x.values[0] - np.outer(1.0 + x.grid, br) - integral
    return float(np.max(np.linalg.norm(resid, axis=1)))


def shooting_batch(p: Problem, c, lam: float = 1.0, steps: int = DEFAULT_STEPS):
    """``S_λ`` at many initial values.

    Returns:
        ``(S, values, escaped_at)`` with ``S`` of shape ``(m, k)`` (nan rows
        for escaped trajectories or domain errors in ``h``), node values
        ``(m, steps + 1, k)`` and per-row escape times.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    values, escaped_at = integrate_batch(p.f, c, lam, steps)
    with np.errstate(all="ignore"):
        S = p.h.rows(stieltjes(values, p.g))
    return S, values, escaped_at


def shooting(c, lam: float, p: Problem, steps: int = DEFAULT_STEPS) -> np.ndarray:
    """``S_λ(c) = h(∫ x_{c,λ} dg)`` where ``x_{c,λ}`` solves ``x' = λ f``, ``x(0) = c``.

    Raises:
        Escaped: the trajectory stopped being finite.
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must lie in (0, 1]")
    S, values, escaped_at = shooting_batch(p, c, lam, steps)
    if np.isfinite(escaped_at[0]):
        raise Escaped(c, float(escaped_at[0]))
    if not np.all(np.isfinite(S[0])):
        _h_checked(p.h, stieltjes(values[0], p.g))
    return S[0]
