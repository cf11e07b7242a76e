"""Fixed-step RK4 for ``x' = λ f(t, x)`` on the uniform grid over [0, 1]."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as _expr
from .measure import uniform_grid

__all__ = ["VectorField", "Trajectory", "IntegrationError", "integrate", "integrate_batch", "step_doubling_error"]

DEFAULT_STEPS = 1000


class IntegrationError(RuntimeError):
    """The state became non-finite, or ``f`` hit a domain violation."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


def _state_names(k: int, prefix: str = "x") -> list[str]:
    return [f"{prefix}{i + 1}" for i in range(k)]


@dataclass(frozen=True)
class VectorField:
    """``f(t, x)`` as ``k`` expressions in ``t, x1..xk``."""

    exprs: tuple

    def __post_init__(self):
        exprs = tuple(_expr.parse(e) if isinstance(e, str) else e for e in self.exprs)
        if not exprs:
            raise ValueError("vector field needs at least one component")
        allowed = {"t", *_state_names(len(exprs))}
        for i, e in enumerate(exprs):
            extra = _expr.variables(e) - allowed
            if extra:
                raise ValueError(f"component {i + 1} references unknown variables {sorted(extra)}")
        object.__setattr__(self, "exprs", exprs)

    @classmethod
    def from_strings(cls, texts: Sequence[str]) -> "VectorField":
        return cls(tuple(texts))

    @property
    def k(self) -> int:
        return len(self.exprs)

    def to_strings(self) -> list[str]:
        return [_expr.to_string(e) for e in self.exprs]

    def scaled(self, factor: float) -> "VectorField":
        return VectorField(tuple(_expr.BinOp("*", _expr.Num(float(factor)), e) if factor >= 0
                                 else _expr.Neg(_expr.BinOp("*", _expr.Num(-float(factor)), e))
                                 for e in self.exprs))

    @cached_property
    def _compiled(self):
        return _expr.compile_vector(self.exprs, ["t", *_state_names(self.k)], scalar_args=["t"])

    def __call__(self, t: float, x) -> np.ndarray:
        """Vectorised evaluation; ``x`` has shape ``(k, *batch)``. Domain errors give nan."""
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            return self._compiled(t, *x)

    def evaluate(self, t: float, x: Sequence[float]) -> np.ndarray:
        """Strict scalar evaluation; raises :class:`~nonlocal_bvp.expr.EvaluationError`."""
        env = {"t": float(t), **{n: float(v) for n, v in zip(_state_names(self.k), x)}}
        return np.array([_expr.evaluate(e, env) for e in self.exprs])


@dataclass(frozen=True)
class Trajectory:
    grid: np.ndarray
    values: np.ndarray  # (N+1, k)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if grid.ndim != 1 or len(grid) < 2:
            raise ValueError("grid needs at least two nodes")
        if len(values) != len(grid):
            raise ValueError("values count must equal grid count")
        if grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must increase strictly from 0 to 1")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, fn, n_intervals: int = DEFAULT_STEPS) -> "Trajectory":
        grid = uniform_grid(n_intervals)
        return cls(grid, np.array([np.atleast_1d(fn(t)) for t in grid], dtype=float))

    @property
    def k(self) -> int:
        return self.values.shape[1]

    @property
    def steps(self) -> int:
        return len(self.grid) - 1

    def __call__(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.grid, self.values[:, j]) for j in range(self.k)])

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def distance(self, other: "Trajectory") -> float:
        return float(np.max(np.linalg.norm(self.values - other.values, axis=1)))

    def reversed(self) -> "Trajectory":
        """``t ↦ x(1 - t)`` (grids are assumed symmetric, as uniform grids are)."""
        return Trajectory(self.grid, self.values[::-1].copy())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", *_state_names(self.k)])
        for t, row in zip(self.grid, self.values):
            writer.writerow([f"{t:.17g}", *(f"{v:.17g}" for v in row)])
        return buf.getvalue()


def integrate_batch(f: VectorField, c, lam: float = 1.0, steps: int = DEFAULT_STEPS):
    """RK4 for many initial values at once.

    Args:
        c: initial values, shape ``(m, k)``.

    Returns:
        ``(values, escaped_at)``: node values of shape ``(m, steps + 1, k)``
        and, per row, the first grid time at which the state stopped being
        finite (``nan`` for rows that stayed finite). Escaped rows are nan
        from that node on.
    """
    if steps < 2:
        raise ValueError("steps must be at least 2")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    c = np.atleast_2d(np.asarray(c, dtype=float))
    m, k = c.shape
    if k != f.k:
        raise ValueError(f"initial value has {k} components, field has {f.k}")
    h = 1.0 / steps
    grid = uniform_grid(steps)
    out = np.empty((steps + 1, k, m))
    y = c.T.copy()
    out[0] = y
    escaped_at = np.full(m, np.nan)
    if lam == 0.0:
        out[1:] = y
        return np.transpose(out, (2, 0, 1)), escaped_at
    lh = lam * h
    with np.errstate(all="ignore"):
        for n in range(steps):
            t = grid[n]
            k1 = f(t, y)
            k2 = f(t + 0.5 * h, y + (0.5 * lh) * k1)
            k3 = f(t + 0.5 * h, y + (0.5 * lh) * k2)
            k4 = f(t + h, y + lh * k3)
            y = y + (lh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[n + 1] = y
    finite = np.isfinite(out).all(axis=1)  # (steps+1, m)
    bad_rows = np.flatnonzero(~finite.all(axis=0))
    for r in bad_rows:
        first = int(np.argmin(finite[:, r]))
        escaped_at[r] = grid[first]
        out[first:, :, r] = np.nan
    return np.transpose(out, (2, 0, 1)), escaped_at


def _diagnose(f: VectorField, values: np.ndarray, escaped_at: float, lam: float, steps: int) -> IntegrationError:
    grid = uniform_grid(steps)
    n = int(round(escaped_at * steps))
    prev = values[n - 1]
    try:
        f.evaluate(grid[n - 1], prev)
    except _expr.EvaluationError as exc:
        return IntegrationError(f"evaluation of f failed near t={grid[n - 1]:.17g}: {exc}", float(grid[n - 1]))
    return IntegrationError(f"state became non-finite at t={escaped_at:.17g}", float(escaped_at))


def integrate(f: VectorField, c, lam: float = 1.0, steps: int = DEFAULT_STEPS) -> Trajectory:
    """Integrate ``x' = λ f(t, x)``, ``x(0) = c`` with classical RK4 and step ``1/steps``.

    Raises:
        IntegrationError: the state stopped being finite; ``.t`` is the first
            offending grid time.
    """
    c = np.asarray(c, dtype=float).reshape(1, -1)
    values, escaped_at = integrate_batch(f, c, lam, steps)
    if np.isfinite(escaped_at[0]):
        raise _diagnose(f, values[0], escaped_at[0], lam, steps)
    return Trajectory(uniform_grid(steps), values[0])


def step_doubling_error(f: VectorField, c, lam: float = 1.0, steps: int = DEFAULT_STEPS) -> float:
    """Richardson estimate of the endpoint error of the ``steps`` solution.

    Not used for step control; reported alongside solutions.
    """
    coarse = integrate(f, c, lam, steps).values[-1]
    fine = integrate(f, c, lam, 2 * steps).values[-1]
    return float(np.linalg.norm(coarse - fine) * 16.0 / 15.0)
