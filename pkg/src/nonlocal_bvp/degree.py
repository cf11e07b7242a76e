"""Brouwer degree ``deg(h, B(0, r), 0)`` of boundary maps.

Exact in dimensions 1 (boundary signs) and 2 (winding number of ``h`` along
the circle); in higher dimensions a root count with Jacobian signs, reported
with ``certified=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import expr as _expr
from .newton import damped_newton, dedupe, fd_jacobian
from .sampling import ball_seeds, sphere_points

__all__ = [
    "BoundaryMap", "DegreeResult", "DegreeError", "BoundaryVanishes", "DegreeInconclusive",
    "degree", "product_degree", "winding_number",
]

BOUNDARY_TOL = 1e-12
RESIDUAL_TOL = 0.01

METHODS = ("sign-1d", "winding-2d", "root-count-nd")


def _arg_names(k: int) -> list[str]:
    return [f"u{i + 1}" for i in range(k)]


@dataclass(frozen=True)
class BoundaryMap:
    """``h: R^k -> R^k`` as ``k`` expressions in ``u1..uk``."""

    exprs: tuple

    def __post_init__(self):
        exprs = tuple(_expr.parse(e) if isinstance(e, str) else e for e in self.exprs)
        if not exprs:
            raise ValueError("boundary map needs at least one component")
        allowed = set(_arg_names(len(exprs)))
        for i, e in enumerate(exprs):
            extra = _expr.variables(e) - allowed
            if extra:
                raise ValueError(f"component {i + 1} references unknown variables {sorted(extra)}")
        object.__setattr__(self, "exprs", exprs)

    @classmethod
    def from_strings(cls, texts: Sequence[str]) -> "BoundaryMap":
        return cls(tuple(texts))

    @classmethod
    def identity(cls, k: int) -> "BoundaryMap":
        return cls(tuple(_expr.Var(n) for n in _arg_names(k)))

    @property
    def k(self) -> int:
        return len(self.exprs)

    def to_strings(self) -> list[str]:
        return [_expr.to_string(e) for e in self.exprs]

    def rename(self, mapping: Mapping[str, str]) -> "BoundaryMap":
        subs = {a: _expr.Var(b) for a, b in mapping.items()}
        return BoundaryMap(tuple(_expr.substitute(e, subs) for e in self.exprs))

    @cached_property
    def _compiled(self):
        return _expr.compile_vector(self.exprs, _arg_names(self.k))

    def __call__(self, u) -> np.ndarray:
        """Vectorised; ``u`` has shape ``(k, *batch)``; domain errors give nan."""
        u = np.asarray(u, dtype=float)
        with np.errstate(all="ignore"):
            return self._compiled(*u)

    def rows(self, points: np.ndarray) -> np.ndarray:
        """Evaluate on points shaped ``(m, k)``, returning ``(m, k)``."""
        points = np.asarray(points, dtype=float)
        return self(points.T).T

    def evaluate(self, u: Sequence[float]) -> np.ndarray:
        env = {n: float(v) for n, v in zip(_arg_names(self.k), u)}
        return np.array([_expr.evaluate(e, env) for e in self.exprs])


@dataclass(frozen=True)
class DegreeResult:
    value: int
    method: str
    certified: bool
    min_boundary_norm: float

    def to_dict(self) -> dict:
        return {
            "value": int(self.value),
            "method": self.method,
            "certified": bool(self.certified),
            "min_boundary_norm": float(self.min_boundary_norm),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DegreeResult":
        return cls(int(d["value"]), str(d["method"]), bool(d["certified"]), float(d["min_boundary_norm"]))


class DegreeError(RuntimeError):
    pass


class BoundaryVanishes(DegreeError):
    """``|h| <= tol`` somewhere on the sphere: the degree is undefined."""

    def __init__(self, point, value: float):
        point = [float(v) for v in np.atleast_1d(point)]
        super().__init__(f"|h| = {value:.3e} on the boundary at u = {point}")
        self.point = point
        self.value = float(value)


class DegreeInconclusive(DegreeError):
    pass


def _sgn(v: float) -> int:
    v = float(v)
    return (v > 0) - (v < 0)


def _degree_1d(h: BoundaryMap, r: float, tol: float) -> DegreeResult:
    vals = h.rows(np.array([[-r], [r]]))[:, 0]
    for u, v in zip((-r, r), vals):
        if not math.isfinite(v):
            h.evaluate([u])  # raises with the domain violation
            raise DegreeError(f"h is not finite at u = {u}")
        if abs(v) <= tol:
            raise BoundaryVanishes([u], abs(v))
    value = (_sgn(vals[1]) - _sgn(vals[0])) // 2
    return DegreeResult(value, "sign-1d", True, float(np.min(np.abs(vals))))


def _wrap(d: np.ndarray) -> np.ndarray:
    return (d + np.pi) % (2.0 * np.pi) - np.pi


def winding_number(h: BoundaryMap, r: float, *, tol: float = BOUNDARY_TOL,
                   residual_tol: float = RESIDUAL_TOL, initial: int = 64,
                   max_samples: int = 1 << 20) -> tuple[int, float, float]:
    """Winding number of ``h`` along ``|u| = r`` in R^2.

    Angle increments are accumulated between samples; arcs whose increment
    reaches π/2 are bisected until none does. Refinement cannot undo
    aliasing (a map turning a whole number of times between two initial
    samples), so ``initial`` should exceed the expected winding several times.

    Returns:
        ``(value, min |h| on the samples, rounding residual)``.
    """
    theta = 2.0 * np.pi * np.arange(initial) / initial
    while True:
        pts = r * np.column_stack([np.cos(theta), np.sin(theta)])
        H = h.rows(pts)
        norms = np.linalg.norm(H, axis=1)
        if not np.all(np.isfinite(norms)):
            i = int(np.flatnonzero(~np.isfinite(norms))[0])
            h.evaluate(pts[i])
            raise DegreeError(f"h is not finite at u = {pts[i].tolist()}")
        i_min = int(np.argmin(norms))
        if norms[i_min] <= tol:
            raise BoundaryVanishes(pts[i_min], norms[i_min])
        ang = np.arctan2(H[:, 1], H[:, 0])
        inc = _wrap(np.diff(np.append(ang, ang[0])))
        bad = np.flatnonzero(np.abs(inc) >= np.pi / 2)
        if bad.size == 0:
            break
        if len(theta) + bad.size > max_samples:
            raise DegreeInconclusive(
                f"angle increments still >= pi/2 after refining to {len(theta)} samples")
        ends = np.append(theta[1:], 2.0 * np.pi)
        mids = 0.5 * (theta[bad] + ends[bad])
        theta = np.sort(np.concatenate([theta, mids]))
    turns = float(np.sum(inc)) / (2.0 * np.pi)
    value = int(round(turns))
    residual = abs(turns - value)
    if residual >= residual_tol:
        raise DegreeInconclusive(f"winding {turns!r} is not within {residual_tol} of an integer")
    return value, float(norms[i_min]), residual


def _degree_nd(h: BoundaryMap, r: float, tol: float, n_seeds: int) -> DegreeResult:
    k = h.k
    sphere = sphere_points(k, max(2048, n_seeds), r)
    sn = np.linalg.norm(h.rows(sphere), axis=1)
    if not np.all(np.isfinite(sn)):
        i = int(np.flatnonzero(~np.isfinite(sn))[0])
        h.evaluate(sphere[i])
        raise DegreeError(f"h is not finite at u = {sphere[i].tolist()}")
    i_min = int(np.argmin(sn))
    if sn[i_min] <= tol:
        raise BoundaryVanishes(sphere[i_min], sn[i_min])

    seeds = ball_seeds(k, n_seeds, r)
    res = damped_newton(h.rows, seeds, tol=1e-11, max_iter=60, step=1e-6, scheme="central")
    inside = res.converged & (np.linalg.norm(res.x, axis=1) < r)
    roots = res.x[inside]
    roots = roots[dedupe(roots, 1e-6)] if len(roots) else roots
    value = 0
    if len(roots):
        J = fd_jacobian(h.rows, roots, step=1e-6, scheme="central")
        value = int(sum(_sgn(d) for d in np.linalg.det(J)))
    return DegreeResult(value, "root-count-nd", False, float(sn[i_min]))


def degree(h: BoundaryMap, r: float, *, boundary_tol: float = BOUNDARY_TOL,
           residual_tol: float = RESIDUAL_TOL, n_seeds: int = 512) -> DegreeResult:
    """Brouwer degree of ``h`` on the open ball of radius ``r`` about 0 at the value 0.

    Raises:
        BoundaryVanishes: ``|h| <= boundary_tol`` at a boundary sample.
        DegreeInconclusive: the planar winding number did not settle.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    if h.k == 1:
        return _degree_1d(h, r, boundary_tol)
    if h.k == 2:
        value, min_norm, _ = winding_number(h, r, tol=boundary_tol, residual_tol=residual_tol)
        return DegreeResult(value, "winding-2d", True, min_norm)
    return _degree_nd(h, r, boundary_tol, n_seeds)


def product_degree(h1: BoundaryMap, h2: BoundaryMap, r: float, **kwargs) -> DegreeResult:
    """Degree of ``(u, v) ↦ (h1(u), h2(v))`` on ``B(0, r) × B(0, r)``: the product of the factors."""
    d1 = degree(h1, r, **kwargs)
    d2 = degree(h2, r, **kwargs)
    method = max(d1.method, d2.method, key=METHODS.index)
    return DegreeResult(
        d1.value * d2.value, method, d1.certified and d2.certified,
        min(d1.min_boundary_norm, d2.min_boundary_norm),
    )
