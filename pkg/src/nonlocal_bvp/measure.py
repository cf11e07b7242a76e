"""Bounded-variation integrators and Riemann-Stieltjes integrals against them.

A component ``g^j`` of the integrator is stored as its measure ``dg^j``:

* ``jump0``  = g(0+) - g(0)
* ``atoms``  = interior point masses ``(t_i, Δ_i)`` with ``0 < t_i < 1``
* ``jump1``  = g(1) - g(1-)
* ``density`` = w(t), the absolutely continuous part ``dg = w dt``

Singular-continuous parts are not representable. The integral of a
continuous ``φ`` is then

    φ(0)·jump0 + Σ φ(t_i)·Δ_i + φ(1)·jump1 + ∫ φ w dt

independently of left/right conventions at the atoms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Any, Sequence

import numpy as np
from scipy import integrate as _integrate

from . import expr as _expr
from .quadrature import simpson_weights

__all__ = [
    "BVComponent", "BVFunction", "QuadratureError",
    "jump_at_zero_vector", "jump_at_one_vector", "tail_variation", "head_variation",
    "stieltjes", "stieltjes_weights", "uniform_grid",
]

VARIATION_RTOL = 1e-10


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class BVComponent:
    jump0: float = 0.0
    atoms: tuple = ()
    jump1: float = 0.0
    density: Any = None  # Expression in t, or None for zero density

    def __post_init__(self):
        object.__setattr__(self, "jump0", float(self.jump0))
        object.__setattr__(self, "jump1", float(self.jump1))
        atoms = tuple((float(t), float(w)) for t, w in self.atoms)
        prev = None
        for t, w in atoms:
            if not (0.0 < t < 1.0):
                raise ValueError(f"atom location {t!r} not strictly inside (0, 1)")
            if prev is not None and t <= prev:
                raise ValueError("atom locations must be strictly increasing")
            if not math.isfinite(w):
                raise ValueError(f"atom weight {w!r} is not finite")
            prev = t
        object.__setattr__(self, "atoms", atoms)
        if isinstance(self.density, str):
            object.__setattr__(self, "density", _expr.parse(self.density))
        if self.density is not None:
            extra = _expr.variables(self.density) - {"t"}
            if extra:
                raise ValueError(f"density may only reference t, found {sorted(extra)}")
        if not (math.isfinite(self.jump0) and math.isfinite(self.jump1)):
            raise ValueError("jumps must be finite")

    @classmethod
    def step_at_zero(cls, size: float = 1.0) -> "BVComponent":
        return cls(jump0=size)

    @cached_property
    def _density_fn(self):
        return _expr.compile_vector([self.density], ["t"])

    def density_values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.density is None:
            return np.zeros_like(t)
        with np.errstate(all="ignore"):
            out = self._density_fn(t)[0]
        if not np.all(np.isfinite(out)):
            bad = float(np.ravel(t)[np.flatnonzero(~np.isfinite(np.ravel(out)))[0]])
            # re-evaluate strictly for a precise message
            _expr.evaluate(self.density, {"t": bad})
            raise ValueError(f"density not finite at t={bad!r}")
        return out

    def density_integral(self) -> float:
        if self.density is None:
            return 0.0
        return _quad(lambda s: float(self.density_values(s)))

    def total_mass(self) -> float:
        """g(1) - g(0)."""
        return self.jump0 + sum(w for _, w in self.atoms) + self.jump1 + self.density_integral()

    def to_dict(self) -> dict:
        return {
            "jump0": self.jump0,
            "atoms": [[t, w] for t, w in self.atoms],
            "jump1": self.jump1,
            "density": None if self.density is None else _expr.to_string(self.density),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BVComponent":
        density = d.get("density")
        if density is not None and not str(density).strip():
            density = None
        return cls(
            jump0=d.get("jump0", 0.0),
            atoms=tuple(tuple(a) for a in d.get("atoms", ())),
            jump1=d.get("jump1", 0.0),
            density=density,
        )


@dataclass(frozen=True)
class BVFunction:
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a BV function needs at least one component")
        if not all(isinstance(c, BVComponent) for c in comps):
            raise TypeError("components must be BVComponent instances")
        object.__setattr__(self, "components", comps)

    @property
    def k(self) -> int:
        return len(self.components)

    def replace_component(self, j: int, comp: BVComponent) -> "BVFunction":
        comps = list(self.components)
        comps[j] = comp
        return BVFunction(tuple(comps))

    def without_jump_at_zero(self) -> "BVFunction":
        return BVFunction(tuple(replace(c, jump0=0.0) for c in self.components))

    def to_list(self) -> list:
        return [c.to_dict() for c in self.components]

    @classmethod
    def from_list(cls, items: Sequence[dict]) -> "BVFunction":
        return cls(tuple(BVComponent.from_dict(d) for d in items))


def _quad(fn) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = _integrate.quad(fn, 0.0, 1.0, epsabs=1e-14, epsrel=VARIATION_RTOL, limit=500, full_output=1)
    value, abserr = out[0], out[1]
    if len(out) > 3:
        raise QuadratureError(f"adaptive quadrature did not converge: {out[3]} (estimate {value!r}, error {abserr!r})")
    if not math.isfinite(value):
        raise QuadratureError("quadrature produced a non-finite value")
    return float(value)


def jump_at_zero_vector(g: BVFunction) -> np.ndarray:
    return np.array([c.jump0 for c in g.components])


def jump_at_one_vector(g: BVFunction) -> np.ndarray:
    return np.array([c.jump1 for c in g.components])


def _interior_atom_vectors(g: BVFunction) -> list[np.ndarray]:
    # atoms of different components at the same location form one vector jump
    by_loc: dict[float, np.ndarray] = {}
    for j, comp in enumerate(g.components):
        for t, w in comp.atoms:
            by_loc.setdefault(t, np.zeros(g.k))[j] += w
    return [by_loc[t] for t in sorted(by_loc)]


def _density_variation(g: BVFunction) -> float:
    dens = [c for c in g.components if c.density is not None]
    if not dens:
        return 0.0

    def norm(s: float) -> float:
        return math.sqrt(sum(float(c.density_values(s)) ** 2 for c in dens))

    return _quad(norm)


def tail_variation(g: BVFunction) -> float:
    """lim_{ε→0+} var(g, [ε, 1]) in the Euclidean norm (the jump at 0 is excluded)."""
    atoms = sum(float(np.linalg.norm(v)) for v in _interior_atom_vectors(g))
    return _density_variation(g) + atoms + float(np.linalg.norm(jump_at_one_vector(g)))


def head_variation(g: BVFunction) -> float:
    """lim_{ε→0+} var(g, [0, 1-ε]) (the jump at 1 is excluded)."""
    atoms = sum(float(np.linalg.norm(v)) for v in _interior_atom_vectors(g))
    return _density_variation(g) + atoms + float(np.linalg.norm(jump_at_zero_vector(g)))


def uniform_grid(n_intervals: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, int(n_intervals) + 1)


@lru_cache(maxsize=128)
def _weights(g: BVFunction, n_intervals: int) -> np.ndarray:
    grid = uniform_grid(n_intervals)
    h = 1.0 / n_intervals
    simp = simpson_weights(n_intervals, h)
    W = np.zeros((n_intervals + 1, g.k))
    for j, comp in enumerate(g.components):
        if comp.density is not None:
            W[:, j] += simp * comp.density_values(grid)
        W[0, j] += comp.jump0
        W[-1, j] += comp.jump1
        for t, w in comp.atoms:
            idx = int(np.searchsorted(grid, t, side="right")) - 1
            idx = min(max(idx, 0), n_intervals - 1)
            frac = (t - grid[idx]) / (grid[idx + 1] - grid[idx])
            W[idx, j] += w * (1.0 - frac)
            W[idx + 1, j] += w * frac
    W.setflags(write=False)
    return W


def stieltjes_weights(g: BVFunction, n_intervals: int) -> np.ndarray:
    """Node weights ``W`` with ``∫ φ^j dg^j = Σ_n W[n, j] φ^j(t_n)`` on the uniform grid."""
    if n_intervals < 2:
        raise ValueError("need at least 2 grid intervals")
    return _weights(g, int(n_intervals))


def _values_of(phi) -> np.ndarray:
    values = np.asarray(getattr(phi, "values", phi), dtype=float)
    if values.ndim < 2 or values.shape[-2] == 0:
        raise ValueError("empty trajectory")
    grid = getattr(phi, "grid", None)
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        n = len(grid) - 1
        if n < 2 or len(grid) != values.shape[-2] or not np.allclose(grid, uniform_grid(n), rtol=0, atol=1e-12):
            raise ValueError("trajectory must live on a uniform grid over [0, 1] with at least 2 intervals")
    return values


def stieltjes(phi, g: BVFunction) -> np.ndarray:
    """Componentwise Riemann-Stieltjes integral ``∫_0^1 φ(s) dg(s)``.

    ``phi`` is a :class:`~nonlocal_bvp.ode.Trajectory` or an array of node
    values shaped ``(..., N+1, k)`` on the uniform grid; leading batch axes are
    kept. Atom values are interpolated linearly between nodes and the density
    part uses composite Simpson on the same nodes.
    """
    values = _values_of(phi)
    if values.shape[-1] != g.k:
        raise ValueError(f"trajectory has {values.shape[-1]} components, integrator has {g.k}")
    W = stieltjes_weights(g, values.shape[-2] - 1)
    return np.einsum("...nj,nj->...j", values, W)
