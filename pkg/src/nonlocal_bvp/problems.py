"""Problem constructors: second-order reductions, resonance, periodic, time reversal."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from . import expr as _expr
from .coincidence import Problem
from .degree import BoundaryMap
from .measure import BVComponent, BVFunction
from .ode import VectorField

__all__ = [
    "SecondOrderSpec", "reduce_second_order", "resonance_problem", "problem_P",
    "periodic_problem", "periodic_g", "step_at_zero", "time_reverse", "RESONANCE_TOL",
]

RESONANCE_TOL = 1e-12


def _parsed(items) -> tuple:
    return tuple(_expr.parse(e) if isinstance(e, str) else e for e in items)


def _names(prefix: str, k: int, start: int = 1) -> list[str]:
    return [f"{prefix}{i}" for i in range(start, start + k)]


def step_at_zero(k: int, size: float = 1.0) -> BVFunction:
    return BVFunction(tuple(BVComponent(jump0=size) for _ in range(k)))


def periodic_g(k: int) -> BVFunction:
    """g = -1 at s = 0 and s = 1, 0 in between: ``∫ x dg = x(0) - x(1)``."""
    return BVFunction(tuple(BVComponent(jump0=1.0, jump1=-1.0) for _ in range(k)))


def periodic_problem(f: Union[VectorField, Sequence[str]], k: int | None = None) -> Problem:
    if not isinstance(f, VectorField):
        f = VectorField(tuple(f))
    if k is not None and k != f.k:
        raise ValueError(f"field has {f.k} components, expected {k}")
    return Problem(f, periodic_g(f.k), BoundaryMap.identity(f.k))


@dataclass(frozen=True)
class SecondOrderSpec:
    """``x'' = f2(t, x, x')`` with ``h_i(∫ x dg1, ∫ x' dg2) = 0``, i = 1, 2.

    ``f2`` uses ``t, x1..xk, y1..yk`` (``y = x'``); ``h1`` and ``h2`` use
    ``u1..uk`` for ``∫ x dg1`` and ``v1..vk`` for ``∫ x' dg2``.
    """

    f2: tuple
    h1: tuple
    h2: tuple
    g1: BVFunction
    g2: BVFunction

    def __post_init__(self):
        for name in ("f2", "h1", "h2"):
            object.__setattr__(self, name, _parsed(getattr(self, name)))
        k = len(self.f2)
        if k == 0:
            raise ValueError("empty second-order system")
        if not (len(self.h1) == len(self.h2) == self.g1.k == self.g2.k == k):
            raise ValueError(
                f"dimension mismatch: f2 {k}, h1 {len(self.h1)}, h2 {len(self.h2)}, "
                f"g1 {self.g1.k}, g2 {self.g2.k}")
        field_vars = {"t", *_names("x", k), *_names("y", k)}
        bc_vars = {*_names("u", k), *_names("v", k)}
        for label, exprs, allowed in (("f2", self.f2, field_vars), ("h1", self.h1, bc_vars), ("h2", self.h2, bc_vars)):
            for i, e in enumerate(exprs):
                extra = _expr.variables(e) - allowed
                if extra:
                    raise ValueError(f"{label}[{i}] references unknown variables {sorted(extra)}")

    @property
    def k(self) -> int:
        return len(self.f2)


def reduce_second_order(s: SecondOrderSpec) -> Problem:
    """First-order system in ``(x, y)``: ``f = (y, f2)``, ``h = (h1, h2)``, ``g = (g1, g2)``."""
    k = s.k
    to_state = {f"y{i}": _expr.Var(f"x{k + i}") for i in range(1, k + 1)}
    to_bc = {f"v{i}": _expr.Var(f"u{k + i}") for i in range(1, k + 1)}
    f = tuple(_expr.Var(f"x{k + i}") for i in range(1, k + 1)) + tuple(
        _expr.substitute(e, to_state) for e in s.f2)
    h = tuple(_expr.substitute(e, to_bc) for e in s.h1 + s.h2)
    u_only = set(_names("u", k))
    v_only = set(_names("v", k))
    separable = all(_expr.variables(e) <= u_only for e in s.h1) and all(
        _expr.variables(e) <= v_only for e in s.h2)
    return Problem(
        VectorField(f),
        BVFunction(s.g1.components + s.g2.components),
        BoundaryMap(h),
        split=k if separable else None,
    )


def _identity_pair(k: int) -> tuple[tuple, tuple]:
    return tuple(_names("u", k)), tuple(_names("v", k))


def _step_down(k: int) -> BVFunction:
    # g(0) = 1, g = 0 on (0, 1]: jump at zero of -1, so ∫ φ dg = -φ(0)
    return step_at_zero(k, -1.0)


def resonance_problem(f2: Sequence, g: Union[BVComponent, BVFunction]) -> Problem:
    """``x'' = f2``, ``x(0) = 0``, ``∫ x' dg = 0`` with ``g(1) = g(0)``."""
    if isinstance(g, BVFunction):
        if g.k != 1:
            raise ValueError("resonance problem takes a scalar integrator")
        g = g.components[0]
    mass = g.total_mass()
    if abs(mass) > RESONANCE_TOL:
        raise ValueError(f"not at resonance: g(1) - g(0) = {mass!r}")
    k = len(f2)
    h1, h2 = _identity_pair(k)
    spec = SecondOrderSpec(tuple(f2), h1, h2, _step_down(k), BVFunction((g,) * k))
    return reduce_second_order(spec)


def problem_P(f2: Sequence, g: BVFunction) -> Problem:
    """``x'' = f2``, ``x(0) = 0``, ``x'(0) = ∫ x' dg``.

    ``g2 = g1 + g`` with ``g1`` the downward step at 0, so the second
    condition reads ``-x'(0) + ∫ x' dg = 0``.
    """
    k = len(f2)
    if g.k != k:
        raise ValueError(f"g has {g.k} components, f2 has {k}")
    g2 = BVFunction(tuple(
        BVComponent(jump0=c.jump0 - 1.0, atoms=c.atoms, jump1=c.jump1, density=c.density)
        for c in g.components))
    h1, h2 = _identity_pair(k)
    return reduce_second_order(SecondOrderSpec(tuple(f2), h1, h2, _step_down(k), g2))


def _reflect_component(c: BVComponent) -> BVComponent:
    # g~(s) = -g(1 - s) keeps every jump's sign and maps atoms t -> 1 - t
    flip_t = {"t": _expr.BinOp("-", _expr.Num(1.0), _expr.Var("t"))}
    return BVComponent(
        jump0=c.jump1,
        atoms=tuple((1.0 - t, w) for t, w in reversed(c.atoms)),
        jump1=c.jump0,
        density=None if c.density is None else _expr.substitute(c.density, flip_t),
    )


def time_reverse(p: Problem) -> Problem:
    """The problem solved by ``x~(t) = x(1 - t)``.

    ``f~(t, x) = -f(1 - t, x)`` and ``g~(s) = -g(1 - s)``, which gives
    ``∫ x~ dg~ = ∫ x dg``, so ``h`` is unchanged and solutions correspond.
    Jumps at 0 and 1 swap places.
    """
    flip_t = {"t": _expr.BinOp("-", _expr.Num(1.0), _expr.Var("t"))}
    f = VectorField(tuple(_expr.Neg(_expr.substitute(e, flip_t)) for e in p.f.exprs))
    g = BVFunction(tuple(_reflect_component(c) for c in p.g.components))
    return Problem(f, g, p.h, p.split)
