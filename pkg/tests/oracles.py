"""Reference computations that share no code with the package.

Each oracle works from definitions: Riemann-Stieltjes partition sums,
brute-force angle accumulation, closed-form solutions.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial

DATA = Path(__file__).parent / "data"


def frozen() -> dict:
    with open(DATA / "oracle_values.json", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Stieltjes

class PolyBV:
    """Scalar BV function from explicit data: jumps at 0 and 1, atoms, polynomial density.

    ``value(s)`` follows the convention ``g(0) = 0`` and right-continuity in
    (0, 1); only the increments matter for the integral.
    """

    def __init__(self, jump0, atoms, jump1, density_coef):
        self.jump0 = float(jump0)
        self.atoms = [(float(t), float(w)) for t, w in atoms]
        self.jump1 = float(jump1)
        self.density = Polynomial(density_coef)
        self.antider = self.density.integ()

    def density_string(self) -> str | None:
        coef = self.density.coef
        if not np.any(coef):
            return None
        return " + ".join(f"({float(c)!r})*t^{i}" for i, c in enumerate(coef))

    def as_config(self) -> dict:
        return {"jump0": self.jump0, "atoms": [list(a) for a in self.atoms], "jump1": self.jump1,
                "density": self.density_string()}

    def values(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = self.antider(s) - self.antider(0.0)
        out = out + np.where(s > 0, self.jump0, 0.0)
        for t, w in self.atoms:
            out = out + np.where(s >= t, w, 0.0)
        return out + np.where(s >= 1.0, self.jump1, 0.0)

    def partition_variation(self, n: int = 10_000) -> float:
        """Variation over [eps, 1] with eps -> 0, i.e. excluding the jump at 0."""
        # points just left of each jump keep jumps and density increments in separate cells
        jumps = [t for t, _ in self.atoms] + [1.0]
        pts = np.union1d(np.linspace(0.0, 1.0, n + 1), jumps + [t - 1e-9 for t in jumps])
        vals = self.values(pts)
        return float(np.sum(np.abs(np.diff(vals[1:]))) + abs(vals[1] - vals[0] - self.jump0))


def partition_sum(phi, g: PolyBV, n: int = 100_000) -> float:
    """Riemann-Stieltjes sum over ``n`` uniform cells refined by the atom locations.

    Tags: right endpoint for cells ending at an atom, 0 for the first cell,
    1 for the last, midpoints elsewhere.
    """
    atom_t = np.array([t for t, _ in g.atoms])
    pts = np.union1d(np.linspace(0.0, 1.0, n + 1), atom_t)
    left, right = pts[:-1], pts[1:]
    tags = 0.5 * (left + right)
    if atom_t.size:
        tags = np.where(np.isin(right, atom_t), right, tags)
    tags[0] = 0.0
    tags[-1] = 1.0
    # increments: exact antiderivative for the density, explicit jumps
    dg = g.antider(right) - g.antider(left)
    dg[0] += g.jump0
    dg[-1] += g.jump1
    for t, w in g.atoms:
        dg[np.flatnonzero(right == t)[0]] += w
    return float(np.sum(phi(tags) * dg))


def random_poly_bv(rng: np.random.Generator, with_jump0: bool = True) -> PolyBV:
    n_atoms = int(rng.integers(0, 4))
    locs = np.sort(rng.uniform(0.05, 0.95, n_atoms))
    atoms = [(float(t), float(rng.uniform(-2, 2))) for t in locs]
    deg = int(rng.integers(0, 4))
    coef = rng.uniform(-2, 2, deg + 1)
    return PolyBV(rng.uniform(-2, 2) if with_jump0 else 0.0, atoms, rng.uniform(-2, 2), coef)


def random_poly(rng: np.random.Generator) -> Polynomial:
    return Polynomial(rng.uniform(-2, 2, int(rng.integers(1, 5))))


# ---------------------------------------------------------------------------
# degree

def winding_oracle(h, r: float, n: int = 10_000) -> float:
    """Total angle of ``h`` along the circle of radius ``r`` / 2π, from ``n`` uniform samples."""
    th = 2.0 * np.pi * np.arange(n + 1) / n
    u1, u2 = r * np.cos(th), r * np.sin(th)
    a, b = h(u1, u2)
    ang = np.unwrap(np.arctan2(b, a))
    return float((ang[-1] - ang[0]) / (2.0 * np.pi))


# ---------------------------------------------------------------------------
# closed forms

def exp_oracle(t):
    return 0.5 * np.exp(-np.asarray(t))


def periodic_solution(t):
    t = np.asarray(t)
    return (np.cos(2 * np.pi * t) + 2 * np.pi * np.sin(2 * np.pi * t)) / (1 + 4 * np.pi ** 2)


def second_order_solution(t):
    t = np.asarray(t)
    return 1.0 - np.exp(-t), np.exp(-t)
