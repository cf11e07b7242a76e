import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonlocal_bvp.measure import (BVComponent, BVFunction, head_variation, jump_at_one_vector,
                                  jump_at_zero_vector, stieltjes, tail_variation, uniform_grid)
from nonlocal_bvp.ode import Trajectory
from nonlocal_bvp.problems import periodic_g, step_at_zero
from oracles import PolyBV, partition_sum, random_poly, random_poly_bv

GRID = uniform_grid(4000)


def traj(fn, grid=GRID):
    vals = np.asarray(fn(grid), dtype=float)
    return Trajectory(grid, vals.reshape(len(grid), -1) if vals.ndim == 1 else vals)


def scalar_g(pg: PolyBV) -> BVFunction:
    return BVFunction((BVComponent.from_dict(pg.as_config()),))


def test_component_invariants():
    with pytest.raises(ValueError):
        BVComponent(atoms=((0.0, 1.0),))
    with pytest.raises(ValueError):
        BVComponent(atoms=((0.5, 1.0), (0.5, 2.0)))
    with pytest.raises(ValueError):
        BVComponent(atoms=((0.6, 1.0), (0.5, 2.0)))
    with pytest.raises(ValueError):
        BVComponent(density="x1")
    with pytest.raises(ValueError):
        BVFunction(())


def test_json_round_trip():
    g = BVFunction((BVComponent(0.5, ((0.25, -1.0),), 2.0, "t^2 + 1"), BVComponent(jump1=1.0)))
    assert BVFunction.from_list(g.to_list()) == g


def test_jump_vectors():
    assert np.array_equal(jump_at_zero_vector(step_at_zero(2)), [1.0, 1.0])
    assert np.array_equal(jump_at_zero_vector(periodic_g(1)), [1.0])
    assert np.array_equal(jump_at_one_vector(periodic_g(1)), [-1.0])
    assert np.array_equal(jump_at_zero_vector(BVFunction((BVComponent(density="1"),))), [0.0])


def test_variation_examples():
    assert tail_variation(step_at_zero(1)) == 0.0
    assert tail_variation(periodic_g(1)) == 1.0
    assert tail_variation(BVFunction((BVComponent(density="1"),))) == pytest.approx(1.0, rel=1e-12)
    assert head_variation(step_at_zero(2)) == pytest.approx(math.sqrt(2))
    assert head_variation(periodic_g(1)) == 1.0
    assert head_variation(BVFunction((BVComponent(density="1", jump1=3.0),))) == pytest.approx(1.0)


def test_variation_matches_partition_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        pg = random_poly_bv(rng)
        assert tail_variation(scalar_g(pg)) == pytest.approx(PolyBV(0, pg.atoms, pg.jump1, pg.density.coef)
                                                             .partition_variation(), abs=1e-6)


def test_vector_variation_groups_atoms_at_one_location():
    g = BVFunction((BVComponent(atoms=((0.5, 3.0),)), BVComponent(atoms=((0.5, 4.0),))))
    assert tail_variation(g) == pytest.approx(5.0)


def test_stieltjes_examples():
    assert stieltjes(traj(lambda s: np.full_like(s, 2.5)), step_at_zero(1))[0] == 2.5
    val = stieltjes(traj(lambda s: s), BVFunction((BVComponent(density="1"),)))[0]
    assert val == pytest.approx(0.5, abs=1e-8)
    phi = traj(lambda s: np.cos(3 * s))
    assert stieltjes(phi, periodic_g(1))[0] == pytest.approx(1.0 - math.cos(3.0), abs=1e-14)


def test_stieltjes_rejects_empty_trajectory():
    with pytest.raises(ValueError):
        stieltjes(np.zeros((0, 1)), step_at_zero(1))


def test_stieltjes_matches_partition_sums():
    rng = np.random.default_rng(5)
    for _ in range(10):
        pg, phi = random_poly_bv(rng), random_poly(rng)
        assert stieltjes(traj(phi), scalar_g(pg))[0] == pytest.approx(partition_sum(phi, pg), abs=1e-6)


def test_batched_values_match_single():
    g = BVFunction((BVComponent(1.0, ((0.3, 2.0),), -0.5, "t"),))
    vals = np.random.default_rng(2).normal(size=(5, 101, 1))
    batch = stieltjes(vals, g)
    for i in range(5):
        assert np.allclose(batch[i], stieltjes(vals[i], g), rtol=0, atol=1e-15)


coef = st.floats(-2, 2, allow_nan=False)


@st.composite
def bv_data(draw, jump0=True):
    n_atoms = draw(st.integers(0, 3))
    locs = sorted(set(draw(st.lists(st.floats(0.01, 0.99), min_size=n_atoms, max_size=n_atoms))))
    atoms = tuple((t, draw(coef)) for t in locs)
    dens = draw(st.lists(coef, min_size=0, max_size=4))
    density = " + ".join(f"({c!r})*t^{i}" for i, c in enumerate(dens)) or None
    return BVComponent(draw(coef) if jump0 else 0.0, atoms, draw(coef), density)


@given(bv_data(), st.lists(coef, min_size=1, max_size=4))
def test_decomposition_identity(comp, pcoef):
    g = BVFunction((comp,))
    phi = traj(np.polynomial.Polynomial(pcoef))
    lhs = stieltjes(phi, g)
    rhs = phi.values[0] * jump_at_zero_vector(g) + stieltjes(phi, g.without_jump_at_zero())
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12)


@given(bv_data(jump0=False), bv_data(jump0=False), st.lists(coef, min_size=1, max_size=4),
       st.lists(coef, min_size=1, max_size=4))
def test_variation_bound(c1, c2, p1, p2):
    g = BVFunction((c1, c2))
    phi = traj(lambda s: np.column_stack([np.polynomial.Polynomial(p1)(s), np.polynomial.Polynomial(p2)(s)]))
    assert np.linalg.norm(stieltjes(phi, g)) <= phi.sup_norm() * tail_variation(g) + 1e-8


@given(bv_data(), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity_in_phi(comp, a, b):
    g = BVFunction((comp,))
    phi, psi = traj(np.sin), traj(lambda s: s ** 3 - 1)
    combo = Trajectory(GRID, a * phi.values + b * psi.values)
    expected = a * stieltjes(phi, g) + b * stieltjes(psi, g)
    assert np.allclose(stieltjes(combo, g), expected, rtol=0, atol=1e-10)
