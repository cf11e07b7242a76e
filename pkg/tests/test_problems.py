
import numpy as np
import pytest

from nonlocal_bvp.certifier import standing_assumptions
from nonlocal_bvp.coincidence import Problem
from nonlocal_bvp.degree import BoundaryMap
from nonlocal_bvp.measure import (BVComponent, BVFunction, jump_at_zero_vector, stieltjes, uniform_grid)
from nonlocal_bvp.ode import Trajectory, VectorField
from nonlocal_bvp.problems import (SecondOrderSpec, periodic_problem, problem_P,
                                   reduce_second_order, resonance_problem, step_at_zero, time_reverse)
from nonlocal_bvp.solver import solve_direct
from oracles import frozen, second_order_solution


def second_order_oracle():
    return SecondOrderSpec(("-y1",), ("u1",), ("v1 - 1",), step_at_zero(1), step_at_zero(1))


def test_second_order_reduction_solves_oracle():
    p = reduce_second_order(second_order_oracle())
    assert p.k == 2 and p.split == 1
    sol = solve_direct(p, 2.0)[0]
    x, y = second_order_solution(sol.trajectory.grid)
    assert np.max(np.abs(sol.trajectory.values[:, 0] - x)) <= 1e-6
    assert np.max(np.abs(sol.trajectory.values[:, 1] - y)) <= 1e-6
    assert sol.trajectory.values[-1, 0] == pytest.approx(frozen()["second_order_x1"], abs=1e-7)


def test_trivial_and_dimension_audit():
    p = reduce_second_order(SecondOrderSpec(("0",), ("u1",), ("v1",), step_at_zero(1), step_at_zero(1)))
    sol = solve_direct(p, 1.0)[0]
    assert np.max(np.abs(sol.trajectory.values)) <= 1e-12
    spec = SecondOrderSpec(("x1", "y2", "t"), ("u1", "u2", "u3"), ("v1", "v2", "v3"),
                           step_at_zero(3), step_at_zero(3))
    assert reduce_second_order(spec).k == 6


def test_coupled_boundary_maps_are_not_split():
    spec = SecondOrderSpec(("-y1",), ("u1 + v1",), ("v1 - 1",), step_at_zero(1), step_at_zero(1))
    assert reduce_second_order(spec).split is None


def test_spec_validation():
    with pytest.raises(ValueError):
        SecondOrderSpec(("-y1",), ("u1",), ("v1",), step_at_zero(2), step_at_zero(1))
    with pytest.raises(ValueError):
        SecondOrderSpec(("-z1",), ("u1",), ("v1",), step_at_zero(1), step_at_zero(1))


def test_resonance_problem():
    with pytest.raises(ValueError):
        resonance_problem(("-y1",), BVComponent(jump0=1.0))
    g = BVComponent(jump0=1.0, atoms=((0.5, -2.0),), jump1=1.0)
    p = resonance_problem(("-y1",), g)
    assert jump_at_zero_vector(p.g).tolist() == [-1.0, 1.0]
    # x'(t) = c e^{-t}; the condition c (1 - 2 e^{-1/2} + e^{-1}) = 0 forces c = 0
    sol = solve_direct(p, 1.0)[0]
    assert np.linalg.norm(sol.c) <= 1e-7 and sol.boundary_residual_norm <= 1e-7


def test_problem_P():
    p = problem_P(("0",), BVFunction((BVComponent(density="1"),)))
    assert jump_at_zero_vector(p.g).tolist() == [-1.0, -1.0]
    sol = solve_direct(p, 1.0)[0]
    assert sol.boundary_residual_norm <= 1e-9
    q = problem_P(("-y1",), BVFunction((BVComponent(jump0=0.5),)))
    assert q.g.components[1].jump0 == -0.5


def test_periodic_problem():
    p = periodic_problem(["-x1 + cos(2*pi*t)"])
    comp = p.g.components[0]
    assert (comp.jump0, comp.jump1, comp.atoms, comp.density) == (1.0, -1.0, (), None)
    sol = solve_direct(p, 2.0)[0]
    assert sol.c[0] == pytest.approx(frozen()["periodic_c"], abs=1e-7)
    assert abs(sol.trajectory.values[0, 0] - sol.trajectory.values[-1, 0]) <= 1e-7
    sols = solve_direct(periodic_problem(["0"]), 1.0)
    assert all(s.boundary_residual_norm == 0.0 for s in sols)


def test_time_reverse_examples():
    p = Problem(VectorField.from_strings(["-x1"]), step_at_zero(1), BoundaryMap.from_strings(["u1 - 0.5"]))
    q = time_reverse(p)
    assert q.f.evaluate(0.3, [2.0])[0] == 2.0
    assert q.g.components[0].jump1 == 1.0 and q.g.components[0].jump0 == 0.0
    sol = solve_direct(q, 1.0)[0]
    assert np.max(np.abs(sol.trajectory.values[:, 0] - 0.5 * np.exp(sol.trajectory.grid - 1))) <= 1e-8
    assert time_reverse(q).g == p.g


def test_stieltjes_invariance_spot_check():
    grid = uniform_grid(1000)
    phi = Trajectory(grid, grid[:, None])
    q = time_reverse(Problem(VectorField.from_strings(["0"]), step_at_zero(1), BoundaryMap.identity(1)))
    assert stieltjes(phi, step_at_zero(1))[0] == 0.0
    # reversed phi is 1 - t, and the reflected step sits at 1 where 1 - t vanishes
    assert stieltjes(phi.reversed(), q.g)[0] == pytest.approx(0.0, abs=1e-15)


def test_reflection_identity_randomized():
    rng = np.random.default_rng(21)
    grid = uniform_grid(2000)
    for _ in range(20):
        n = int(rng.integers(0, 4))
        atoms = tuple((float(t), float(rng.uniform(-2, 2))) for t in np.sort(rng.uniform(0.05, 0.95, n)))
        dens = " + ".join(f"({float(c)!r})*t^{i}" for i, c in enumerate(rng.uniform(-2, 2, rng.integers(1, 4))))
        g = BVFunction((BVComponent(float(rng.uniform(-2, 2)), atoms, float(rng.uniform(-2, 2)), dens),))
        p = Problem(VectorField.from_strings(["0"]), g, BoundaryMap.identity(1))
        a, b = rng.uniform(-2, 2, 2)
        phi = Trajectory(grid, (np.sin(a * grid) + b * grid ** 2)[:, None])
        lhs = stieltjes(phi.reversed(), time_reverse(p).g)
        assert lhs == pytest.approx(stieltjes(phi, g), abs=1e-8)


def test_standing_for_reversed_periodic():
    assert standing_assumptions(time_reverse(periodic_problem(["0"])).g).ok
