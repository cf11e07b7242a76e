import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonlocal_bvp.coincidence import (Escaped, Problem, boundary_residual, coincidence_residual, kpq_n,
                                      nonlocal_value, shooting, shooting_batch)
from nonlocal_bvp.degree import BoundaryMap
from nonlocal_bvp.measure import BVComponent, BVFunction, uniform_grid
from nonlocal_bvp.ode import Trajectory, VectorField
from nonlocal_bvp.problems import periodic_problem, step_at_zero
from oracles import exp_oracle

GRID = uniform_grid(1000)


def exp_problem():
    return Problem(VectorField.from_strings(["-x1"]), step_at_zero(1), BoundaryMap.from_strings(["u1 - 0.5"]))


def const(c, k=1):
    return Trajectory(GRID, np.tile(np.atleast_1d(c), (len(GRID), 1)).astype(float))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        Problem(VectorField.from_strings(["-x1"]), step_at_zero(2), BoundaryMap.identity(1))


def test_nonlocal_value_examples():
    p = periodic_problem(["0"])
    assert nonlocal_value(const(3.0), p)[0] == 0.0
    x = Trajectory(GRID, exp_oracle(GRID)[:, None])
    assert nonlocal_value(x, exp_problem())[0] == pytest.approx(0.5, abs=1e-9)
    assert nonlocal_value(const(0.0), exp_problem())[0] == 0.0


def test_boundary_residual_examples():
    ident = Problem(VectorField.from_strings(["0"]), step_at_zero(1), BoundaryMap.identity(1))
    assert boundary_residual(const(1.7), ident)[0] == 1.7
    x = Trajectory(GRID, exp_oracle(GRID)[:, None])
    assert abs(boundary_residual(x, exp_problem())[0]) <= 1e-9
    sq = Problem(VectorField.from_strings(["0"]), step_at_zero(1), BoundaryMap.from_strings(["u1^2"]))
    assert boundary_residual(const(0.0), sq)[0] == 0.0


def test_kpq_n_examples():
    x = Trajectory(GRID, exp_oracle(GRID)[:, None])
    k = kpq_n(x, exp_problem())
    assert np.max(np.abs(k.values - (x.values - x.values[0]))) <= 1e-6
    zero = Problem(VectorField.from_strings(["0"]), step_at_zero(1), BoundaryMap.from_strings(["0"]))
    assert np.all(kpq_n(const(2.0), zero).values == 0.0)
    alpha = Problem(VectorField.from_strings(["0"]), step_at_zero(1), BoundaryMap.from_strings(["0.7"]))
    assert np.allclose(kpq_n(const(2.0), alpha).values[:, 0], 0.7 * GRID, rtol=0, atol=1e-15)


def test_coincidence_residual_examples():
    x = Trajectory(GRID, exp_oracle(GRID)[:, None])
    assert coincidence_residual(x, exp_problem()) <= 1e-6
    zero = Problem(VectorField.from_strings(["0"]), step_at_zero(1), BoundaryMap.from_strings(["0"]))
    assert coincidence_residual(const(4.0), zero) == 0.0
    assert coincidence_residual(Trajectory(GRID, GRID[:, None]), zero) == 1.0


def test_shooting_examples():
    p = exp_problem()
    assert abs(shooting([0.5], 1.0, p)[0]) <= 1e-9
    for c in (-1.0, 0.0, 0.3, 2.0):
        assert shooting([c], 1.0, p)[0] == pytest.approx(c - 0.5, abs=1e-10)
    per = periodic_problem(["-x1 + cos(2*pi*t)"])
    assert abs(shooting([0.4], 1e-6, per)[0]) < 1e-5


def test_shooting_consistency_with_scaled_field():
    p = Problem(VectorField.from_strings(["-x1 + sin(5*t)", "x1*x2"]), BVFunction((
        BVComponent(1.0, ((0.4, 0.5),), 0.0, "t"), BVComponent(2.0, (), -1.0, None))),
        BoundaryMap.from_strings(["u1 + u2^2", "u2 - 1"]))
    for lam in (0.1, 0.5, 1.0):
        scaled = Problem(p.f.scaled(lam), p.g, p.h)
        assert np.allclose(shooting([0.3, -0.2], lam, p), shooting([0.3, -0.2], 1.0, scaled), rtol=0, atol=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_step_at_zero_sees_only_initial_value(a, b):
    p = Problem(VectorField.from_strings(["x2*cos(t)", "-x1^3"]), step_at_zero(2),
                BoundaryMap.from_strings(["u1^2 - u2", "sin(u1)"]))
    expected = p.h.evaluate([a, b])
    assert np.allclose(shooting([a, b], 1.0, p), expected, rtol=0, atol=1e-10)


def test_escape_is_reported():
    p = Problem(VectorField.from_strings(["x1^2"]), step_at_zero(1), BoundaryMap.identity(1))
    with pytest.raises(Escaped) as info:
        shooting([5.0], 1.0, p)
    assert 0.1 < info.value.t <= 0.25
    S, _, escaped = shooting_batch(p, np.array([[5.0], [0.1]]))
    assert np.isnan(S[0, 0]) and math.isfinite(S[1, 0]) and math.isnan(escaped[1])


def test_lambda_out_of_range():
    with pytest.raises(ValueError):
        shooting([0.0], 0.0, exp_problem())
