import math

import numpy as np
import pytest

from nonlocal_bvp.degree import (BoundaryMap, BoundaryVanishes, DegreeResult, degree, product_degree,
                                 winding_number)
from oracles import frozen, winding_oracle


def bm(*texts):
    return BoundaryMap.from_strings(texts)


def test_one_dimensional():
    assert degree(bm("u1"), 1.0) == DegreeResult(1, "sign-1d", True, 1.0)
    assert degree(bm("u1^2"), 1.0).value == 0
    assert degree(bm("0.5 - u1"), 1.0).value == -1
    assert degree(bm("u1 - 2"), 1.0).value == 0


def test_complex_square_against_oracle():
    h = bm("u1^2 - u2^2", "2*u1*u2")
    res = degree(h, 1.0)
    oracle = winding_oracle(lambda a, b: (a * a - b * b, 2 * a * b), 1.0)
    assert res.value == round(oracle) == frozen()["z2_winding"]
    assert res.method == "winding-2d" and res.certified


def test_complex_cube_and_conjugate():
    assert degree(bm("u1^3 - 3*u1*u2^2", "3*u1^2*u2 - u2^3"), 2.0).value == 3
    assert degree(bm("u1", "-u2"), 1.0).value == -1


def test_random_planar_polynomials_match_oracle():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 20:
        a = rng.integers(-3, 4, size=6).astype(float)
        b = rng.integers(-3, 4, size=6).astype(float)
        terms = ["1", "u1", "u2", "u1^2", "u1*u2", "u2^2"]
        h = bm(" + ".join(f"({c})*{t}" for c, t in zip(a, terms)),
               " + ".join(f"({c})*{t}" for c, t in zip(b, terms)))

        def raw(x, y):
            basis = [np.ones_like(x), x, y, x * x, x * y, y * y]
            return sum(c * v for c, v in zip(a, basis)), sum(c * v for c, v in zip(b, basis))

        th = np.linspace(0, 2 * np.pi, 10_000)
        p, q = raw(np.cos(th), np.sin(th))
        if np.min(np.hypot(p, q)) <= 0.1:
            continue
        assert degree(h, 1.0).value == round(winding_oracle(raw, 1.0))
        checked += 1


@pytest.mark.parametrize("s", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_homotopy_to_rotation(s):
    th = 2.0
    c, sn = math.cos(th), math.sin(th)
    h = bm(f"(1-{s})*u1 + {s}*({c}*u1 - {sn}*u2)", f"(1-{s})*u2 + {s}*({sn}*u1 + {c}*u2)")
    assert degree(h, 1.0).value == 1


@pytest.mark.parametrize("a", [0.5, 2.0, 3.0])
def test_scaling_invariance(a):
    h = bm("u1^2 - u2^2 - 0.1", "2*u1*u2")
    scaled = bm(f"({a}*u1)^2 - ({a}*u2)^2 - 0.1", f"2*{a}*u1*{a}*u2")
    assert degree(h, 1.0).value == degree(scaled, 1.0 / a).value == 2


def test_boundary_zero_is_reported():
    with pytest.raises(BoundaryVanishes):
        degree(bm("u1 - 1"), 1.0)
    with pytest.raises(BoundaryVanishes) as info:
        degree(bm("u1 - 1", "u2"), 1.0)
    assert info.value.point == pytest.approx([1.0, 0.0])


def test_winding_refines_fast_maps():
    # z^8 in real and imaginary parts; 16 initial samples put every increment at ±π, forcing bisection
    value, min_norm, residual = winding_number(bm("u1^8 - 28*u1^6*u2^2 + 70*u1^4*u2^4 - 28*u1^2*u2^6 + u2^8",
                                                  "8*u1^7*u2 - 56*u1^5*u2^3 + 56*u1^3*u2^5 - 8*u1*u2^7"), 1.0, initial=16)
    assert value == 8 and residual < 0.01


def test_higher_dimensions_are_uncertified():
    res = degree(bm("u1", "u2", "u3"), 1.0)
    assert res.value == 1 and res.method == "root-count-nd" and not res.certified
    assert degree(bm("u1", "u2", "-u3"), 1.0).value == -1
    assert degree(bm("u1^2 + u2^2 + u3^2 + 1", "u2", "u3"), 1.0).value == 0


def test_product_degree():
    assert product_degree(bm("u1"), bm("u1"), 1.0).value == 1
    assert product_degree(bm("u1"), bm("u1^3"), 1.0).value == 1
    assert product_degree(bm("u1^2"), bm("-u1"), 1.0).value == 0
    mixed = product_degree(bm("u1"), bm("u1", "u2", "u3"), 1.0)
    assert mixed.method == "root-count-nd" and not mixed.certified


def test_product_degree_randomized_pairs():
    rng = np.random.default_rng(8)
    for _ in range(10):
        r1, r2 = rng.uniform(-2, 2, 2)
        s1, s2 = rng.choice([-1.0, 1.0], 2)
        h1, h2 = bm(f"{s1}*(u1 - {r1})"), bm(f"{s2}*(u1 - {r2})^3")
        prod = product_degree(h1, h2, 1.0)
        assert prod.value == degree(h1, 1.0).value * degree(h2, 1.0).value
        expected = (s1 if abs(r1) < 1 else 0) * (s2 if abs(r2) < 1 else 0)
        assert prod.value == expected


def test_result_round_trip():
    r = DegreeResult(2, "winding-2d", True, 0.25)
    assert DegreeResult.from_dict(r.to_dict()) == r


def test_boundary_map_rejects_foreign_variables():
    with pytest.raises(ValueError):
        bm("u2")
