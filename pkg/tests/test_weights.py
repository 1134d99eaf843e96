import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from hartogs_pq.geometry import build_grid, disk
from hartogs_pq.weights import (HarmonicLinearWeight, PolynomialWeight, RadialFlatWeight,
                                TermTableWeight, eval_weight, weight_from_dict, zero_set)

QUAD = PolynomialWeight(terms=((2, 0, 1.0), (0, 2, 1.0)))
x, y = sp.symbols("x y", real=True)


def test_quadratic_at_one_one():
    assert eval_weight(QUAD, (1, 1)) == (2.0, 2.0, 2.0, 4.0)


def test_re_z_at_three_minus_two():
    assert eval_weight(HarmonicLinearWeight(), (3, -2)) == (3.0, 1.0, 0.0, 0.0)


def test_radial_flat_inside_zone():
    w = RadialFlatWeight(coef=1.0, radius=0.5)
    phi, px, py, lap = eval_weight(w, (0.25, 0.0))
    assert (phi, px, py, lap) == (0.0, 0.0, 0.0, 0.0)


def test_non_finite_point_rejected():
    with pytest.raises(ValueError):
        eval_weight(QUAD, (math.nan, 0.0))


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        PolynomialWeight(terms=((-1, 0, 1.0),))


def test_constant_term_becomes_offset():
    w = PolynomialWeight(terms=((0, 0, 2.5), (2, 0, 1.0)))
    assert w.offset == 2.5
    assert w.phi(1.0, 0.0) == 3.5


def test_shifted_keeps_shape_bits():
    w = QUAD.shifted(math.log(7))
    X = np.linspace(-1, 1, 11)
    for a, b in zip(w.shape(X, X), QUAD.shape(X, X)):
        assert np.array_equal(a, b)


def test_dict_round_trip():
    for w in (QUAD, HarmonicLinearWeight(2.0, -1.0), RadialFlatWeight(3.0, 0.4, (0.1, 0.2)),
              TermTableWeight(terms=(QUAD, HarmonicLinearWeight()))):
        assert weight_from_dict(w.to_dict()) == w


def test_unknown_family():
    with pytest.raises(ValueError, match="unknown weight family"):
        weight_from_dict({"family": "spline"})


def test_term_table_is_sum():
    w = TermTableWeight(terms=(QUAD, HarmonicLinearWeight(0.0, 1.0)))
    got = eval_weight(w, (0.3, -0.4))
    a, b = eval_weight(QUAD, (0.3, -0.4)), eval_weight(HarmonicLinearWeight(0.0, 1.0), (0.3, -0.4))
    assert np.allclose(got, np.add(a, b), rtol=0, atol=1e-15)


@st.composite
def polynomials(draw):
    k = draw(st.integers(1, 4))
    return tuple((draw(st.integers(0, 4)), draw(st.integers(0, 4)),
                  draw(st.floats(-3, 3, allow_nan=False).filter(lambda c: abs(c) > 1e-3)))
                 for _ in range(k))


@given(terms=polynomials(), seed=st.integers(0, 10**6))
def test_polynomial_exact_against_sympy(terms, seed):
    w = PolynomialWeight(terms=terms)
    expr = sum(sp.Float(c) * x**p * y**q for p, q, c in terms)
    lap = sp.diff(expr, x, 2) + sp.diff(expr, y, 2)
    fs = [sp.lambdify((x, y), e) for e in (expr, sp.diff(expr, x), sp.diff(expr, y), lap)]
    rng = np.random.default_rng(seed)
    for px, py in rng.uniform(-1.5, 1.5, (20, 2)):
        got = eval_weight(w, (px, py))
        want = [float(f(px, py)) for f in fs]
        scale = 1 + sum(abs(c) for _, _, c in terms) * 1.5**8 * 16
        assert np.allclose(got, want, rtol=0, atol=64 * np.finfo(float).eps * scale)


def test_radial_flat_closed_form_against_sympy():
    r, s, t = sp.symbols("r s t", positive=True)
    c, rho = sp.Rational(3, 2), sp.Rational(1, 2)
    # (r phi')' = r c (r - rho)^2 with phi(rho) = phi'(rho) = 0
    dphi = sp.integrate(s * c * (s - rho) ** 2, (s, rho, r)) / r
    phi = sp.integrate(dphi.subs(r, t), (t, rho, r))
    w = RadialFlatWeight(coef=1.5, radius=0.5)
    for rv in (0.55, 0.7, 1.0, 1.9):
        for ang in (0.0, 0.9, 2.5):
            px, py = rv * math.cos(ang), rv * math.sin(ang)
            got = eval_weight(w, (px, py))
            ph = float(phi.subs(r, rv))
            dp = float(dphi.subs(r, rv))
            assert got[0] == pytest.approx(ph, rel=1e-12, abs=1e-15)
            assert got[1] == pytest.approx(dp * math.cos(ang), rel=1e-12, abs=1e-15)
            assert got[2] == pytest.approx(dp * math.sin(ang), rel=1e-12, abs=1e-15)
            assert got[3] == pytest.approx(1.5 * (rv - 0.5) ** 2, rel=1e-12)


def test_radial_flat_laplacian_by_finite_differences():
    w = RadialFlatWeight(coef=2.0, radius=0.3, center=(0.1, -0.2))
    e = 1e-4
    for px, py in [(0.7, 0.1), (-0.5, 0.4), (0.2, -0.9)]:
        fd = (w.phi(px + e, py) + w.phi(px - e, py) + w.phi(px, py + e) + w.phi(px, py - e)
              - 4 * w.phi(px, py)) / e**2
        assert fd == pytest.approx(float(w.laplacian(px, py)), rel=1e-5)


def test_zero_set_examples():
    g = build_grid(disk(1.0), 1 / 16)
    assert not zero_set(QUAD, g, 1.0).any()
    assert np.array_equal(zero_set(HarmonicLinearWeight(), g, 0.0), g.mask)
    g2 = build_grid(disk(2.0), 1 / 16)
    Z = zero_set(RadialFlatWeight(1.0, 0.5), g2, 0.0)
    assert np.array_equal(Z, g2.mask & (np.hypot(g2.X, g2.Y) <= 0.5))


def test_zero_set_negative_tau():
    g = build_grid(disk(1.0), 1 / 8)
    with pytest.raises(ValueError):
        zero_set(QUAD, g, -1.0)
