import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import unitary_group

from hartogs_pq.geometry import disk
from hartogs_pq.hartogs import (STRICT, WEAK, DegenerateBoundaryPoint, HartogsBoundaryPoint,
                                HartogsDomainSpec, NotTangentError, classify_point,
                                complex_tangent_basis, d_rho, defining_hessian,
                                equality_vector, fiber_radius, levi_form, levi_form_expanded,
                                predicate_weak, sample_boundary_points, tangent_from_fiber)
from hartogs_pq.weights import HarmonicLinearWeight, PolynomialWeight, RadialFlatWeight

QUAD = PolynomialWeight(terms=((2, 0, 1.0), (0, 2, 1.0)))
ZERO = PolynomialWeight(terms=())
HARM = HarmonicLinearWeight()
FLAT = RadialFlatWeight(1.0, 0.5)


def _point(weight, z, direction):
    d = np.asarray(direction, dtype=complex)
    return HartogsBoundaryPoint(z, fiber_radius(weight, z) * d / np.linalg.norm(d))


def test_fiber_radius_examples():
    assert fiber_radius(ZERO, 0.3 - 0.2j) == 1.0
    assert fiber_radius(QUAD, 0) == 1.0
    assert fiber_radius(HARM, 1) == pytest.approx(math.exp(-1), rel=1e-15)


def test_hessian_quadratic_origin():
    H = defining_hessian(QUAD, 0, 2)
    assert np.array_equal(H, np.diag([2, 1, 1]).astype(complex))


def test_hessian_quadratic_at_one():
    H = defining_hessian(QUAD, 1, 1)
    assert np.allclose(H, np.diag([-2 * math.exp(-2), 1]), rtol=1e-15, atol=0)


@pytest.mark.parametrize("z", [0.3 + 0.1j, -1.2 + 2j])
def test_hessian_re_z(z):
    H = defining_hessian(HARM, z, 1)
    assert np.allclose(H, np.diag([-math.exp(-2 * z.real), 1]), rtol=1e-15, atol=0)


def test_tangent_basis_when_phi_z_vanishes():
    p = HartogsBoundaryPoint(0, [1.0, 0.0])
    B = complex_tangent_basis(p, QUAD)
    assert B.shape == (3, 2)
    P = B @ B.conj().T  # projector onto the span
    for v in ([1, 0, 0], [0, 0, 1]):
        assert np.allclose(P @ v, v, atol=1e-14)
    assert np.allclose(P @ [0, 1, 0], 0, atol=1e-14)


def test_tangent_basis_single_vector_form():
    p = _point(QUAD, 0.4 - 0.3j, [0.6 + 0.8j])
    B = complex_tangent_basis(p, QUAD)
    assert B.shape == (2, 1)
    phi = QUAD.phi(0.4, -0.3)
    phiz = complex(QUAD.phi_z(0.4, -0.3))
    want = np.array([-np.conj(p.w[0]) / (2 * math.exp(-2 * phi) * phiz), 1])
    v = B[:, 0] / B[1, 0]
    assert np.allclose(v, want, rtol=1e-13)


@given(seed=st.integers(0, 10**6), n=st.integers(1, 4))
def test_basis_is_tangent(seed, n):
    rng = np.random.default_rng(seed)
    z = complex(*rng.uniform(-0.6, 0.6, 2))
    for w in (QUAD, HARM, FLAT):
        p = _point(w, z, rng.standard_normal(n) + 1j * rng.standard_normal(n))
        B = complex_tangent_basis(p, w)
        g = d_rho(p, w)
        assert np.abs(g @ B).max() <= 1e-12 * max(1.0, np.linalg.norm(g))


def test_degenerate_point():
    with pytest.raises(DegenerateBoundaryPoint):
        complex_tangent_basis(HartogsBoundaryPoint(0, [0.0]), QUAD)


def test_levi_equality_case_vanishes():
    # real w: xi = c * w coincides with xi_k / conj(w_k) all equal
    p = _point(HARM, 0.2 + 0.1j, [0.6, 0.8])
    for c in (1.0, -2.5, 0.3j):
        v = equality_vector(p, HARM, c)
        assert abs(levi_form(p, HARM, v)) <= 1e-12 * np.vdot(v, v).real


def test_levi_equality_case_complex_fibre():
    p = _point(HARM, -0.3j, [0.6j, 0.8 * np.exp(0.7j)])
    v = equality_vector(p, HARM, 2.0)
    assert abs(levi_form(p, HARM, v)) <= 1e-12 * np.vdot(v, v).real
    other = tangent_from_fiber(p, HARM, [1.0, 0.0])
    assert levi_form(p, HARM, other) > 1e-3
    conj_w = tangent_from_fiber(p, HARM, 2.0 * np.conj(p.w))
    assert levi_form(p, HARM, conj_w) > 1e-3


def test_levi_quadratic_origin():
    p = HartogsBoundaryPoint(0, [1.0, 0.0])
    assert levi_form(p, QUAD, [1, 0, 0]) == 2.0
    assert levi_form(p, QUAD, [0, 0, 0]) == 0.0


def test_levi_rejects_non_tangent():
    p = HartogsBoundaryPoint(0, [1.0, 0.0])
    with pytest.raises(NotTangentError):
        levi_form(p, QUAD, [0, 1, 0])
    with pytest.raises(ValueError):
        levi_form(p, QUAD, [1, 0])


@given(seed=st.integers(0, 10**6), n=st.integers(1, 3))
def test_levi_matches_expanded_form(seed, n):
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.55, 0.9) * np.exp(2j * np.pi * rng.random())  # phi_z != 0 for all three
    for w in (QUAD, HARM, FLAT):
        p = _point(w, z, rng.standard_normal(n) + 1j * rng.standard_normal(n))
        xi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v = tangent_from_fiber(p, w, xi)
        s = np.vdot(v, v).real  # compare on unit tangent vectors
        assert levi_form(p, w, v) / s == pytest.approx(levi_form_expanded(p, w, xi) / s,
                                                       abs=1e-10)


def test_classification_examples():
    z = 0.2 - 0.1j
    assert classify_point(_point(QUAD, z, [1, 1j]), QUAD).classification == STRICT
    assert classify_point(_point(HARM, z, [1, 1j]), HARM).classification == WEAK
    assert classify_point(_point(FLAT, 0.25, [1]), FLAT).classification == WEAK
    assert classify_point(_point(FLAT, 1.0, [1]), FLAT).classification == STRICT


def test_report_shapes_and_record():
    rep = classify_point(_point(QUAD, 0.1, [1, 2, 3]), QUAD)
    assert rep.tangent_basis.shape == (4, 3)
    assert np.allclose(rep.levi_matrix, rep.levi_matrix.conj().T)
    assert rep.to_record()["classification"] == STRICT


@given(seed=st.integers(0, 10**6), n=st.integers(1, 4))
def test_fiber_rotation_invariance(seed, n):
    rng = np.random.default_rng(seed)
    z = complex(*rng.uniform(-0.5, 0.5, 2))
    U = unitary_group.rvs(n, random_state=seed) if n > 1 else np.array([[np.exp(1j * seed)]])
    for w in (QUAD, HARM, FLAT):
        p = _point(w, z, rng.standard_normal(n) + 1j * rng.standard_normal(n))
        q = HartogsBoundaryPoint(p.z, U @ p.w)
        a, b = classify_point(p, w), classify_point(q, w)
        assert a.classification == b.classification
        assert a.min_levi_eigenvalue == pytest.approx(b.min_levi_eigenvalue, abs=1e-12)


@pytest.mark.parametrize("weight", [QUAD, HARM, FLAT])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_classification_agrees_with_laplacian(weight, n):
    pts = sample_boundary_points(disk(0.9), weight, n, 200, seed=n)
    for p in pts:
        p.check(weight)
        rep = classify_point(p, weight)
        assert rep.min_levi_eigenvalue >= -1e-10
        assert (rep.classification == WEAK) == predicate_weak(weight, p.z)


def test_sampling_respects_margin():
    pts = sample_boundary_points(disk(1.0), QUAD, 2, 100, seed=0, margin=0.3)
    assert max(abs(p.z) for p in pts) <= 0.7
    with pytest.raises(ValueError, match="empty truncation"):
        sample_boundary_points(disk(1.0), QUAD, 1, 5, margin=1.5)


def test_domain_spec_checks():
    HartogsDomainSpec(disk(1.0), QUAD, 2)
    with pytest.raises(ValueError):
        HartogsDomainSpec(disk(1.0), QUAD, 0)


def test_point_check():
    p = HartogsBoundaryPoint(0.5, [0.1])
    with pytest.raises(ValueError, match="not on the boundary"):
        p.check(QUAD)
