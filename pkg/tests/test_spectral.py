import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import assume, given, strategies as st

from hartogs_pq.diagnostics import dirichlet_eigenvalue
from hartogs_pq.geometry import Grid, build_grid, disk, rectangle
from hartogs_pq.spectral import (DynamicRangeError, SolverParams, assemble_magnetic_form,
                                 assemble_nonmagnetic, laplacian, magnetic_eigenvalue,
                                 nonmagnetic_eigenvalue, rayleigh_quotient,
                                 smallest_eigenvalue, sweep_spectra)
from hartogs_pq.weights import (HarmonicLinearWeight, PolynomialWeight, RadialFlatWeight,
                                TermTableWeight)

QUAD = PolynomialWeight(terms=((2, 0, 1.0), (0, 2, 1.0)))
HARM = HarmonicLinearWeight()
FLAT = RadialFlatWeight(1.0, 0.5)
MIXED = TermTableWeight(terms=(QUAD, HarmonicLinearWeight(0.3, -0.7)))
WEIGHTS = [QUAD, HARM, FLAT, MIXED, PolynomialWeight(terms=((0, 4, 150.0),))]


def _five_point(grid):
    """Independent dense assembly of the 5-point Dirichlet Laplacian."""
    n = grid.n
    L = np.zeros((n, n))
    idx = grid.index
    for (i, j), k in np.ndenumerate(idx):
        if k < 0:
            continue
        L[k, k] = 4 / grid.h**2
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            kk = idx[i + di, j + dj]
            if kk >= 0:
                L[k, kk] = -1 / grid.h**2
    return L


def test_laplacian_matches_hand_assembly():
    g = build_grid(disk(1.0), 1 / 8)
    assert np.array_equal(laplacian(g).toarray(), _five_point(g))


def test_single_node_grid():
    # the unit square at h = 1/2 (below the 4h guard of build_grid), built by hand
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    g = Grid(0.5, 0.0, 0.0, mask, np.where(mask, 0.5, 0.0), rectangle(0, 1, 0, 1))
    A = assemble_nonmagnetic(g, HARM, 0).toarray()
    assert A.tolist() == [[16.0]]


@pytest.mark.parametrize("weight", WEIGHTS)
def test_m_zero_is_plain_laplacian(weight):
    g = build_grid(disk(0.7), 1 / 16)
    assert (assemble_nonmagnetic(g, weight, 0) != laplacian(g)).nnz == 0


def test_quadratic_m3_adds_twelve():
    g = build_grid(disk(1.0), 1 / 16)
    diff = (assemble_nonmagnetic(g, QUAD, 3) - laplacian(g)).toarray()
    assert np.array_equal(diff, 12 * np.eye(g.n))


def test_negative_m_rejected():
    g = build_grid(disk(1.0), 1 / 8)
    with pytest.raises(ValueError):
        assemble_nonmagnetic(g, QUAD, -1)
    with pytest.raises(ValueError):
        assemble_magnetic_form(g, QUAD, -1)


def test_dynamic_range_guard():
    g = build_grid(disk(1.0), 1 / 32)
    with pytest.raises(DynamicRangeError, match="dynamic range exceeded"):
        assemble_magnetic_form(g, QUAD, 400)


def _dz_form(grid, u):
    """sum 4 |D^z u|^2 with forward differences and zero padding."""
    U = grid.to_array(u, fill=0.0).astype(complex)
    P = np.zeros((U.shape[0] + 1, U.shape[1] + 1), dtype=complex)
    P[:-1, :-1] = U
    dx = (P[1:, :-1] - P[:-1, :-1]) / grid.h
    dy = (P[:-1, 1:] - P[:-1, :-1]) / grid.h
    return float(np.sum(4 * np.abs(0.5 * (dx - 1j * dy)) ** 2))


def test_m_zero_pencil_is_unweighted(rng):
    g = build_grid(disk(1.0), 1 / 16)
    P = assemble_magnetic_form(g, QUAD, 0)
    assert not P.a_rows.any() and not P.a_nodes.any()
    assert np.array_equal(P.mass, np.ones(g.n))
    u = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    rq = rayleigh_quotient(u, P)
    assert rq == pytest.approx(_dz_form(g, u) / np.vdot(u, u).real, rel=1e-12)


def test_m_zero_real_fields_give_dirichlet_form(rng):
    g = build_grid(disk(1.0), 1 / 16)
    P = assemble_magnetic_form(g, HARM, 0)
    u = rng.standard_normal(g.n)
    L = laplacian(g)
    assert rayleigh_quotient(u, P) == pytest.approx(u @ (L @ u) / (u @ u), rel=1e-12)


def test_constant_weight_pencil_is_m_zero_pencil():
    g = build_grid(disk(1.0), 1 / 16)
    const = PolynomialWeight(terms=((0, 0, 2.0),))
    assert assemble_magnetic_form(g, const, 5).equal_entries(assemble_magnetic_form(g, QUAD, 0))


def test_shift_by_one_re_z():
    g = build_grid(disk(1.0), 1 / 16)
    a = assemble_magnetic_form(g, HARM.shifted(1.0), 3)
    b = assemble_magnetic_form(g, HARM, 3)
    assert a.equal_entries(b)
    assert (a.normalized() != b.normalized()).nnz == 0


@given(c=st.floats(-50, 50, allow_nan=False), m=st.integers(0, 12),
       k=st.integers(0, len(WEIGHTS) - 1))
def test_scaling_invariance(c, m, k):
    g = build_grid(disk(0.7), 1 / 16)
    w = WEIGHTS[k]
    try:
        b = assemble_magnetic_form(g, w, m)
    except DynamicRangeError:
        # the guard sees the same offset-free weight
        with pytest.raises(DynamicRangeError):
            assemble_magnetic_form(g, w.shifted(c), m)
        return
    assert assemble_magnetic_form(g, w.shifted(c), m).equal_entries(b)


def test_scaling_invariance_bit_identical_eigenvalue():
    g = build_grid(disk(0.7), 1 / 32)
    ref = magnetic_eigenvalue(g, QUAD, 4).value
    for c in (-3.0, 1.0, math.log(7)):
        assert magnetic_eigenvalue(g, QUAD.shifted(c), 4).value == ref


@given(seed=st.integers(0, 10**6), m=st.integers(0, 16), k=st.integers(0, len(WEIGHTS) - 1))
def test_pencil_positivity(seed, m, k):
    g = build_grid(disk(0.7), 1 / 16)
    try:
        P = assemble_magnetic_form(g, WEIGHTS[k], m)
    except DynamicRangeError:
        assume(False)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    B = P.normalized()
    assert np.vdot(u, B @ u).real >= -1e-12 * abs(B).sum() * np.vdot(u, u).real
    assert rayleigh_quotient(u, P) >= 0


def test_square_exact_discrete_eigenvalue():
    h = 1 / 32
    res = smallest_eigenvalue(laplacian(build_grid(rectangle(0, 1, 0, 1), h)))
    exact = 8 / h**2 * math.sin(math.pi * h / 2) ** 2
    assert res.converged
    assert abs(res.value - exact) <= 1e-10 * exact


def test_disk_eigenvalues_increase_towards_bessel_limit():
    lams = [smallest_eigenvalue(laplacian(build_grid(disk(1.0), h))).value
            for h in (1 / 16, 1 / 32, 1 / 64)]
    assert lams[0] < lams[1] < lams[2] < 2.404825557695773**2


def test_constant_diagonal_shift_machine_precision():
    g = build_grid(disk(1.0), 1 / 32)
    L = laplacian(g)
    a = smallest_eigenvalue(L).value
    b = smallest_eigenvalue(assemble_nonmagnetic(g, QUAD, 3), shift=12.0).value
    assert abs(b - (a + 12)) <= 64 * np.finfo(float).eps * (a + 12)


def test_certificate_recomputed_independently():
    g = build_grid(disk(0.7), 1 / 32)
    P = assemble_magnetic_form(g, QUAD, 6)
    res = magnetic_eigenvalue(g, QUAD, 6)
    assert res.converged
    A, Mdiag = P.A, P.mass
    v = res.vector
    r = (A @ v - res.value * Mdiag * v) / np.sqrt(Mdiag)
    assert np.linalg.norm(r) / np.linalg.norm((A @ v) / np.sqrt(Mdiag)) <= 1.01 * 1e-8


def test_matrix_and_diagonal_mass_path_agrees_with_pencil():
    g = build_grid(disk(0.7), 1 / 16)
    P = assemble_magnetic_form(g, QUAD, 2)
    a = smallest_eigenvalue(P, block_size=3, inner="lu", shift="auto").value
    b = smallest_eigenvalue(P.A, P.M, block_size=3, inner="lu", shift="auto").value
    assert b == pytest.approx(a, rel=1e-9)


def test_rayleigh_quotient_bounds(rng):
    g = build_grid(disk(0.7), 1 / 16)
    P = assemble_magnetic_form(g, QUAD, 3)
    res = smallest_eigenvalue(P, block_size=3, inner="lu", shift="auto")
    assert abs(rayleigh_quotient(res.vector, P) - res.value) <= 1e-8 * res.value
    for _ in range(5):
        u = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
        assert rayleigh_quotient(u, P) >= res.value - 1e-8


def test_rayleigh_quotient_zero_vector():
    g = build_grid(disk(0.7), 1 / 16)
    with pytest.raises(ValueError):
        rayleigh_quotient(np.zeros(g.n), assemble_magnetic_form(g, QUAD, 1))


def test_solver_argument_checks():
    L = laplacian(build_grid(disk(1.0), 1 / 8))
    with pytest.raises(ValueError):
        smallest_eigenvalue(L, tol=0)
    with pytest.raises(ValueError):
        smallest_eigenvalue(L, shift="auto")
    with pytest.raises(ValueError):
        smallest_eigenvalue(L, M=-np.ones(L.shape[0]))


def test_unconverged_is_flagged():
    L = laplacian(build_grid(disk(1.0), 1 / 32))
    res = smallest_eigenvalue(L, max_iter=1, tol=1e-14)
    assert not res.converged and res.iterations == 1


@given(m1=st.integers(0, 20), m2=st.integers(0, 20))
def test_monotone_in_m(m1, m2):
    lo, hi = sorted((m1, m2))
    g = build_grid(disk(0.7), 1 / 16)
    a = nonmagnetic_eigenvalue(g, FLAT, lo).value
    b = nonmagnetic_eigenvalue(g, FLAT, hi).value
    assert b >= a * (1 - 1e-12)


@given(r1=st.floats(0.3, 1.0), r2=st.floats(0.3, 1.0))
def test_domain_monotonicity(r1, r2):
    g = build_grid(disk(1.0), 1 / 16)
    small, big = sorted((r1, r2))
    R = np.hypot(g.X, g.Y)
    lam_small = dirichlet_eigenvalue(g, R < small).value
    lam_big = dirichlet_eigenvalue(g, R < big).value
    assert lam_small >= lam_big * (1 - 1e-12)


def test_diamagnetic_at_coarse_grid():
    g = build_grid(disk(0.7), 1 / 32)
    for w in (QUAD, FLAT):
        for m in (1, 4, 8):
            assert magnetic_eigenvalue(g, w, m).value >= 0.95 * nonmagnetic_eigenvalue(g, w, m).value


def test_sweep_harmonic_unit_disk():
    ms = [0, 1, 2, 4, 8]
    sw = {h: sweep_spectra(disk(1.0), HARM, ms, h, workers=1) for h in (1 / 32, 1 / 64)}
    spread = {}
    for h, s in sw.items():
        l0 = s.column("lambda_nonmagnetic")
        assert np.all(l0 == l0[0])  # constant potential 0: identical operator
        l1 = s.column("lambda_magnetic")
        spread[h] = (l1.max() - l1.min()) / l0[0]
    assert spread[1 / 64] <= 0.02
    assert spread[1 / 64] < spread[1 / 32] / 2  # flattening with h


def test_sweep_quadratic_unit_square():
    sq = rectangle(0, 1, 0, 1)
    s = sweep_spectra(sq, QUAD, [3, 0, 2, 1], 1 / 32, workers=1)
    assert list(s.column("m")) == [0.0, 1.0, 2.0, 3.0]
    lam_d = smallest_eigenvalue(laplacian(build_grid(sq, 1 / 32))).value
    for r in s.rows:
        assert abs(r.lambda_nonmagnetic - (lam_d + 4 * r.m)) <= 1e-12 * (lam_d + 4 * r.m)


def test_flat_disk_ceiling():
    h = 1 / 32
    ceiling = smallest_eigenvalue(laplacian(build_grid(disk(0.5), h))).value
    g = build_grid(disk(0.7), h)
    for m in (0, 4, 16, 32):
        assert nonmagnetic_eigenvalue(g, FLAT, m).value <= ceiling


def test_sweep_rejects_bad_m():
    with pytest.raises(ValueError):
        sweep_spectra(disk(1.0), QUAD, [], 1 / 8)
    with pytest.raises(ValueError):
        sweep_spectra(disk(1.0), QUAD, [-1], 1 / 8)


def test_sweep_is_deterministic():
    a = sweep_spectra(disk(0.7), QUAD, [0, 2], 1 / 16, SolverParams(seed=3), workers=1)
    b = sweep_spectra(disk(0.7), QUAD, [0, 2], 1 / 16, SolverParams(seed=3), workers=1)
    assert a.rows == b.rows


def test_sweep_parallel_matches_serial(monkeypatch):
    monkeypatch.setenv("PQ_WORKERS", "2")
    a = sweep_spectra(disk(0.7), QUAD, [0, 1, 2], 1 / 16, workers=2)
    b = sweep_spectra(disk(0.7), QUAD, [0, 1, 2], 1 / 16, workers=1)
    assert a.rows == b.rows


def test_sparse_input_formats_accepted():
    L = laplacian(build_grid(disk(1.0), 1 / 16))
    a = smallest_eigenvalue(L).value
    assert smallest_eigenvalue(sp.coo_matrix(L)).value == pytest.approx(a, rel=1e-12)
