import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from hartogs_pq import kernels
from hartogs_pq.geometry import build_grid, disk
from hartogs_pq.kernels import CSRKernel, IndefiniteSystemError
from hartogs_pq.spectral import assemble_magnetic_form, laplacian
from hartogs_pq.weights import PolynomialWeight

compiled = pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")


def _lap():
    return laplacian(build_grid(disk(1.0), 1 / 16))


def _magnetic():
    g = build_grid(disk(1.0), 1 / 16)
    return assemble_magnetic_form(g, PolynomialWeight(terms=((2, 0, 1.0), (0, 2, 1.0))), 2).normalized()


@pytest.mark.parametrize("backend", ["python", None])
def test_solve_matches_direct(backend):
    A = _lap()
    b = np.random.default_rng(0).standard_normal(A.shape[0])
    x, it, ok = CSRKernel(A, backend).solve(b, rtol=1e-12)
    assert ok and it > 0
    want = sp.linalg.spsolve(A.tocsc(), b)
    assert np.allclose(x, want, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("backend", ["python", None])
def test_zero_rhs(backend):
    A = _lap()
    x, it, ok = CSRKernel(A, backend).solve(np.zeros(A.shape[0]))
    assert ok and it == 0 and not x.any()


@pytest.mark.parametrize("backend", ["python", None])
def test_indefinite_shift_detected(backend):
    A = _lap()
    b = np.random.default_rng(1).standard_normal(A.shape[0])
    with pytest.raises(IndefiniteSystemError, match="indefinite"):
        CSRKernel(A, backend).solve(b, shift=1e4, rtol=1e-12)


@compiled
@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-5.0, 5.0))
def test_backend_equivalence_real(seed, shift):
    A = _lap()
    b = np.random.default_rng(seed).standard_normal(A.shape[0])
    kc, kp = CSRKernel(A), CSRKernel(A, "python")
    assert np.allclose(kc.matvec(b, shift), kp.matvec(b, shift), rtol=1e-14, atol=1e-12)
    xc, itc, _ = kc.solve(b, shift=shift, rtol=1e-10)
    xp, itp, _ = kp.solve(b, shift=shift, rtol=1e-10)
    assert abs(itc - itp) <= 2
    assert np.allclose(xc, xp, rtol=1e-8, atol=1e-10)


@compiled
@given(seed=st.integers(0, 2**32 - 1))
def test_backend_equivalence_complex(seed):
    B = _magnetic()
    rng = np.random.default_rng(seed)
    b = rng.standard_normal(B.shape[0]) + 1j * rng.standard_normal(B.shape[0])
    kc, kp = CSRKernel(B), CSRKernel(B, "python")
    assert np.allclose(kc.matvec(b), B @ b, rtol=1e-13, atol=1e-10)
    xc, _, okc = kc.solve(b, rtol=1e-10)
    xp, _, okp = kp.solve(b, rtol=1e-10)
    assert okc and okp
    assert np.allclose(xc, xp, rtol=1e-7, atol=1e-9)


def test_iteration_limit_reported():
    A = _lap()
    b = np.random.default_rng(2).standard_normal(A.shape[0])
    _, it, ok = CSRKernel(A).solve(b, rtol=1e-14, maxiter=3)
    assert it == 3 and not ok
