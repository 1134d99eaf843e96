# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Conjugate gradients on a CSR matrix minus a scalar shift."""
import numpy as np
from libc.math cimport sqrt

ctypedef fused scalar:
    double
    double complex


cdef inline double _abs2(scalar v) noexcept nogil:
    if scalar is double:
        return v * v
    else:
        return v.real * v.real + v.imag * v.imag


cdef inline double _rdot(scalar a, scalar b) noexcept nogil:
    # real part of conj(a) * b
    if scalar is double:
        return a * b
    else:
        return a.real * b.real + a.imag * b.imag


cdef void _spmv(const long long[::1] indptr, const long long[::1] indices,
                const scalar[::1] data, const scalar[::1] x, scalar[::1] y,
                double shift) noexcept nogil:
    cdef Py_ssize_t i, k, n = x.shape[0]
    cdef scalar acc
    for i in range(n):
        acc = -shift * x[i]
        for k in range(indptr[i], indptr[i + 1]):
            acc = acc + data[k] * x[indices[k]]
        y[i] = acc


def spmv(const long long[::1] indptr, const long long[::1] indices,
         const scalar[::1] data, const scalar[::1] x, double shift=0.0):
    out = np.empty(x.shape[0], dtype=np.asarray(data).dtype)
    cdef scalar[::1] y = out
    with nogil:
        _spmv(indptr, indices, data, x, y, shift)
    return out


def cg(const long long[::1] indptr, const long long[::1] indices,
       const scalar[::1] data, const scalar[::1] b, scalar[::1] x,
       double shift, double rtol, long maxiter):
    """Solve (A - shift I) x = b in place.  Returns (iterations, info, relres).

    info: 0 converged, 1 iteration limit, -1 non-positive curvature.
    """
    cdef Py_ssize_t i, n = b.shape[0]
    cdef long it = 0
    cdef int info = 1
    cdef double bb = 0.0, rr = 0.0, rr_new, pq, alpha, beta, tol2
    dt = np.asarray(data).dtype
    cdef scalar[::1] r = np.empty(n, dtype=dt)
    cdef scalar[::1] p = np.empty(n, dtype=dt)
    cdef scalar[::1] q = np.empty(n, dtype=dt)
    for i in range(n):
        bb += _abs2(b[i])
    if bb == 0.0:
        for i in range(n):
            x[i] = 0
        return 0, 0, 0.0
    with nogil:
        tol2 = rtol * rtol * bb
        _spmv(indptr, indices, data, x, q, shift)
        for i in range(n):
            r[i] = b[i] - q[i]
            p[i] = r[i]
            rr += _abs2(r[i])
        while True:
            if rr <= tol2:
                info = 0
                break
            if it >= maxiter:
                info = 1
                break
            _spmv(indptr, indices, data, p, q, shift)
            pq = 0.0
            for i in range(n):
                pq += _rdot(p[i], q[i])
            if not pq > 0.0:
                info = -1
                break
            alpha = rr / pq
            rr_new = 0.0
            for i in range(n):
                x[i] = x[i] + alpha * p[i]
                r[i] = r[i] - alpha * q[i]
                rr_new += _abs2(r[i])
            beta = rr_new / rr
            rr = rr_new
            for i in range(n):
                p[i] = r[i] + beta * p[i]
            it += 1
    return it, info, sqrt(rr / bb)
