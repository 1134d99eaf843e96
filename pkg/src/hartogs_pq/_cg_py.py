"""Pure numpy version of the compiled CG kernel (same algorithm, same contract)."""
import numpy as np
import scipy.sparse as sp


def _matrix(indptr, indices, data):
    n = len(indptr) - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def spmv(indptr, indices, data, x, shift=0.0):
    return _matrix(indptr, indices, data) @ x - shift * x


def cg(indptr, indices, data, b, x, shift, rtol, maxiter):
    A = _matrix(indptr, indices, data)
    bb = np.vdot(b, b).real
    if bb == 0.0:
        x[:] = 0
        return 0, 0, 0.0
    tol2 = rtol * rtol * bb
    r = b - (A @ x - shift * x)
    p = r.copy()
    rr = np.vdot(r, r).real
    it = 0
    while True:
        if rr <= tol2:
            info = 0
            break
        if it >= maxiter:
            info = 1
            break
        q = A @ p - shift * p
        pq = np.vdot(p, q).real
        if not pq > 0.0:
            info = -1
            break
        alpha = rr / pq
        x += alpha * p
        r -= alpha * q
        rr_new = np.vdot(r, r).real
        p *= rr_new / rr
        p += r
        rr = rr_new
        it += 1
    return it, info, float(np.sqrt(rr / bb))
