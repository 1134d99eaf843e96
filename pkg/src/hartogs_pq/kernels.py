"""Backend selection for the CG kernel.

The compiled module is used when it imports; set PQ_PURE_PYTHON=1 to force
the numpy fallback.
"""
import os

import numpy as np

from . import _cg_py

BACKEND = "python"
_impl = _cg_py
if os.environ.get("PQ_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _cg as _impl  # noqa: F811
        BACKEND = "compiled"
    except ImportError:
        _impl = _cg_py


class IndefiniteSystemError(ArithmeticError):
    pass


def _csr_parts(A):
    A = A.tocsr()
    dtype = np.complex128 if np.iscomplexobj(A.data) else np.float64
    return (np.ascontiguousarray(A.indptr, dtype=np.int64),
            np.ascontiguousarray(A.indices, dtype=np.int64),
            np.ascontiguousarray(A.data, dtype=dtype), dtype)


class CSRKernel:
    """Holds one matrix in kernel layout so repeated solves skip conversion."""

    def __init__(self, A, backend=None):
        self.indptr, self.indices, self.data, self.dtype = _csr_parts(A)
        self.n = A.shape[0]
        self.impl = {"python": _cg_py, None: _impl}.get(backend)
        if self.impl is None:
            from . import _cg
            self.impl = _cg

    def matvec(self, x, shift=0.0):
        x = np.ascontiguousarray(x, dtype=self.dtype)
        return self.impl.spmv(self.indptr, self.indices, self.data, x, float(shift))

    def solve(self, b, x0=None, shift=0.0, rtol=1e-10, maxiter=None):
        """CG on (A - shift I) x = b.  Returns (x, iterations, converged)."""
        b = np.ascontiguousarray(b, dtype=self.dtype)
        x = np.zeros(self.n, dtype=self.dtype) if x0 is None else \
            np.array(x0, dtype=self.dtype, copy=True, order="C")
        maxiter = 20 * self.n if maxiter is None else int(maxiter)
        it, info, _ = self.impl.cg(self.indptr, self.indices, self.data, b, x,
                                   float(shift), float(rtol), maxiter)
        if info < 0:
            raise IndefiniteSystemError(
                "indefinite system: CG met non-positive curvature (shift above the spectrum bottom?)")
        return x, it, info == 0


def cg_solve(A, b, x0=None, shift=0.0, rtol=1e-10, maxiter=None):
    return CSRKernel(A).solve(b, x0=x0, shift=shift, rtol=rtol, maxiter=maxiter)
