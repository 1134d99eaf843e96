"""Discrete operators and their smallest eigenvalues.

Non-magnetic operator: 5-point Dirichlet Laplacian plus the diagonal potential
m * lap(phi).  Magnetic operator: the weighted form

    4 sum_r W_r |Dz u(r)|^2   over   sum_p M_p |u_p|^2,

with Dz = (Dx - i Dy)/2 built from forward differences.  A row r exists for
every lattice node whose stencil {r, r+x, r+y} meets the interior, so that
for W = 1 and real u the form is exactly the 5-point Dirichlet form.  W_r is
exp(2 m phi~) at the stencil cell centre and M_p is exp(2 m phi~) at nodes,
where phi~ = phi - min phi (offset dropped first, so constant shifts of phi
give identical arrays).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .geometry import Grid, ScalarField, build_grid
from .kernels import CSRKernel, IndefiniteSystemError

MAX_EXPONENT = 700.0
_RESHIFT = 0.1


class DynamicRangeError(OverflowError):
    pass


def laplacian(grid):
    """5-point Dirichlet Laplacian on the interior nodes (CSR, float)."""
    mask, idx, h = grid.mask, grid.index, grid.h
    I, J = np.nonzero(mask)
    N = len(I)
    rows = [np.arange(N)]
    cols = [np.arange(N)]
    vals = [np.full(N, 4.0 / h**2)]
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        k = idx[I + di, J + dj]
        ok = k >= 0
        rows.append(np.nonzero(ok)[0])
        cols.append(k[ok])
        vals.append(np.full(int(ok.sum()), -1.0 / h**2))
    L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    L.sort_indices()
    return L


def assemble_nonmagnetic(grid, weight, m):
    if m < 0:
        raise ValueError("m must be >= 0")
    L = laplacian(grid)
    if m == 0:
        return L
    pot = m * weight.laplacian(grid.X, grid.Y)[grid.mask]
    return (L + sp.diags(pot)).tocsr()


def _stencil_rows(grid):
    """Lattice nodes r whose forward stencil touches an interior node."""
    idx = grid.index
    nx, ny = idx.shape
    I, J = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    I, J = I.ravel(), J.ravel()
    k0, kx, ky = idx[I, J], idx[I + 1, J], idx[I, J + 1]
    keep = (k0 >= 0) | (kx >= 0) | (ky >= 0)
    return I[keep], J[keep], k0[keep], kx[keep], ky[keep]


# Dz coefficients times 2h on the stencil (r, r+x, r+y)
_COEF = (-1 + 1j, 1 + 0j, -1j)


@dataclass(frozen=True, eq=False)
class GeneralizedPencil:
    """A = G* diag(exp(2 a_rows)) G and M = diag(exp(2 a_nodes)).

    G carries the bare stencil (entries (-1+i)/h, 1/h, -i/h); everything
    weighted is derived from the log-weights, so no overflow can occur in
    the scaled operator M^-1/2 A M^-1/2 used by the solver.
    """

    G: sp.csr_matrix
    a_rows: np.ndarray
    a_nodes: np.ndarray

    @property
    def n(self):
        return self.G.shape[1]

    @property
    def mass(self):
        return np.exp(2 * self.a_nodes)

    @property
    def A(self):
        Gw = sp.diags(np.exp(self.a_rows)) @ self.G
        A = (Gw.conj().T @ Gw).tocsr()
        return _hermitian_part(A)

    @property
    def M(self):
        return sp.diags(self.mass).tocsr()

    def weighted_stencil(self, shift=0.0):
        return (sp.diags(np.exp(self.a_rows - shift)) @ self.G).tocsr()

    def normalized(self):
        """Hermitian B = M^-1/2 A M^-1/2 computed in the log domain."""
        G = self.G.tocoo()
        vals = G.data * np.exp(self.a_rows[G.row] - self.a_nodes[G.col])
        Gs = sp.csr_matrix((vals, (G.row, G.col)), shape=G.shape)
        return _hermitian_part((Gs.conj().T @ Gs).tocsr())

    def equal_entries(self, other):
        return (np.array_equal(self.a_rows, other.a_rows)
                and np.array_equal(self.a_nodes, other.a_nodes)
                and _csr_equal(self.G, other.G))


def _hermitian_part(A):
    A = ((A + A.conj().T) * 0.5).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def _csr_equal(A, B):
    A, B = A.tocsr(), B.tocsr()
    return (A.shape == B.shape and np.array_equal(A.indptr, B.indptr)
            and np.array_equal(A.indices, B.indices) and np.array_equal(A.data, B.data))


def assemble_magnetic_form(grid, weight, m):
    if m < 0:
        raise ValueError("m must be >= 0")
    h = grid.h
    I, J, k0, kx, ky = _stencil_rows(grid)
    nr = len(I)
    rows, cols, vals = [], [], []
    for k, c in zip((k0, kx, ky), _COEF):
        ok = k >= 0
        rows.append(np.nonzero(ok)[0])
        cols.append(k[ok])
        vals.append(np.full(int(ok.sum()), c / h))
    G = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nr, grid.n))
    G.sort_indices()
    if m == 0:
        return GeneralizedPencil(G, np.zeros(nr), np.zeros(grid.n))
    xc = grid.x0 + h * (I + 0.5)
    yc = grid.y0 + h * (J + 0.5)
    pts = grid.points
    phi_rows = weight.shape(xc, yc)[0]
    phi_nodes = weight.shape(pts[:, 0], pts[:, 1])[0]
    base = min(phi_rows.min(), phi_nodes.min())
    a_rows = m * (phi_rows - base)
    a_nodes = m * (phi_nodes - base)
    top = 2 * max(a_rows.max(), a_nodes.max())
    if top > MAX_EXPONENT:
        raise DynamicRangeError(
            f"dynamic range exceeded: max 2*m*phi~ = {top:.1f} > {MAX_EXPONENT:g}; "
            "use a smaller m or truncate the domain")
    return GeneralizedPencil(G, a_rows, a_nodes)


def rayleigh_quotient(u, pencil):
    u = np.asarray(getattr(u, "values", u))
    if not np.any(u):
        raise ValueError("Rayleigh quotient of the zero vector")
    top = max(pencil.a_rows.max(), pencil.a_nodes.max())
    num = np.linalg.norm(pencil.weighted_stencil(top) @ u) ** 2
    den = np.sum(np.exp(2 * (pencil.a_nodes - top)) * np.abs(u) ** 2)
    return float(num / den)


@dataclass(frozen=True)
class EigenResult:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int
    converged: bool
    inner_iterations: int = 0


class _CGInner:
    def __init__(self, B, tol):
        self.kernel = CSRKernel(B)
        self.tol = tol
        self.count = 0

    def solve(self, X, theta, sigma, rel):
        rtol = max(0.01 * min(rel, 1.0), 0.01 * self.tol)
        Y = np.empty_like(X)
        for k in range(X.shape[1]):
            gap = theta[k] - sigma
            x0 = X[:, k] / gap if gap > 0 else None
            Y[:, k], it, _ = self.kernel.solve(X[:, k], x0=x0, shift=sigma, rtol=rtol)
            self.count += it
        return Y


class _LUInner:
    def __init__(self, B, tol):
        self.B = B.tocsc()
        self.sigma = None
        self.count = 0

    def solve(self, X, theta, sigma, rel):
        if sigma != self.sigma:
            I = sp.identity(self.B.shape[0], dtype=self.B.dtype, format="csc")
            self.lu = sla.splu((self.B - sigma * I).tocsc(), permc_spec="MMD_AT_PLUS_A",
                               diag_pivot_thresh=0.01, options={"SymmetricMode": True})
            self.sigma = sigma
        self.count += X.shape[1]
        return self.lu.solve(np.ascontiguousarray(X))


def smallest_eigenvalue(A, M=None, tol=1e-8, max_iter=500, seed=0, *, shift=0.0,
                        block_size=1, inner="cg"):
    """Smallest eigenvalue of a Hermitian PSD operator or pencil.

    Block inverse iteration on (B - shift I) with Rayleigh-Ritz, where B is A
    itself or M^-1/2 A M^-1/2.  The defaults (one vector, shift 0, CG inner
    solves) are plain inverse power iteration.  ``shift`` must lie below the
    smallest eigenvalue for CG; with ``inner="lu"`` the value "auto" moves
    the shift up to theta - 2|r| whenever that cuts the distance to the
    current Ritz value tenfold, which keeps near-degenerate ground pairs cheap.

    The reported residual is |B y - lam y| / |B y|, i.e. the pencil residual
    measured in the M^-1 norm.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    scale = None
    if isinstance(A, GeneralizedPencil):
        B = A.normalized()
        scale = np.exp(-A.a_nodes)
    elif M is not None:
        d = M.diagonal() if sp.issparse(M) else np.asarray(M, dtype=float)
        if np.any(d <= 0):
            raise ValueError("mass must be positive")
        scale = 1.0 / np.sqrt(d)
        S = sp.diags(scale)
        B = _hermitian_part(S @ A @ S)
    else:
        B = sp.csr_matrix(A)
    n = B.shape[0]
    auto = isinstance(shift, str)
    if auto and (shift != "auto" or inner != "lu"):
        raise ValueError('shift="auto" requires inner="lu"')
    sigma = 0.0 if auto else float(shift)
    solver = {"cg": _CGInner, "lu": _LUInner}[inner](B, tol)

    p = max(1, min(int(block_size), n))
    rng = np.random.default_rng(seed)
    cplx = np.iscomplexobj(B.data)
    X = rng.standard_normal((n, p))
    if cplx:
        X = X + 1j * rng.standard_normal((n, p))
    X, _ = np.linalg.qr(X)
    it = 0
    while True:
        BX = B @ X
        H = X.conj().T @ BX
        theta, Q = la.eigh((H + H.conj().T) / 2)
        X = X @ Q
        BX = BX @ Q
        x, bx = X[:, 0], BX[:, 0]
        rnorm = np.linalg.norm(bx - theta[0] * x)
        bnorm = np.linalg.norm(bx)
        rel = rnorm / bnorm if bnorm > 0 else 0.0
        if rel <= tol or it >= max_iter:
            break
        if auto:
            cand = theta[0] - 2 * rnorm
            if cand > sigma and theta[0] - cand < _RESHIFT * (theta[0] - sigma):
                sigma = cand
        Y = solver.solve(X, theta, sigma, rel)
        X, _ = np.linalg.qr(Y)
        it += 1
    vec = x if scale is None else scale * x
    return EigenResult(float(theta[0]), vec, float(rel), it, bool(rel <= tol), solver.count)


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-8
    max_iter: int = 500
    seed: int = 0
    magnetic_block: int = 3

    def to_dict(self):
        return {"tol": self.tol, "max_iter": self.max_iter, "seed": self.seed,
                "magnetic_block": self.magnetic_block}


def nonmagnetic_eigenvalue(grid, weight, m, params=SolverParams()):
    A = assemble_nonmagnetic(grid, weight, m)
    # m*min(lap phi) is a certified lower bound: A - sigma I = L + nonneg diagonal
    sigma = 0.0
    if m > 0:
        sigma = m * float(weight.laplacian(grid.X, grid.Y)[grid.mask].min())
    return smallest_eigenvalue(A, tol=params.tol, max_iter=params.max_iter,
                               seed=params.seed, shift=sigma)


def magnetic_eigenvalue(grid, weight, m, params=SolverParams()):
    pencil = assemble_magnetic_form(grid, weight, m)
    return smallest_eigenvalue(pencil, tol=params.tol, max_iter=params.max_iter,
                               seed=params.seed, shift="auto",
                               block_size=params.magnetic_block, inner="lu")


@dataclass(frozen=True)
class SweepRow:
    m: float
    lambda_nonmagnetic: float
    lambda_magnetic: float
    residual_nm: float
    residual_m: float
    iters_nm: int
    iters_m: int
    converged_nm: bool
    converged_m: bool

    @property
    def converged(self):
        return self.converged_nm and self.converged_m


@dataclass(frozen=True)
class SpectralSweep:
    rows: tuple
    h: float
    weight_id: str
    domain_id: str

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])


def _sweep_row(args):
    domain, weight, m, h, params = args
    grid = build_grid(domain, h)
    r0 = nonmagnetic_eigenvalue(grid, weight, m, params)
    r1 = magnetic_eigenvalue(grid, weight, m, params)
    return SweepRow(float(m), r0.value, r1.value, r0.residual, r1.residual,
                    r0.iterations, r1.iterations, r0.converged, r1.converged)


def worker_count(requested=None):
    env = os.environ.get("PQ_WORKERS")
    cap = int(env) if env else (os.cpu_count() or 1)
    n = cap if requested is None else min(int(requested), cap)
    return max(1, n)


def parallel_map(fn, items, workers=None):
    """Ordered map; runs in a process pool when more than one worker is allowed."""
    items = list(items)
    w = min(worker_count(workers), len(items)) if items else 1
    if w <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


def sweep_spectra(domain, weight, m_list, h, params=SolverParams(), workers=None,
                  weight_id="", domain_id=""):
    m_list = [float(m) for m in m_list]
    if not m_list:
        raise ValueError("m_list must be nonempty")
    if any(m < 0 for m in m_list):
        raise ValueError("m values must be nonnegative")
    rows = parallel_map(_sweep_row, [(domain, weight, m, h, params) for m in m_list], workers)
    rows = sorted(rows, key=lambda r: r.m)
    return SpectralSweep(tuple(rows), float(h), weight_id or weight.family,
                         domain_id or domain.name or domain.kind)
