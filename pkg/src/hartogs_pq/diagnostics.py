"""Property (P) proxies and sweep verdicts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import build_grid, shrink_neighborhoods, zero_set
from .kernels import CSRKernel
from .spectral import (SolverParams, assemble_nonmagnetic, laplacian, parallel_map,
                       smallest_eigenvalue)

DIVERGENT = "divergent"
BOUNDED = "bounded"
INCONCLUSIVE = "inconclusive"


def strip_eigenvalue(k, h):
    """Smallest eigenvalue of the 1-D Dirichlet chain with k nodes (second differences / h^2)."""
    return 4.0 / h**2 * math.sin(math.pi / (2 * (k + 1))) ** 2


def containing_strip(mask, h):
    """Best lower bound over the two axis-aligned strips containing ``mask``.

    Returns (bound, nodes_across, axis)."""
    I, J = np.nonzero(mask)
    kx = int(I.max() - I.min() + 1)
    ky = int(J.max() - J.min() + 1)
    k, axis = (ky, "y") if ky <= kx else (kx, "x")
    return strip_eigenvalue(k, h), k, axis


def dirichlet_eigenvalue(grid, mask=None, params=SolverParams()):
    """lambda(U), shifted by the containing-strip bound (a certified lower bound).

    On thin sets the first two eigenvalues are nearly equal in ratio; the shift
    restores a useful convergence rate for inverse iteration."""
    g = grid if mask is None else grid.restrict(mask)
    sigma = containing_strip(g.mask, g.h)[0]
    return smallest_eigenvalue(laplacian(g), tol=params.tol, max_iter=params.max_iter,
                               seed=params.seed, shift=sigma)


def _fit_exponent(widths, lams):
    w = np.asarray(widths, dtype=float)
    lam = np.asarray(lams, dtype=float)
    ok = np.isfinite(lam) & (lam > 0)
    if ok.sum() < 2:
        return float("nan")
    slope = np.polyfit(-np.log(w[ok]), np.log(lam[ok]), 1)[0]
    return float(slope)


@dataclass(frozen=True)
class GrowthReport:
    widths: list
    eigenvalues: list
    strip_bounds: list
    verdict: str
    exponent: float
    note: str = ""
    converged: list = field(default_factory=list)

    def csv_rows(self):
        return [(w, lam, b) for w, lam, b in zip(self.widths, self.eigenvalues, self.strip_bounds)]

    def to_dict(self):
        return {"widths": list(self.widths), "eigenvalues": list(self.eigenvalues),
                "strip_bounds": list(self.strip_bounds), "verdict": self.verdict,
                "exponent": self.exponent, "note": self.note}


def _lam_task(args):
    grid, mask, params = args
    return dirichlet_eigenvalue(grid, mask, params)


def dirichlet_growth_test(weight, domain, widths, h, tau, params=SolverParams(),
                          growth_factor=10.0, bounded_exponent=0.5, workers=1):
    """lambda(U_j) on shrinking neighbourhoods of the zero set of lap(phi).

    divergent: lambda(U_last) > growth_factor * lambda(U_first);
    bounded: the last halving-type step grows like width^-a with a < bounded_exponent;
    otherwise inconclusive.
    """
    grid = build_grid(domain, h)
    Z = zero_set(weight, grid, tau)
    widths = [float(w) for w in widths]
    if not Z.any():
        shrink_neighborhoods(Z, grid, widths)  # validates widths
        k = len(widths)
        return GrowthReport(widths, [math.inf] * k, [math.inf] * k, DIVERGENT, math.inf,
                            "zero set empty; lambda(empty) = +inf by convention", [True] * k)
    masks = shrink_neighborhoods(Z, grid, widths)
    results = parallel_map(_lam_task, [(grid, U, params) for U in masks], workers)
    lams = [r.value for r in results]
    bounds = [containing_strip(U, h)[0] for U in masks]
    if lams[-1] > growth_factor * lams[0]:
        verdict = DIVERGENT
    else:
        local = math.log(lams[-1] / lams[-2]) / math.log(widths[-2] / widths[-1]) \
            if len(lams) > 1 else 0.0
        verdict = BOUNDED if local < bounded_exponent else INCONCLUSIVE
    return GrowthReport(widths, lams, bounds, verdict, _fit_exponent(widths, lams), "",
                        [r.converged for r in results])


@dataclass(frozen=True)
class ComparisonResult:
    passed: bool
    lam: float
    lam0: float

    def __bool__(self):
        return self.passed


def comparison_inequality_check(weight, grid, mask, m, params=SolverParams()):
    """lambda(U) >= lambda0_{m phi}(U) - 1, valid whenever |m lap phi| <= 1 on U."""
    g = grid.restrict(mask)
    pot = m * weight.laplacian(g.X, g.Y)
    bad = g.mask & (np.abs(pot) > 1 + 1e-12)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        x, y = g.x0 + i * g.h, g.y0 + j * g.h
        raise ValueError(f"precondition violated at node ({x:.6g}, {y:.6g}): "
                         f"|m lap phi| = {abs(pot[i, j]):.6g} > 1")
    lam = dirichlet_eigenvalue(g, params=params).value
    A0 = assemble_nonmagnetic(g, weight, m)
    lam0 = smallest_eigenvalue(A0, tol=params.tol, max_iter=params.max_iter,
                               seed=params.seed, shift=float(min(0.0, pot[g.mask].min()))).value
    slack = 10 * params.tol * max(1.0, abs(lam))
    return ComparisonResult(bool(lam >= lam0 - 1 - slack), lam, lam0)


# -- fine interior -----------------------------------------------------------

@dataclass(frozen=True)
class ClosedDisk:
    center: complex
    r: float

    def contains(self, x, y):
        return np.hypot(x - self.center.real, y - self.center.imag) <= self.r


@dataclass(frozen=True)
class Segment:
    a: complex
    b: complex
    thickness: float = 0.0

    def contains(self, x, y):
        from .geometry import _seg_dist
        d = _seg_dist(x, y, self.a.real, self.a.imag, self.b.real, self.b.imag)
        return d <= self.thickness


@dataclass(frozen=True)
class Circle:
    center: complex
    r: float
    thickness: float = 0.0

    def contains(self, x, y):
        return np.abs(np.hypot(x - self.center.real, y - self.center.imag) - self.r) <= self.thickness


@dataclass(frozen=True, eq=False)
class MaskSet:
    """A node mask read as a set: a point belongs if its nearest node does."""

    grid: object
    mask: np.ndarray

    def contains(self, x, y):
        g = self.grid
        i = np.rint((np.asarray(x) - g.x0) / g.h).astype(int)
        j = np.rint((np.asarray(y) - g.y0) / g.h).astype(int)
        ok = (i >= 0) & (i < g.shape[0]) & (j >= 0) & (j < g.shape[1])
        out = np.zeros(i.shape, dtype=bool)
        out[ok] = self.mask[i[ok], j[ok]]
        return out


def _membership(U):
    if callable(getattr(U, "contains", None)):
        return U.contains
    if callable(U):
        return U
    raise TypeError("set must be callable or have a contains(x, y) method")


def arc_density(U, z, r, samples=256):
    """Fraction of ``samples`` equispaced points of the circle |zeta - z| = r lying in U.

    Angles are offset by half a step, so the axis directions are never sampled."""
    if not r > 0:
        raise ValueError("r must be positive")
    if samples < 64:
        raise ValueError("samples must be >= 64")
    z = complex(z)
    t = 2 * np.pi * (np.arange(samples) + 0.5) / samples
    hits = _membership(U)(z.real + r * np.cos(t), z.imag + r * np.sin(t))
    return float(np.count_nonzero(hits)) / samples


@dataclass(frozen=True)
class FineInteriorReport:
    records: list
    threshold: float

    @property
    def empty_fine_interior(self):
        return not any(rec["fine_interior"] for rec in self.records)

    def to_dict(self):
        return {"threshold": self.threshold, "records": self.records,
                "empty_fine_interior": self.empty_fine_interior}


def fine_interior_scan(U, points, radii, samples=256, threshold=0.99):
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    records = []
    for z in points:
        z = complex(z)
        dens = [arc_density(U, z, r, samples) for r in radii]
        tail = dens[-2:]
        records.append({"z": [z.real, z.imag], "radii": radii, "densities": dens,
                        "fine_interior": bool(all(d > threshold for d in tail))})
    return FineInteriorReport(records, threshold)


# -- negative norm -----------------------------------------------------------

class NegativeNormSolver:
    """|f|_{-1} = sup <f, g> / |g|_1 with |g|_1^2 = sum (|grad g|^2 + |g|^2) h^2.

    The Riesz representer solves (L + I) g = f, so |f|_{-1}^2 = h^2 <f, (L+I)^-1 f>."""

    def __init__(self, grid, rtol=1e-13):
        self.grid = grid
        L = laplacian(grid)
        self.A = (L + _identity(L.shape[0])).tocsr()
        self.rtol = rtol
        self._k = {}

    def _kernel(self, cplx):
        if cplx not in self._k:
            self._k[cplx] = CSRKernel(self.A.astype(complex) if cplx else self.A)
        return self._k[cplx]

    def __call__(self, f):
        f = np.asarray(getattr(f, "values", f))
        if not np.all(np.isfinite(f)):
            raise ValueError("f must be finite")
        if not np.any(f):
            return 0.0
        g, _, ok = self._kernel(np.iscomplexobj(f)).solve(f, rtol=self.rtol)
        if not ok:
            raise ArithmeticError("negative-norm solve did not converge")
        return float(math.sqrt(max(np.vdot(g, f).real, 0.0)) * self.grid.h)


def _identity(n):
    import scipy.sparse as sp
    return sp.identity(n, format="csr")


def negative_norm(f, grid):
    return NegativeNormSolver(grid)(f)


def weighted_l2(f, grid):
    f = np.asarray(getattr(f, "values", f))
    return float(np.sqrt(np.sum((grid.interior_distance * np.abs(f)) ** 2)) * grid.h)


def random_field(grid, rng, modes=6):
    """Smooth random field on the grid's domain extent, independent of h."""
    ext = grid.domain.extent() if grid.domain is not None else (
        grid.xs[0], grid.xs[-1], grid.ys[0], grid.ys[-1])
    a = rng.standard_normal((modes, modes))
    pts = grid.points
    u = (pts[:, 0] - ext[0]) / (ext[1] - ext[0])
    v = (pts[:, 1] - ext[2]) / (ext[3] - ext[2])
    k = np.arange(1, modes + 1)
    Su = np.sin(np.pi * np.outer(u, k))
    Sv = np.sin(np.pi * np.outer(v, k))
    return np.einsum("ik,kl,il->i", Su, a, Sv)


def trial_fields(grid, trials, seed=0, modes=6):
    """The constant field followed by ``trials - 1`` seeded random fields."""
    rng = np.random.default_rng(seed)
    out = [np.ones(grid.n)]
    for _ in range(trials - 1):
        out.append(random_field(grid, rng, modes))
    return out


@dataclass(frozen=True)
class NegNormReport:
    neg_norm: float
    weighted_norm: float
    ratio: float
    calibrated_constant: float
    ratios: list
    h: float
    tolerance: float = 1.5

    @property
    def passed(self):
        c = self.calibrated_constant
        return c / self.tolerance <= self.ratio <= self.tolerance * c

    def to_dict(self):
        return {"h": self.h, "neg_norm": self.neg_norm, "weighted_norm": self.weighted_norm,
                "ratio": self.ratio, "calibrated_constant": self.calibrated_constant,
                "ratios": list(self.ratios), "tolerance": self.tolerance, "pass": self.passed}


def hardy_ratios(grid, trials, seed=0):
    nn = NegativeNormSolver(grid)
    out = []
    for f in trial_fields(grid, trials, seed):
        out.append((nn(f), weighted_l2(f, grid)))
    return out


def calibrate_hardy_constant(domain, h_ref, trials=8, seed=0):
    """C_D: the largest trial ratio on the reference (finest) grid."""
    pairs = hardy_ratios(build_grid(domain, h_ref), trials, seed)
    return max(a / b for a, b in pairs)


def hardy_littlewood_check(grid, trials=8, seed=0, calibrated_constant=None, tolerance=1.5):
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pairs = hardy_ratios(grid, trials, seed)
    ratios = [a / b for a, b in pairs]
    k = int(np.argmax(ratios))
    c = ratios[k] if calibrated_constant is None else float(calibrated_constant)
    return NegNormReport(pairs[k][0], pairs[k][1], ratios[k], c, ratios, grid.h, tolerance)


# -- sweep verdict -----------------------------------------------------------

@dataclass(frozen=True)
class DichotomyVerdict:
    verdict: str
    exponent: float
    growth_nonmagnetic: float
    growth_magnetic: float
    range_ratio: float
    rows_used: int
    ceiling: float = None
    below_ceiling: bool = None

    def to_dict(self):
        return dict(self.__dict__)


def dichotomy_report(sweep, growth_factor=10.0, bounded_ratio=1.1, ceiling=None):
    rows = list(sweep.rows)
    if len(rows) < 4:
        raise ValueError("dichotomy report needs at least 4 sweep rows")
    rows = [r for r in rows if r.converged]
    if not rows:
        raise ValueError("all sweep rows unconverged")
    rows.sort(key=lambda r: r.m)
    lo, hi = rows[0], rows[-1]
    l0 = np.array([r.lambda_nonmagnetic for r in rows])
    g0 = hi.lambda_nonmagnetic / lo.lambda_nonmagnetic
    g1 = hi.lambda_magnetic / lo.lambda_magnetic
    rr = float(l0.max() / l0.min())
    if g0 > growth_factor and g1 > growth_factor:
        verdict = DIVERGENT
    elif rr < bounded_ratio:
        verdict = BOUNDED
    else:
        verdict = INCONCLUSIVE
    ms = np.array([r.m for r in rows])
    inc = l0 - lo.lambda_nonmagnetic
    ok = (ms > lo.m) & (inc > 1e-9 * abs(lo.lambda_nonmagnetic))
    expo = float(np.polyfit(np.log(ms[ok] - lo.m), np.log(inc[ok]), 1)[0]) if ok.sum() >= 2 else 0.0
    below = None if ceiling is None else bool(np.all(l0 <= ceiling))
    return DichotomyVerdict(verdict, expo, float(g0), float(g1), rr, len(rows),
                            None if ceiling is None else float(ceiling), below)
