"""Hartogs domains {sum |w_k|^2 < exp(-2 phi(z))} and their Levi form.

Defining function rho = sum |w_k|^2 - exp(-2 phi(z)).  Its complex Hessian is
diagonal, and the complex tangent space at a boundary point is the kernel of
the row  d rho = (2 exp(-2 phi) phi_z, conj(w_1), ..., conj(w_n)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

TAU_LEVI = 1e-8
TAU_LAP = 1e-10
STRICT = "strictly_pseudoconvex"
WEAK = "weakly_pseudoconvex"


class DegenerateBoundaryPoint(ValueError):
    pass


class NotTangentError(ValueError):
    pass


@dataclass(frozen=True)
class HartogsDomainSpec:
    base: object
    weight: object
    n: int = 1

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("fiber dimension n must be >= 1")
        if not getattr(self.weight, "subharmonic", False):
            raise ValueError("weight must be declared subharmonic")


@dataclass(frozen=True)
class HartogsBoundaryPoint:
    z: complex
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "w", np.atleast_1d(np.asarray(self.w, dtype=complex)))

    @property
    def n(self):
        return len(self.w)

    def check(self, weight, rtol=1e-12):
        target = np.exp(-2 * _phi(weight, self.z))
        if abs(np.vdot(self.w, self.w).real - target) > rtol * target:
            raise ValueError("point is not on the boundary: sum |w|^2 != exp(-2 phi)")


@dataclass(frozen=True)
class LeviReport:
    point: HartogsBoundaryPoint
    hessian: np.ndarray
    tangent_basis: np.ndarray  # (n+1, n), orthonormal columns
    levi_matrix: np.ndarray
    min_levi_eigenvalue: float
    classification: str
    laplacian: float

    def to_record(self):
        return {"z": [self.point.z.real, self.point.z.imag],
                "w": [[c.real, c.imag] for c in self.point.w],
                "laplacian": self.laplacian,
                "min_levi_eigenvalue": self.min_levi_eigenvalue,
                "classification": self.classification}


def _phi(weight, z):
    return float(weight.phi(z.real, z.imag))


def _local(weight, z):
    phi, px, py, lap = weight.evaluate(z.real, z.imag)
    return float(phi), complex(0.5 * (px - 1j * py)), float(lap)


def fiber_radius(weight, z):
    z = complex(z)
    return float(np.exp(-_phi(weight, z)))


def defining_hessian(weight, z, n):
    z = complex(z)
    phi, phiz, lap = _local(weight, z)
    e = np.exp(-2 * phi)
    H = np.eye(n + 1, dtype=complex)
    H[0, 0] = -4 * e * abs(phiz) ** 2 + 2 * e * lap / 4
    return H


def d_rho(point, weight):
    phi, phiz, _ = _local(weight, point.z)
    return np.concatenate([[2 * np.exp(-2 * phi) * phiz], np.conj(point.w)])


def complex_tangent_basis(point, weight):
    g = d_rho(point, weight)
    if not np.any(g):
        raise DegenerateBoundaryPoint("degenerate boundary point: d rho vanishes")
    # tangent iff sum g_k v_k = 0
    return la.null_space(g[None, :])


def _check_tangent(point, weight, v, tol=1e-10):
    g = d_rho(point, weight)
    if abs(np.dot(g, v)) > tol * max(1.0, np.linalg.norm(g) * np.linalg.norm(v)):
        raise NotTangentError("vector is not in the complex tangent space")


def levi_form(point, weight, v):
    v = np.asarray(v, dtype=complex)
    if v.shape != (point.n + 1,):
        raise ValueError(f"expected a vector of length {point.n + 1}")
    _check_tangent(point, weight, v)
    H = defining_hessian(weight, point.z, point.n)
    return float(np.real(np.vdot(v, H @ v)))


def levi_form_expanded(point, weight, xi):
    """Levi form of the tangent vector with fibre part ``xi`` (phi_z != 0).

    Written as the Cauchy-Schwarz defect of (w, xi) plus the curvature term.
    """
    phi, phiz, lap = _local(weight, point.z)
    if phiz == 0:
        raise ValueError("expanded form needs phi_z != 0")
    xi = np.asarray(xi, dtype=complex)
    w = point.w
    S = np.dot(np.conj(w), xi)
    defect = -abs(S) ** 2 / np.vdot(w, w).real + np.vdot(xi, xi).real
    curvature = 0.5 * np.exp(2 * phi) * (lap / 4) * abs(S) ** 2 / abs(phiz) ** 2
    return float(defect + curvature)


def tangent_from_fiber(point, weight, xi):
    """Complete a fibre vector xi to the tangent vector (tau, xi)."""
    phi, phiz, _ = _local(weight, point.z)
    if phiz == 0:
        raise ValueError("tau is free when phi_z = 0")
    xi = np.asarray(xi, dtype=complex)
    tau = -np.dot(np.conj(point.w), xi) / (2 * np.exp(-2 * phi) * phiz)
    return np.concatenate([[tau], xi])


def equality_vector(point, weight, c=1.0):
    """Tangent vector with xi = c*w, the equality case of Cauchy-Schwarz."""
    return tangent_from_fiber(point, weight, c * point.w)


def classify_point(point, weight, tau_levi=TAU_LEVI):
    B = complex_tangent_basis(point, weight)
    H = defining_hessian(weight, point.z, point.n)
    L = B.conj().T @ H @ B
    L = (L + L.conj().T) / 2
    lo = float(la.eigvalsh(L)[0])
    lap = float(weight.laplacian(point.z.real, point.z.imag))
    return LeviReport(point, H, B, L, lo, WEAK if lo <= tau_levi else STRICT, lap)


def predicate_weak(weight, z, tau_lap=TAU_LAP):
    z = complex(z)
    return abs(float(weight.laplacian(z.real, z.imag))) <= tau_lap


def sample_boundary_points(domain, weight, n, count, seed=0, margin=0.05):
    """z uniform on K = {d(z, boundary) >= margin}, w uniform on the fibre sphere."""
    rng = np.random.default_rng(seed)
    bb = domain.extent()
    out = []
    for _ in range(1000):
        if len(out) >= count:
            break
        k = max(64, 2 * (count - len(out)))
        x = rng.uniform(bb[0], bb[1], k)
        y = rng.uniform(bb[2], bb[3], k)
        keep = domain.signed_distance(x, y) <= -margin
        g = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
        for xi, yi, gi in zip(x[keep], y[keep], g[keep]):
            z = complex(xi, yi)
            r = fiber_radius(weight, z)
            out.append(HartogsBoundaryPoint(z, r * gi / np.linalg.norm(gi)))
            if len(out) == count:
                break
    if len(out) < count:
        raise ValueError("empty truncation: margin too large for the domain")
    return out
