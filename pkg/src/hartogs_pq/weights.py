"""Closed-form weight families phi(x, y).

Every weight carries an additive ``offset`` kept apart from the shape part,
so that ``w.shifted(c)`` changes nothing the discretisation sees after
normalisation.  All derivatives are analytic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class WeightSpec:
    """Base class.  Subclasses implement ``_shape(x, y)``."""

    family = "abstract"
    offset = 0.0
    subharmonic = True

    def _shape(self, x, y):
        raise NotImplementedError

    def shape(self, x, y):
        """(phi - offset, phi_x, phi_y, laplacian) on broadcast arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self._shape(x, y)

    def evaluate(self, x, y):
        p, px, py, lap = self.shape(x, y)
        return p + self.offset, px, py, lap

    def phi(self, x, y):
        return self.evaluate(x, y)[0]

    def laplacian(self, x, y):
        return self.shape(x, y)[3]

    def phi_z(self, x, y):
        _, px, py, _ = self.shape(x, y)
        return 0.5 * (px - 1j * py)

    def shifted(self, c):
        return replace(self, offset=self.offset + float(c))

    @property
    def coefficients(self):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


def _as_terms(terms):
    out = {}
    for t in terms:
        # accepts (p, q, c) and the normalised ((p, q), c)
        (p, q), c = (t[0], t[1]) if len(t) == 2 else ((t[0], t[1]), t[2])
        p, q = int(p), int(q)
        if p < 0 or q < 0:
            raise ValueError(f"negative exponent in polynomial term {t!r}")
        out[(p, q)] = out.get((p, q), 0.0) + float(c)
    return tuple(sorted((k, v) for k, v in out.items() if v != 0.0))


@dataclass(frozen=True)
class PolynomialWeight(WeightSpec):
    """phi = offset + sum c * x**p * y**q.  A constant term is folded into offset."""

    terms: tuple = ()
    offset: float = 0.0
    subharmonic: bool = True
    family = "polynomial"

    def __post_init__(self):
        terms = _as_terms(self.terms)
        const = sum(c for (p, q), c in terms if p == 0 and q == 0)
        object.__setattr__(self, "terms", tuple(t for t in terms if t[0] != (0, 0)))
        object.__setattr__(self, "offset", float(self.offset) + const)

    def _shape(self, x, y):
        shape = np.broadcast(x, y).shape
        phi = np.zeros(shape)
        px = np.zeros(shape)
        py = np.zeros(shape)
        lap = np.zeros(shape)
        for (p, q), c in self.terms:
            phi = phi + c * x**p * y**q
            if p >= 1:
                px = px + c * p * x ** (p - 1) * y**q
            if q >= 1:
                py = py + c * q * x**p * y ** (q - 1)
            if p >= 2:
                lap = lap + c * p * (p - 1) * x ** (p - 2) * y**q
            if q >= 2:
                lap = lap + c * q * (q - 1) * x**p * y ** (q - 2)
        return phi, px, py, lap

    @property
    def coefficients(self):
        return tuple(c for _, c in self.terms) + (self.offset,)

    def to_dict(self):
        return {"family": self.family,
                "terms": [[p, q, c] for (p, q), c in self.terms],
                "offset": self.offset}


@dataclass(frozen=True)
class HarmonicLinearWeight(WeightSpec):
    """phi = a*x + b*y + offset, i.e. Re((a - i b) z)."""

    a: float = 1.0
    b: float = 0.0
    offset: float = 0.0
    subharmonic: bool = True
    family = "harmonic-linear"

    def _shape(self, x, y):
        shape = np.broadcast(x, y).shape
        phi = self.a * x + self.b * y
        return (np.broadcast_to(phi, shape).astype(float),
                np.full(shape, float(self.a)), np.full(shape, float(self.b)),
                np.zeros(shape))

    @property
    def coefficients(self):
        return (self.a, self.b, self.offset)

    def to_dict(self):
        return {"family": self.family, "a": self.a, "b": self.b, "offset": self.offset}


@dataclass(frozen=True)
class RadialFlatWeight(WeightSpec):
    """Radial weight with Laplacian coef * max(0, r - radius)**2 about ``center``.

    phi vanishes identically on the closed disk r <= radius and is C^3 across it.
    """

    coef: float = 1.0
    radius: float = 0.5
    center: tuple = (0.0, 0.0)
    offset: float = 0.0
    subharmonic: bool = True
    family = "radial-flat"

    def __post_init__(self):
        if self.coef < 0 or self.radius < 0:
            raise ValueError("radial-flat weight needs coef >= 0 and radius >= 0")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def _shape(self, x, y):
        c, rho = self.coef, self.radius
        dx = x - self.center[0]
        dy = y - self.center[1]
        r = np.hypot(dx, dy)
        t = np.maximum(r - rho, 0.0)
        lap = c * t**2
        dphi = c * (t**4 / 4 + rho * t**3 / 3)
        with np.errstate(divide="ignore", invalid="ignore"):
            dphi = np.where(r > 0, dphi / np.where(r > 0, r, 1.0), 0.0)
            ux = np.where(r > 0, dx / np.where(r > 0, r, 1.0), 0.0)
            uy = np.where(r > 0, dy / np.where(r > 0, r, 1.0), 0.0)
        phi = t**4 / 16 + rho * t**3 / 36 - rho**2 * t**2 / 24 + rho**3 * t / 12
        if rho > 0:
            phi = phi - rho**4 / 12 * np.log1p(t / rho)
        return c * phi, dphi * ux, dphi * uy, lap

    @property
    def coefficients(self):
        return (self.coef, self.radius, self.center[0], self.center[1], self.offset)

    def to_dict(self):
        return {"family": self.family, "coef": self.coef, "radius": self.radius,
                "center": list(self.center), "offset": self.offset}


@dataclass(frozen=True)
class TermTableWeight(WeightSpec):
    """Sum of other weights; offsets of the parts are pooled into ``offset``."""

    terms: tuple = ()
    offset: float = 0.0
    subharmonic: bool = True
    family = "table-of-terms"

    def __post_init__(self):
        if not self.terms:
            raise ValueError("table-of-terms weight needs at least one term")
        pooled = float(self.offset) + sum(t.offset for t in self.terms)
        object.__setattr__(self, "terms", tuple(replace(t, offset=0.0) for t in self.terms))
        object.__setattr__(self, "offset", pooled)
        object.__setattr__(self, "subharmonic", all(t.subharmonic for t in self.terms))

    def _shape(self, x, y):
        parts = [t._shape(x, y) for t in self.terms]
        return tuple(sum(p[k] for p in parts) for k in range(4))

    @property
    def coefficients(self):
        return tuple(c for t in self.terms for c in t.coefficients) + (self.offset,)

    def to_dict(self):
        return {"family": self.family, "terms": [t.to_dict() for t in self.terms],
                "offset": self.offset}


FAMILIES = {
    "polynomial": PolynomialWeight,
    "harmonic-linear": HarmonicLinearWeight,
    "radial-flat": RadialFlatWeight,
    "table-of-terms": TermTableWeight,
}


def weight_from_dict(d):
    d = dict(d)
    family = d.pop("family", None)
    if family not in FAMILIES:
        raise ValueError(f"unknown weight family {family!r}")
    if family == "polynomial":
        return PolynomialWeight(terms=tuple(tuple(t) for t in d.get("terms", ())),
                                offset=d.get("offset", 0.0))
    if family == "harmonic-linear":
        return HarmonicLinearWeight(a=d.get("a", 1.0), b=d.get("b", 0.0),
                                    offset=d.get("offset", 0.0))
    if family == "radial-flat":
        return RadialFlatWeight(coef=d.get("coef", 1.0), radius=d.get("radius", 0.5),
                                center=tuple(d.get("center", (0.0, 0.0))),
                                offset=d.get("offset", 0.0))
    return TermTableWeight(terms=tuple(weight_from_dict(t) for t in d["terms"]),
                           offset=d.get("offset", 0.0))


def eval_weight(weight, point):
    """(phi, phi_x, phi_y, laplacian) at a single point as floats."""
    x, y = point
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"non-finite point {point!r}")
    return tuple(float(v) for v in weight.evaluate(x, y))


def zero_set(weight, grid, tau):
    """Interior-node mask where |laplacian(phi)| <= tau."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    lap = weight.laplacian(grid.X, grid.Y)
    return grid.mask & (np.abs(lap) <= tau)
