"""Planar domains, lattice grids and boundary distances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .weights import (WeightSpec, PolynomialWeight, HarmonicLinearWeight,
                      RadialFlatWeight, TermTableWeight, eval_weight, zero_set,
                      weight_from_dict)

# points closer than this to the boundary count as "boundary", never interior
BOUNDARY_TOL = 1e-10

KINDS = ("rectangle", "disk", "annulus", "polygon", "raster-mask")


class DegenerateGridError(ValueError):
    pass


class NeighborhoodError(ValueError):
    pass


def _seg_dist(px, py, ax, ay, bx, by):
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    t = np.clip(((px - ax) * vx + (py - ay) * vy) / L2, 0.0, 1.0)
    return np.hypot(px - (ax + t * vx), py - (ay + t * vy))


def _orient(a, b, c):
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def _on_seg(a, b, c):
    return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))


def _segments_cross(p1, p2, q1, q2):
    o1, o2 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    o3, o4 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and _on_seg(p1, p2, q1)) or (o2 == 0 and _on_seg(p1, p2, q2))
            or (o3 == 0 and _on_seg(q1, q2, p1)) or (o4 == 0 and _on_seg(q1, q2, p2)))


def polygon_is_simple(vertices):
    v = [tuple(map(float, p)) for p in vertices]
    n = len(v)
    if n < 3:
        return False
    edges = [(v[i], v[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True


@dataclass(frozen=True)
class RasterMask:
    rows: int
    cols: int
    h: float
    x0: float
    y0: float
    cells: np.ndarray  # (cols, rows) bool, indexed [ix, iy]

    @classmethod
    def read(cls, path):
        lines = Path(path).read_text().splitlines()
        if not lines:
            raise ValueError(f"{path}: empty raster mask file")
        head = lines[0].split()
        if len(head) != 5:
            raise ValueError(f"{path}:1: header must be 'rows cols h x0 y0'")
        rows, cols = int(head[0]), int(head[1])
        h, x0, y0 = (float(s) for s in head[2:])
        if rows < 1 or cols < 1 or not h > 0:
            raise ValueError(f"{path}:1: need rows, cols >= 1 and h > 0")
        body = [ln.strip() for ln in lines[1:] if ln.strip()]
        if len(body) != rows:
            raise ValueError(f"{path}: expected {rows} mask rows, found {len(body)}")
        cells = np.zeros((cols, rows), dtype=bool)
        for k, ln in enumerate(body):
            if len(ln) != cols or set(ln) - {"0", "1"}:
                raise ValueError(f"{path}:{k + 2}: row must be {cols} characters of 0/1")
            # first text row is the top of the picture
            cells[:, rows - 1 - k] = np.frombuffer(ln.encode(), dtype=np.uint8) == ord("1")
        return cls(rows, cols, h, x0, y0, cells)

    def write(self, path):
        out = [f"{self.rows} {self.cols} {self.h!r} {self.x0!r} {self.y0!r}"]
        for k in range(self.rows):
            col = self.cells[:, self.rows - 1 - k]
            out.append("".join("1" if c else "0" for c in col))
        Path(path).write_text("\n".join(out) + "\n")


@dataclass(frozen=True)
class PlanarDomainSpec:
    """kind + params; bounding_box defaults to the shape's extent padded by 5%.

    params per kind:
      rectangle  (x_min, x_max, y_min, y_max)
      disk       (cx, cy, r)
      annulus    (cx, cy, r_in, r_out)
      polygon    ((x, y), (x, y), ...)
      raster-mask (path,)
    """

    kind: str
    params: tuple
    bounding_box: tuple = None
    name: str = ""
    _raster: RasterMask = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        p = self.params
        if self.kind == "polygon":
            p = tuple((float(a), float(b)) for a, b in p)
            if not polygon_is_simple(p):
                raise ValueError("polygon is not simple")
        elif self.kind == "raster-mask":
            p = (str(p[0]),)
            object.__setattr__(self, "_raster", RasterMask.read(p[0]))
        else:
            p = tuple(float(v) for v in p)
            need = {"rectangle": 4, "disk": 3, "annulus": 4}[self.kind]
            if len(p) != need:
                raise ValueError(f"{self.kind} needs {need} parameters, got {len(p)}")
            if self.kind == "rectangle" and not (p[0] < p[1] and p[2] < p[3]):
                raise ValueError("rectangle needs x_min < x_max and y_min < y_max")
            if self.kind == "disk" and not p[2] > 0:
                raise ValueError("disk radius must be positive")
            if self.kind == "annulus" and not 0 <= p[2] < p[3]:
                raise ValueError("annulus needs 0 <= inner radius < outer radius")
        object.__setattr__(self, "params", p)
        ext = self.extent()
        if self.bounding_box is None:
            pad = 0.05 * max(ext[1] - ext[0], ext[3] - ext[2])
            bb = (ext[0] - pad, ext[1] + pad, ext[2] - pad, ext[3] + pad)
        else:
            bb = tuple(float(v) for v in self.bounding_box)
            if not (bb[0] < ext[0] and bb[1] > ext[1] and bb[2] < ext[2] and bb[3] > ext[3]):
                raise ValueError("bounding box must strictly contain the domain closure")
        object.__setattr__(self, "bounding_box", bb)

    def extent(self):
        """Tight (x_min, x_max, y_min, y_max) of the closure."""
        k, p = self.kind, self.params
        if k == "rectangle":
            return p
        if k in ("disk", "annulus"):
            r = p[-1]
            return (p[0] - r, p[0] + r, p[1] - r, p[1] + r)
        if k == "polygon":
            xs, ys = zip(*p)
            return (min(xs), max(xs), min(ys), max(ys))
        rm = self._raster
        return (rm.x0 - rm.h, rm.x0 + rm.cols * rm.h, rm.y0 - rm.h, rm.y0 + rm.rows * rm.h)

    def signed_distance(self, x, y):
        """Negative inside, positive outside; exact Euclidean for analytic kinds."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        k, p = self.kind, self.params
        if k == "rectangle":
            dx = np.maximum(p[0] - x, x - p[1])
            dy = np.maximum(p[2] - y, y - p[3])
            outside = np.hypot(np.maximum(dx, 0), np.maximum(dy, 0))
            return np.where((dx <= 0) & (dy <= 0), np.maximum(dx, dy), outside)
        if k == "disk":
            return np.hypot(x - p[0], y - p[1]) - p[2]
        if k == "annulus":
            r = np.hypot(x - p[0], y - p[1])
            return np.maximum(p[2] - r, r - p[3])
        if k == "polygon":
            v = np.asarray(p)
            n = len(v)
            d = np.full(np.broadcast(x, y).shape, np.inf)
            inside = np.zeros(d.shape, dtype=bool)
            for i in range(n):
                (ax, ay), (bx, by) = v[i], v[(i + 1) % n]
                d = np.minimum(d, _seg_dist(x, y, ax, ay, bx, by))
                crosses = (ay > y) != (by > y)
                with np.errstate(divide="ignore", invalid="ignore"):
                    xi = ax + (y - ay) * (bx - ax) / (by - ay)
                inside ^= crosses & (x < xi)
            return np.where(inside, -d, d)
        rm = self._raster
        fx = np.rint((x - rm.x0) / rm.h).astype(int)
        fy = np.rint((y - rm.y0) / rm.h).astype(int)
        ok = (fx >= 0) & (fx < rm.cols) & (fy >= 0) & (fy < rm.rows)
        hit = np.zeros(ok.shape, dtype=bool)
        hit[ok] = rm.cells[fx[ok], fy[ok]]
        return np.where(hit, -rm.h, rm.h)

    def classify(self, x, y, tol=BOUNDARY_TOL):
        """0 interior, 1 boundary (within tol), 2 exterior."""
        sd = self.signed_distance(x, y)
        return np.where(sd < -tol, 0, np.where(sd <= tol, 1, 2))

    def contains(self, x, y):
        return self.signed_distance(x, y) < -BOUNDARY_TOL

    def to_dict(self):
        params = [list(v) for v in self.params] if self.kind == "polygon" else list(self.params)
        return {"kind": self.kind, "params": params, "bounding_box": list(self.bounding_box)}


def domain_from_dict(d):
    bb = d.get("bounding_box")
    return PlanarDomainSpec(d["kind"], tuple(d["params"]) if d["kind"] != "polygon"
                            else tuple(tuple(v) for v in d["params"]),
                            tuple(bb) if bb is not None else None, d.get("name", ""))


def rectangle(x0, x1, y0, y1, **kw):
    return PlanarDomainSpec("rectangle", (x0, x1, y0, y1), **kw)


def disk(r=1.0, cx=0.0, cy=0.0, **kw):
    return PlanarDomainSpec("disk", (cx, cy, r), **kw)


@dataclass(frozen=True, eq=False)
class Grid:
    """Lattice nodes (x0 + i*h, y0 + j*h) for 0 <= i < nx, 0 <= j < ny.

    ``mask`` flags interior nodes; the outermost ring is never interior, so
    every interior node has its four neighbours inside the array.
    """

    h: float
    x0: float
    y0: float
    mask: np.ndarray
    dist: np.ndarray
    domain: PlanarDomainSpec = None

    def __post_init__(self):
        m = self.mask
        if m[0].any() or m[-1].any() or m[:, 0].any() or m[:, -1].any():
            raise ValueError("interior nodes on the array border")
        idx = np.full(m.shape, -1, dtype=np.int64)
        idx[m] = np.arange(int(m.sum()))
        object.__setattr__(self, "index", idx)
        for a in (self.mask, self.dist, idx):
            a.setflags(write=False)

    @property
    def shape(self):
        return self.mask.shape

    @property
    def n(self):
        return int(self.mask.sum())

    @property
    def xs(self):
        return self.x0 + self.h * np.arange(self.shape[0])

    @property
    def ys(self):
        return self.y0 + self.h * np.arange(self.shape[1])

    @property
    def X(self):
        return np.broadcast_to(self.xs[:, None], self.shape)

    @property
    def Y(self):
        return np.broadcast_to(self.ys[None, :], self.shape)

    @property
    def points(self):
        """(N, 2) coordinates of interior nodes in index order."""
        I, J = np.nonzero(self.mask)
        return np.column_stack([self.x0 + self.h * I, self.y0 + self.h * J])

    @property
    def interior_distance(self):
        return self.dist[self.mask]

    def restrict(self, sub):
        """Same lattice, interior reduced to ``sub & mask``; distances kept."""
        sub = np.asarray(sub, dtype=bool) & self.mask
        return Grid(self.h, self.x0, self.y0, sub, np.where(sub, self.dist, 0.0), self.domain)

    def to_field(self, array2d):
        return np.asarray(array2d)[self.mask]

    def to_array(self, values, fill=0.0):
        values = np.asarray(values)
        out = np.full(self.shape, fill, dtype=np.result_type(values, type(fill)))
        out[self.mask] = values
        return out

    def quadrature_weights(self, subsamples=8):
        """Node weights h^2 * (fraction of the dual cell inside the domain)."""
        if self.domain is None or self.domain.kind == "raster-mask":
            return np.where(self.mask, self.h**2, 0.0)
        s = subsamples
        off = (np.arange(s) + 0.5) / s - 0.5
        frac = np.zeros(self.shape)
        X, Y = self.X, self.Y
        for a in off:
            for b in off:
                frac += self.domain.contains(X + a * self.h, Y + b * self.h)
        return frac / s**2 * self.h**2


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.n,):
            raise ValueError(f"field has {v.shape} values, grid has {self.grid.n} interior nodes")
        object.__setattr__(self, "values", v)


def build_grid(domain, h):
    if not h > 0:
        raise ValueError("h must be positive")
    ext = domain.extent()
    if min(ext[1] - ext[0], ext[3] - ext[2]) < 4 * h * (1 - 1e-12):
        raise DegenerateGridError(f"degenerate grid: domain narrower than 4h at h={h}")

    if domain.kind == "raster-mask":
        rm = domain._raster
        if abs(rm.h - h) > 1e-12 * rm.h:
            raise ValueError(f"raster mask has h={rm.h}, requested h={h}")
        mask = np.zeros((rm.cols + 2, rm.rows + 2), dtype=bool)
        mask[1:-1, 1:-1] = rm.cells
        if not mask.any():
            raise DegenerateGridError("degenerate grid: empty raster mask")
        dist = np.where(mask, ndimage.distance_transform_edt(mask, sampling=h), 0.0)
        return Grid(h, rm.x0 - h, rm.y0 - h, mask, dist, domain)

    bb = domain.bounding_box
    i0 = math.ceil(bb[0] / h - 1e-9) - 1
    i1 = math.floor(bb[1] / h + 1e-9) + 1
    j0 = math.ceil(bb[2] / h - 1e-9) - 1
    j1 = math.floor(bb[3] / h + 1e-9) + 1
    I = np.arange(i0, i1 + 1)
    J = np.arange(j0, j1 + 1)
    X = (I * h)[:, None] * np.ones(len(J))
    Y = np.ones(len(I))[:, None] * (J * h)[None, :]
    sd = domain.signed_distance(X, Y)
    mask = sd < -BOUNDARY_TOL
    mask[0] = mask[-1] = False
    mask[:, 0] = mask[:, -1] = False
    if not mask.any():
        raise DegenerateGridError(f"degenerate grid: no interior lattice node at h={h}")
    dist = np.where(mask, -sd, 0.0)
    return Grid(h, i0 * h, j0 * h, mask, dist, domain)


def shrink_neighborhoods(mask, grid, widths):
    """Nested node masks U_j = interior nodes within widths[j] of ``mask``."""
    widths = [float(w) for w in widths]
    if any(b >= a for a, b in zip(widths, widths[1:])):
        raise ValueError("precondition violation: widths must be strictly decreasing")
    for w in widths:
        if w <= grid.h:
            raise NeighborhoodError(f"unresolvable neighborhood: width {w} <= h = {grid.h}")
    mask = np.asarray(mask, dtype=bool) & grid.mask
    if not mask.any():
        return [np.zeros(grid.shape, dtype=bool) for _ in widths]
    d = ndimage.distance_transform_edt(~mask, sampling=grid.h)
    return [grid.mask & (d <= w * (1 + 1e-12)) for w in widths]


__all__ = [
    "PlanarDomainSpec", "RasterMask", "Grid", "ScalarField", "WeightSpec",
    "PolynomialWeight", "HarmonicLinearWeight", "RadialFlatWeight", "TermTableWeight",
    "DegenerateGridError", "NeighborhoodError", "build_grid", "eval_weight", "zero_set",
    "shrink_neighborhoods", "weight_from_dict", "domain_from_dict", "rectangle", "disk",
    "polygon_is_simple",
]
