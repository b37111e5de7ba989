"""Regions, grids and gridded fields.

Regions are parametric (interval unions in 1D; rectangles, disks, polygons
and half-spaces in 2D) so that membership, signed distance, measure and
perimeter are exact.  Grids are cell centred: node ``i`` sits at
``lo + (i + 1/2) h`` and owns the cell ``[lo + i h, lo + (i + 1) h]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

INF = math.inf

KINDS = ("interval-union", "rectangle", "disk", "polygon", "half-space")


class GeometryError(ValueError):
    """Invalid region or grid request."""


# ----------------------------------------------------------------------
# interval arithmetic (1D regions)
# ----------------------------------------------------------------------

def _normalize_intervals(pairs) -> tuple[tuple[float, float], ...]:
    ivs = sorted((float(a), float(b)) for a, b in pairs if float(b) > float(a))
    out: list[list[float]] = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


def _iv_complement(ivs):
    out = []
    prev = -INF
    for a, b in ivs:
        if a > prev:
            out.append((prev, a))
        prev = b
    if prev < INF:
        out.append((prev, INF))
    return _normalize_intervals(out)


def _iv_intersect(A, B):
    out = []
    i = j = 0
    while i < len(A) and j < len(B):
        lo = max(A[i][0], B[j][0])
        hi = min(A[i][1], B[j][1])
        if hi > lo:
            out.append((lo, hi))
        if A[i][1] < B[j][1]:
            i += 1
        else:
            j += 1
    return _normalize_intervals(out)


def _iv_measure(ivs) -> float:
    return math.fsum(b - a for a, b in ivs)


# ----------------------------------------------------------------------
# region specs
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RegionSpec:
    """Parametric region in R^n, n in {1, 2}.

    ``params`` by kind:

    * interval-union: tuple of (a, b) pairs, sorted and disjoint, ends may be +-inf
    * rectangle: (x0, y0, x1, y1)
    * disk: (cx, cy, r)
    * polygon: tuple of (x, y) vertices, counter-clockwise
    * half-space: (nx, ny, c) for {x : n.x > c}, with |n| = 1

    ``complement`` flips membership (not used for interval unions, whose
    complement is again an interval union).
    """

    kind: str
    params: tuple
    dim: int
    complement: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeometryError(f"unknown region kind {self.kind!r}")
        if self.dim not in (1, 2):
            raise GeometryError("only dimensions 1 and 2 are supported")
        if (self.kind == "interval-union") != (self.dim == 1):
            raise GeometryError(f"kind {self.kind!r} does not live in dimension {self.dim}")

    # -- constructors -------------------------------------------------
    @staticmethod
    def intervals(*pairs) -> "RegionSpec":
        return RegionSpec("interval-union", _normalize_intervals(pairs), 1)

    @staticmethod
    def interval(a: float, b: float) -> "RegionSpec":
        return RegionSpec.intervals((a, b))

    @staticmethod
    def empty(dim: int = 1) -> "RegionSpec":
        if dim == 1:
            return RegionSpec("interval-union", (), 1)
        return RegionSpec("rectangle", (0.0, 0.0, 0.0, 0.0), 2)

    @staticmethod
    def rectangle(x0, y0, x1, y1) -> "RegionSpec":
        if not (x1 > x0 and y1 > y0):
            raise GeometryError("rectangle needs x1 > x0 and y1 > y0")
        return RegionSpec("rectangle", (float(x0), float(y0), float(x1), float(y1)), 2)

    @staticmethod
    def disk(cx, cy, r) -> "RegionSpec":
        if r <= 0:
            raise GeometryError("disk radius must be positive")
        return RegionSpec("disk", (float(cx), float(cy), float(r)), 2)

    @staticmethod
    def polygon(vertices) -> "RegionSpec":
        v = [(float(x), float(y)) for x, y in vertices]
        if len(v) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        area2 = sum(v[i][0] * v[(i + 1) % len(v)][1] - v[(i + 1) % len(v)][0] * v[i][1]
                    for i in range(len(v)))
        if area2 < 0:
            v = v[::-1]
        return RegionSpec("polygon", tuple(v), 2)

    @staticmethod
    def half_space(normal, offset) -> "RegionSpec":
        nx, ny = float(normal[0]), float(normal[1])
        nrm = math.hypot(nx, ny)
        if nrm == 0:
            raise GeometryError("half-space normal must be non-zero")
        return RegionSpec("half-space", (nx / nrm, ny / nrm, float(offset) / nrm), 2)

    # -- basic properties --------------------------------------------
    @property
    def is_empty(self) -> bool:
        if self.complement:
            return False
        if self.kind == "interval-union":
            return len(self.params) == 0
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            return not (x1 > x0 and y1 > y0)
        return False

    @property
    def is_full(self) -> bool:
        if self.kind == "interval-union":
            return self.params == ((-INF, INF),)
        return self.complement and RegionSpec(self.kind, self.params, self.dim).is_empty

    @property
    def is_bounded(self) -> bool:
        if self.kind == "interval-union":
            return all(math.isfinite(a) and math.isfinite(b) for a, b in self.params)
        if self.complement:
            return self.is_empty
        return self.kind != "half-space"

    def complemented(self) -> "RegionSpec":
        if self.kind == "interval-union":
            return RegionSpec("interval-union", _iv_complement(self.params), 1)
        return RegionSpec(self.kind, self.params, self.dim, not self.complement)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box (lo, hi) of a bounded region."""
        if not self.is_bounded:
            raise GeometryError("unbounded region has no bounding box")
        if self.is_empty:
            return np.zeros(self.dim), np.zeros(self.dim)
        if self.kind == "interval-union":
            return np.array([self.params[0][0]]), np.array([self.params[-1][1]])
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            return np.array([x0, y0]), np.array([x1, y1])
        if self.kind == "disk":
            cx, cy, r = self.params
            return np.array([cx - r, cy - r]), np.array([cx + r, cy + r])
        v = np.asarray(self.params)
        return v.min(axis=0), v.max(axis=0)

    def diameter(self) -> float:
        lo, hi = self.bbox()
        if self.kind == "disk":
            return 2.0 * self.params[2]
        return float(np.linalg.norm(hi - lo))

    # -- membership ---------------------------------------------------
    def contains(self, pts) -> np.ndarray:
        """Open-set membership for an array of points, shape (..., dim) or (...,) in 1D."""
        x = np.asarray(pts, dtype=float)
        if self.kind == "interval-union":
            inside = np.zeros(x.shape, dtype=bool)
            for a, b in self.params:
                inside |= (x > a) & (x < b)
            return inside
        px, py = x[..., 0], x[..., 1]
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            inside = (px > x0) & (px < x1) & (py > y0) & (py < y1)
        elif self.kind == "disk":
            cx, cy, r = self.params
            inside = (px - cx) ** 2 + (py - cy) ** 2 < r * r
        elif self.kind == "half-space":
            nx, ny, c = self.params
            inside = nx * px + ny * py > c
        else:
            inside = _point_in_polygon(px, py, np.asarray(self.params))
        return ~inside if self.complement else inside

    # -- signed distance ---------------------------------------------
    def signed_distance(self, pts) -> np.ndarray:
        """Distance to the boundary, positive inside and negative outside."""
        x = np.asarray(pts, dtype=float)
        if self.kind == "interval-union":
            ends = [e for iv in self.params for e in iv if math.isfinite(e)]
            if not ends:
                raise GeometryError("signed distance needs a set with non-empty boundary")
            ends = np.asarray(ends)
            d = np.min(np.abs(x[..., None] - ends), axis=-1)
            return np.where(self.contains(x), d, -d)
        if self.is_empty or self.is_full:
            raise GeometryError("signed distance needs a set with non-empty boundary")
        px, py = x[..., 0], x[..., 1]
        if self.kind == "disk":
            cx, cy, r = self.params
            d = r - np.hypot(px - cx, py - cy)
        elif self.kind == "half-space":
            nx, ny, c = self.params
            d = nx * px + ny * py - c
        else:
            verts = np.asarray(self._vertices())
            dist = np.full(px.shape, INF)
            for k in range(len(verts)):
                a, b = verts[k], verts[(k + 1) % len(verts)]
                dist = np.minimum(dist, _segment_distance(px, py, a, b))
            inside = self.contains(x) if not self.complement else ~self.contains(x)
            d = np.where(inside, dist, -dist)
            return -d if self.complement else d
        return -d if self.complement else d

    def _vertices(self):
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        if self.kind == "polygon":
            return list(self.params)
        raise GeometryError(f"{self.kind} has no vertices")

    # -- measure --------------------------------------------------------
    def measure(self) -> float:
        """Exact Lebesgue measure (inf for unbounded regions)."""
        if self.is_empty:
            return 0.0
        if not self.is_bounded:
            return INF
        if self.kind == "interval-union":
            return _iv_measure(self.params)
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            return (x1 - x0) * (y1 - y0)
        if self.kind == "disk":
            return math.pi * self.params[2] ** 2
        v = self.params
        return 0.5 * abs(math.fsum(v[i][0] * v[(i + 1) % len(v)][1] - v[(i + 1) % len(v)][0] * v[i][1]
                                   for i in range(len(v))))

    # -- boundary ---------------------------------------------------------
    def boundary_pieces(self):
        """Boundary as ('seg', a, b), ('circle', c, r) or ('line', n, c) pieces (2D only)."""
        if self.kind == "disk":
            cx, cy, r = self.params
            return [("circle", np.array([cx, cy]), r)]
        if self.kind == "half-space":
            nx, ny, c = self.params
            return [("line", np.array([nx, ny]), c)]
        if self.kind in ("rectangle", "polygon"):
            v = [np.asarray(p) for p in self._vertices()]
            return [("seg", v[k], v[(k + 1) % len(v)]) for k in range(len(v))]
        raise GeometryError("boundary pieces are defined for 2D regions")


def _point_in_polygon(px, py, verts):
    inside = np.zeros(np.shape(px), dtype=bool)
    n = len(verts)
    for k in range(n):
        x0, y0 = verts[k]
        x1, y1 = verts[(k + 1) % n]
        crosses = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (px < xint)
    return inside


def _segment_distance(px, py, a, b):
    ab = b - a
    L2 = float(ab @ ab)
    t = ((px - a[0]) * ab[0] + (py - a[1]) * ab[1]) / L2
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(px - (a[0] + t * ab[0]), py - (a[1] + t * ab[1]))


# ----------------------------------------------------------------------
# set algebra
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SetExpr:
    """Lazy intersection of 2D regions (each possibly complemented)."""

    parts: tuple
    dim: int = 2

    def contains(self, pts) -> np.ndarray:
        out = None
        for p in self.parts:
            m = p.contains(pts)
            out = m if out is None else out & m
        return out

    @property
    def is_bounded(self) -> bool:
        return any(p.is_bounded for p in self.parts)

    @property
    def primitives(self):
        return self.parts


def intersect(a, b):
    """Intersection; exact interval arithmetic in 1D, lazy expression in 2D."""
    if a.dim != b.dim:
        raise GeometryError("dimension mismatch")
    if a.dim == 1:
        return RegionSpec("interval-union", _iv_intersect(a.params, b.params), 1)
    pa = a.parts if isinstance(a, SetExpr) else (a,)
    pb = b.parts if isinstance(b, SetExpr) else (b,)
    return SetExpr(pa + pb)


def complement(a: RegionSpec) -> RegionSpec:
    if isinstance(a, SetExpr):
        raise GeometryError("complement of a composite 2D set is not supported")
    return a.complemented()


def difference(a, b):
    return intersect(a, complement(b))


def union(a: RegionSpec, b: RegionSpec) -> RegionSpec:
    if a.dim != 1 or b.dim != 1:
        raise GeometryError("exact unions are available for 1D interval unions only")
    return RegionSpec.intervals(*(a.params + b.params))


def symmetric_difference(a: RegionSpec, b: RegionSpec) -> RegionSpec:
    if a.dim != 1:
        raise GeometryError("exact symmetric differences are available in 1D only")
    return union(difference(a, b), difference(b, a))


# ----------------------------------------------------------------------
# grids and fields
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on the box prod_i [lo_i, lo_i + shape_i h]."""

    lo: tuple
    h: float
    shape: tuple
    R: float = 0.0

    def __post_init__(self):
        if not self.h > 0:
            raise GeometryError("grid spacing h must be positive")
        if len(self.lo) != len(self.shape) or len(self.shape) not in (1, 2):
            raise GeometryError("grid dimension must be 1 or 2")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def hi(self) -> tuple:
        return tuple(l + n * self.h for l, n in zip(self.lo, self.shape))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis(self, i: int = 0) -> np.ndarray:
        return self.lo[i] + (np.arange(self.shape[i]) + 0.5) * self.h

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``shape`` in 1D and ``shape + (2,)`` in 2D."""
        if self.dim == 1:
            return self.axis(0)
        X, Y = np.meshgrid(self.axis(0), self.axis(1), indexing="ij")
        return np.stack([X, Y], axis=-1)

    def mask(self, region) -> np.ndarray:
        if region.dim != self.dim:
            raise GeometryError("dimension mismatch between region and grid")
        return region.contains(self.nodes())

    def locate(self, pts) -> np.ndarray:
        """Indices of the cells containing ``pts``; raises outside the box."""
        p = np.atleast_1d(np.asarray(pts, dtype=float))
        if self.dim == 1:
            idx = np.floor((p - self.lo[0]) / self.h).astype(int)
            if np.any(idx < 0) or np.any(idx >= self.shape[0]):
                raise GeometryError("evaluation point outside the grid box")
            return idx
        p = p.reshape(-1, 2)
        ij = np.floor((p - np.asarray(self.lo)) / self.h).astype(int)
        if np.any(ij < 0) or np.any(ij >= np.asarray(self.shape)):
            raise GeometryError("evaluation point outside the grid box")
        return ij


def build_grid(omega: RegionSpec, h: float, R: float, center=None) -> Grid:
    """Box of half-width ``R`` around the centre of ``omega`` with spacing ``h``."""
    if not h > 0:
        raise GeometryError("grid spacing h must be positive")
    if not omega.is_bounded or omega.is_empty:
        raise GeometryError("omega must be bounded with positive measure")
    lo_b, hi_b = omega.bbox()
    c = 0.5 * (lo_b + hi_b) if center is None else np.asarray(center, dtype=float).reshape(-1)
    n = int(round(2.0 * R / h))
    lo = c - 0.5 * n * h
    hi = c + 0.5 * n * h
    if np.any(lo_b < lo + h) or np.any(hi_b > hi - h):
        raise GeometryError("R too small: the box must contain omega with a one-cell margin")
    return Grid(tuple(float(v) for v in lo), float(h), (n,) * omega.dim, float(R))


@dataclass
class ScalarField:
    """Cell values of ``u`` on a grid plus constant values beyond the box.

    ``far_field`` holds (left, right) in 1D and a single constant in 2D.
    """

    grid: Grid
    values: np.ndarray
    far_field: tuple
    M: float = 2.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != tuple(self.grid.shape):
            raise GeometryError("field values do not match the grid shape")
        ff = tuple(float(v) for v in np.atleast_1d(self.far_field))
        if len(ff) == 1 and self.grid.dim == 1:
            ff = ff * 2
        if len(ff) != (2 if self.grid.dim == 1 else 1):
            raise GeometryError("far_field needs two values in 1D and one in 2D")
        self.far_field = ff
        if not np.all(np.isfinite(self.values)):
            raise GeometryError("field values must be finite")
        if self.M < 1:
            raise GeometryError("bound M must be at least 1")

    def copy(self, values=None, far_field=None) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy() if values is None else values,
                           self.far_field if far_field is None else far_field, self.M)

    def in_X_M(self, omega) -> bool:
        m = self.grid.mask(omega)
        return bool(np.all(np.abs(self.values[m]) <= self.M))

    def integral(self, region) -> float:
        """Cell-quadrature integral of u over ``region``."""
        m = self.grid.mask(region)
        return float(np.sum(self.values[m])) * self.grid.cell_volume


@dataclass(frozen=True)
class MassConstraint:
    m: float
    tolerance: float = 1e-8
    omega_measure: float = field(default=INF)

    def __post_init__(self):
        if not self.tolerance > 0:
            raise GeometryError("mass tolerance must be positive")
        if not abs(self.m) < self.omega_measure:
            raise GeometryError("mass m must satisfy |m| < |omega|")


# ----------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------

def _far_value_1d(region: RegionSpec, side: int) -> float:
    probe = -1e300 if side < 0 else 1e300
    return 1.0 if bool(region.contains(np.array([probe]))[0]) else -1.0


def indicator(region, grid: Grid, M: float = 2.0) -> ScalarField:
    """Signed indicator chi_E - chi_{E^c} sampled at cell centres."""
    if region.dim != grid.dim:
        raise GeometryError("dimension mismatch between set and grid")
    vals = np.where(grid.mask(region), 1.0, -1.0)
    if grid.dim == 1:
        ff = (_far_value_1d(region, -1), _far_value_1d(region, +1))
    else:
        far = np.array([[1e12, 1e12 * 0.7071]])
        ff = (1.0 if bool(region.contains(far)[0]) else -1.0,)
    return ScalarField(grid, vals, ff, M)


def signed_distance(region: RegionSpec, grid: Grid) -> ScalarField:
    """Signed distance to the boundary at the nodes (far field: sign of the far set)."""
    if region.dim != grid.dim:
        raise GeometryError("dimension mismatch between set and grid")
    d = region.signed_distance(grid.nodes())
    ind = indicator(region, grid)
    return ScalarField(grid, d, ind.far_field, M=max(1.0, float(np.max(np.abs(d)))))


def measure(region, window: Grid | None = None) -> float:
    """Exact measure for parametric regions; cell counting inside ``window`` otherwise."""
    if window is None:
        if isinstance(region, SetExpr):
            raise GeometryError("composite 2D sets need a grid window")
        m = region.measure()
        if not math.isfinite(m):
            raise GeometryError("measure of an unbounded region requested")
        return m
    if region.dim == 1 and isinstance(region, RegionSpec):
        lo, hi = window.lo[0], window.hi[0]
        return _iv_measure(_iv_intersect(region.params, ((lo, hi),)))
    return float(np.count_nonzero(window.mask(region))) * window.cell_volume


def classical_perimeter(E: RegionSpec, omega: RegionSpec) -> float:
    """Per(E, omega): jump count in 1D, length of the boundary of E inside omega in 2D."""
    if E.dim != omega.dim:
        raise GeometryError("dimension mismatch")
    if E.dim == 1:
        ends = [e for iv in E.params for e in iv if math.isfinite(e)]
        return float(sum(1 for e in ends if omega.contains(np.array([e]))[0]))
    if E.is_empty or E.is_full:
        return 0.0
    total = 0.0
    cuts = omega.boundary_pieces()
    for piece in E.boundary_pieces():
        total += _length_inside(piece, omega, cuts)
    return total


def _length_inside(piece, omega: RegionSpec, cuts) -> float:
    if piece[0] == "line":
        nrm, c = piece[1], piece[2]
        lo, hi = omega.bbox()
        p0 = nrm * c
        reach = float(np.max(np.linalg.norm(np.array([lo, hi, [lo[0], hi[1]], [hi[0], lo[1]]]) - p0, axis=1))) + 1.0
        t = np.array([-nrm[1], nrm[0]])
        piece = ("seg", p0 - reach * t, p0 + reach * t)
    if piece[0] == "seg":
        a, b = piece[1], piece[2]
        ts = [0.0, 1.0]
        for c in cuts:
            ts += _seg_cut_params(a, b, c)
        ts = np.unique(np.clip(ts, 0.0, 1.0))
        mids = 0.5 * (ts[1:] + ts[:-1])
        pts = a[None, :] + mids[:, None] * (b - a)[None, :]
        inside = omega.contains(pts)
        return float(np.linalg.norm(b - a) * np.sum(np.diff(ts)[inside]))
    c, r = piece[1], piece[2]
    th = [0.0, 2 * math.pi]
    for cut in cuts:
        th += _circle_cut_angles(c, r, cut)
    th = np.unique(np.mod(th, 2 * math.pi).tolist() + [2 * math.pi])
    mids = 0.5 * (th[1:] + th[:-1])
    pts = c[None, :] + r * np.stack([np.cos(mids), np.sin(mids)], axis=1)
    inside = omega.contains(pts)
    return float(r * np.sum(np.diff(th)[inside]))


def _seg_cut_params(a, b, cut):
    d = b - a
    if cut[0] == "line":
        nrm, c = cut[1], cut[2]
        den = float(nrm @ d)
        if den == 0:
            return []
        t = (c - float(nrm @ a)) / den
        return [t] if 0 <= t <= 1 else []
    if cut[0] == "seg":
        p, q = cut[1], cut[2]
        e = q - p
        den = d[0] * e[1] - d[1] * e[0]
        if den == 0:
            return []
        w = p - a
        t = (w[0] * e[1] - w[1] * e[0]) / den
        u = (w[0] * d[1] - w[1] * d[0]) / den
        return [t] if 0 <= t <= 1 and 0 <= u <= 1 else []
    c, r = cut[1], cut[2]
    f = a - c
    A = d @ d
    B = 2 * f @ d
    C = f @ f - r * r
    disc = B * B - 4 * A * C
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    return [t for t in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)) if 0 <= t <= 1]


def _circle_cut_angles(c, r, cut):
    if cut[0] == "line":
        nrm, off = cut[1], cut[2]
        dist = off - float(nrm @ c)
        if abs(dist) > r:
            return []
        base = math.atan2(nrm[1], nrm[0])
        ang = math.acos(dist / r)
        return [base - ang, base + ang]
    if cut[0] == "seg":
        p, q = cut[1], cut[2]
        ts = _seg_cut_params(p, q, ("circle", c, r))
        pts = [p + t * (q - p) for t in ts]
        return [math.atan2(pt[1] - c[1], pt[0] - c[0]) for pt in pts]
    c2, r2 = cut[1], cut[2]
    dvec = c2 - c
    d = float(np.linalg.norm(dvec))
    if d == 0 or d > r + r2 or d < abs(r - r2):
        return []
    base = math.atan2(dvec[1], dvec[0])
    cosang = (r * r + d * d - r2 * r2) / (2 * r * d)
    ang = math.acos(max(-1.0, min(1.0, cosang)))
    return [base - ang, base + ang]


def region_from_sequence(seq: Sequence[float]) -> RegionSpec:
    """Interval union from a flat (a0, b0, a1, b1, ...) sequence."""
    if len(seq) % 2:
        raise GeometryError("interval list needs an even number of endpoints")
    return RegionSpec.intervals(*zip(seq[0::2], seq[1::2]))
