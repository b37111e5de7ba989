"""Singular-kernel quadrature for |x - y|^(-n-2s).

1D interval pairs use the exact double antiderivative

    G(r) = r^(1-2s) / (2s (1-2s))      (G(r) = log r at s = 1/2),

for which L((a,b),(c,d)) = G(c-a) - G(c-b) - G(d-a) + G(d-b).  Gridded
energies treat fields as piecewise constant on cells; the interaction of two
cells depends only on their offset, so every double sum becomes a
convolution with a Toeplitz stencil evaluated by FFT.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import roots_jacobi, roots_legendre

from .domain import (
    GeometryError,
    Grid,
    RegionSpec,
    ScalarField,
    SetExpr,
    classical_perimeter as _classical_perimeter,
    complement,
    intersect,
)

__all__ = [
    "KernelParams",
    "DivergentInteraction",
    "G",
    "interval_interaction",
    "interaction",
    "frac_perimeter",
    "classical_perimeter",
    "gagliardo_K",
    "rescaled_perimeter_limit",
    "NonlocalOperator",
    "operator_for",
]


class DivergentInteraction(ValueError):
    """The requested kernel integral is infinite."""


@dataclass(frozen=True)
class KernelParams:
    """Kernel |x-y|^(-n-2s); the fractional Laplacian carries prefactor 2."""

    s: float
    n: int = 1

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if self.n not in (1, 2):
            raise ValueError("dimension must be 1 or 2")


# ----------------------------------------------------------------------
# 1D closed forms
# ----------------------------------------------------------------------

def G(r, s: float):
    """Double antiderivative of |r|^(-1-2s) (G'' = -r^(-1-2s))."""
    r = np.asarray(r, dtype=float)
    if s == 0.5:
        return np.log(r)
    with np.errstate(divide="ignore"):
        return r ** (1.0 - 2.0 * s) / (2.0 * s * (1.0 - 2.0 * s))


def _G_diff(x, y, s: float):
    """G(x) - G(y) for x, y > 0 without cancellation near s = 1/2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = 1.0 - 2.0 * s
    lr = np.log(x / y)
    if a == 0.0:
        return lr
    return y ** a * np.expm1(a * lr) / (2.0 * s * a)


def _G_from_zero(x, s: float):
    """G(x) - G(0), finite only for s < 1/2."""
    if s >= 0.5:
        raise DivergentInteraction("touching sets interact infinitely for s >= 1/2")
    return G(x, s)


def interval_interaction(a: float, b: float, c: float, d: float, s: float) -> float:
    """L((a,b),(c,d)) for b <= c; a may be -inf and d may be +inf."""
    if b > c:
        raise GeometryError("intervals overlap on a set of positive measure")
    if not (b > a and d > c):
        return 0.0
    left_inf = not math.isfinite(a)
    right_inf = not math.isfinite(d)
    gap = c - b

    def gd(x, y):
        # G(x) - G(y), y may be zero
        if y == 0.0:
            return float(_G_from_zero(x, s))
        return float(_G_diff(x, y, s))

    if left_inf and right_inf:
        if s <= 0.5:
            raise DivergentInteraction("two half-lines interact infinitely for s <= 1/2")
        if gap == 0.0:
            raise DivergentInteraction("touching half-lines")
        return gap ** (1.0 - 2.0 * s) / (2.0 * s * (2.0 * s - 1.0))
    if left_inf:
        return gd(d - b, gap)
    if right_inf:
        return gd(c - a, gap)
    # [G(c-a) - G(c-b)] - [G(d-a) - G(d-b)]
    return gd(c - a, gap) - float(_G_diff(d - a, d - b, s))


def _iv_pairs_interaction(A, B, s: float) -> float:
    total = []
    for a, b in A:
        for c, d in B:
            if b <= c:
                total.append(interval_interaction(a, b, c, d, s))
            elif d <= a:
                total.append(interval_interaction(c, d, a, b, s))
            else:
                raise GeometryError("sets overlap on a set of positive measure")
    return math.fsum(total)


# ----------------------------------------------------------------------
# cell-pair stencils
# ----------------------------------------------------------------------

def _neighbour_weight_linear(s: float, h: float) -> float:
    # adjacent pair plus the own-cell energy of a linear field
    return h ** (1 - 2 * s) * (2 ** (3 - 2 * s) - 1) / ((2 - 2 * s) * (3 - 2 * s))


@lru_cache(maxsize=64)
def stencil_1d(s: float, h: float, N: int) -> np.ndarray:
    """W[k] = interaction of two cells k apart (W[0] = 0), k = 0..N-1."""
    W = np.zeros(N)
    if N < 2:
        return W
    k = np.arange(2, N, dtype=float)
    near = k <= 20
    kn = k[near]
    # 2G(kh) - G((k-1)h) - G((k+1)h) as two stable differences
    W[2:][near] = _G_diff(kn * h, (kn - 1) * h, s) - _G_diff((kn + 1) * h, kn * h, s)
    if np.any(~near):
        # tent form: int_{-h}^{h} (h - |t|) |kh + t|^(-1-2s) dt
        x, w = roots_legendre(12)
        t = 0.5 * h * (x + 1.0)
        wt = 0.5 * h * w * (h - t)
        kf = k[~near][:, None] * h
        W[2:][~near] = ((kf + t) ** (-1 - 2 * s) + (kf - t) ** (-1 - 2 * s)) @ wt
    if s < 0.5:
        W[1] = float(2 * G(h, s) - G(2 * h, s))
    else:
        W[1] = _neighbour_weight_linear(s, h)
    W.setflags(write=False)
    return W


def _square_corner_integral(s: float, poly, h: float, nq: int = 16) -> float:
    """int_{[0,h]^2} |z|^(-2-2s) p(z) dz for a bilinear p vanishing at 0.

    Duffy split into two triangles; Gauss-Jacobi with weight rho^(-2s) in
    the radial variable and Gauss-Legendre in the angular one.
    """
    xj, wj = roots_jacobi(nq, 0.0, -2.0 * s)
    rho = 0.5 * h * (xj + 1.0)
    wr = wj * (0.5 * h) ** (1.0 - 2.0 * s)
    xl, wl = roots_legendre(nq)
    xi = 0.5 * (xl + 1.0)
    wx = 0.5 * wl
    R, X = np.meshgrid(rho, xi, indexing="ij")
    WW = np.outer(wr, wx)
    total = 0.0
    for swap in (False, True):
        z1, z2 = (R, R * X) if not swap else (R * X, R)
        # rho^(-2-2s) * rho (Jacobian) * p / rho  ->  rho^(-2s) weight times p/rho
        val = (1.0 + X * X) ** (-1.0 - s) * poly(z1, z2) / R
        total += float(np.sum(WW * val))
    return total


def _tensor_gauss(f, x0, x1, y0, y1, nq: int = 10) -> float:
    x, w = roots_legendre(nq)
    px = 0.5 * (x1 - x0) * (x + 1) + x0
    py = 0.5 * (y1 - y0) * (x + 1) + y0
    X, Y = np.meshgrid(px, py, indexing="ij")
    return float(np.sum(np.outer(w, w) * f(X, Y))) * 0.25 * (x1 - x0) * (y1 - y0)


def _cell_pair_2d(s: float, h: float, k: int, l: int) -> float:
    """int |z|^(-2-2s) tent(z1 - kh) tent(z2 - lh) dz, tent(t) = (h - |t|)+."""
    p = 2.0 + 2.0 * s
    total = 0.0
    for ix in (k - 1, k):
        for iy in (l - 1, l):
            x0, x1 = ix * h, (ix + 1) * h
            y0, y1 = iy * h, (iy + 1) * h

            def weight(Z1, Z2):
                return np.maximum(h - np.abs(Z1 - k * h), 0.0) * np.maximum(h - np.abs(Z2 - l * h), 0.0)

            if ix in (-1, 0) and iy in (-1, 0):
                # origin is a corner: reflect onto [0,h]^2
                sx = -1.0 if ix == -1 else 1.0
                sy = -1.0 if iy == -1 else 1.0
                total += _square_corner_integral(s, lambda a, b: weight(sx * a, sy * b), h)
            else:
                total += _tensor_gauss(lambda X, Y: (X * X + Y * Y) ** (-p / 2) * weight(X, Y),
                                       x0, x1, y0, y1)
    return total


@lru_cache(maxsize=16)
def stencil_2d(s: float, h: float, N: int) -> np.ndarray:
    """W[k, l] for 0 <= k, l < N; W[0, 0] = 0 (own cell, never weighted)."""
    if s >= 0.5:
        raise DivergentInteraction("gridded 2D energies require s < 1/2")
    p = 2.0 + 2.0 * s
    k = np.arange(N, dtype=float)
    K, Lg = np.meshgrid(k, k, indexing="ij")
    r2 = (K * K + Lg * Lg) * h * h
    with np.errstate(divide="ignore"):
        # midpoint rule plus the tent-moment correction (h^2/12) * Laplacian
        W = h ** 4 * r2 ** (-p / 2) * (1.0 + h * h * p * p / (12.0 * r2))
    near = min(N, 7)
    for a in range(near):
        for b in range(a, near):
            if a == 0 and b == 0:
                continue
            W[a, b] = W[b, a] = _cell_pair_2d(s, h, a, b)
    W[0, 0] = 0.0
    W.setflags(write=False)
    return W


def _full_stencil(Wq: np.ndarray) -> np.ndarray:
    """Mirror a quadrant stencil W[|k|, |l|] to offsets -(N-1)..(N-1)."""
    if Wq.ndim == 1:
        return np.concatenate([Wq[:0:-1], Wq])
    top = np.concatenate([Wq[:0:-1, :], Wq], axis=0)
    return np.concatenate([top[:, :0:-1], top], axis=1)


# ----------------------------------------------------------------------
# exterior tails
# ----------------------------------------------------------------------

def _tails_1d(grid: Grid, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Cell interactions with (-inf, lo) and (hi, +inf)."""
    h = grid.h
    N = grid.shape[0]
    i = np.arange(N, dtype=float)
    # distances to the box edges from cell edges
    dl_near = i * h          # a_i - lo
    dl_far = (i + 1) * h     # b_i - lo
    dr_near = (N - 1 - i) * h
    dr_far = (N - i) * h
    TL = np.empty(N)
    TR = np.empty(N)
    inner = dl_near > 0
    TL[inner] = _G_diff(dl_far[inner], dl_near[inner], s)
    inner_r = dr_near > 0
    TR[inner_r] = _G_diff(dr_far[inner_r], dr_near[inner_r], s)
    if s < 0.5:
        edge = float(G(h, s))
    else:
        # split the half-line into the adjacent phantom cell and the rest
        edge = _neighbour_weight_linear(s, h) + float(_G_diff(2 * h, h, s))
    TL[~inner] = edge
    TR[~inner_r] = edge
    return TL, TR


def _box_tail_2d(points: np.ndarray, box_lo, box_hi, s: float, nq: int = 24) -> np.ndarray:
    """int over R^2 minus the box of |x-y|^(-2-2s) dy at each point (exact up to quadrature)."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    x0, y0 = box_lo
    x1, y1 = box_hi
    xg, wg = roots_legendre(nq)
    out = np.zeros(len(P))
    px, py = P[:, 0], P[:, 1]
    # right, top, left, bottom edges between consecutive corners
    corners = [(x1, y0), (x1, y1), (x0, y1), (x0, y0)]
    ang = np.stack([np.arctan2(cy - py, cx - px) for cx, cy in corners], axis=1)
    ang = np.unwrap(ang, axis=1)
    ang = np.concatenate([ang, ang[:, :1] + 2 * np.pi], axis=1)
    dists = np.stack([x1 - px, y1 - py, px - x0, py - y0], axis=1)
    normals = np.array([0.0, 0.5, 1.0, 1.5]) * np.pi
    for e in range(4):
        ta, tb = ang[:, e], ang[:, e + 1]
        th = 0.5 * (tb - ta)[:, None] * (xg + 1)[None, :] + ta[:, None]
        c = np.cos(th - normals[e])
        r = dists[:, e][:, None] / c
        out += 0.5 * (tb - ta) * ((r ** (-2 * s)) @ wg) / (2 * s)
    return out


def _ray_crossings(P, E, pieces):
    """Ray parameters r > 0 where x + r e crosses any boundary piece."""
    px, py = P[:, 0][:, None], P[:, 1][:, None]
    ex, ey = E[None, :, 0], E[None, :, 1]
    hits = []
    for pc in pieces:
        if pc[0] == "line":
            n, c = pc[1], pc[2]
            den = n[0] * ex + n[1] * ey
            with np.errstate(divide="ignore", invalid="ignore"):
                r = (c - n[0] * px - n[1] * py) / den
            hits.append(np.broadcast_to(r, (P.shape[0], E.shape[0])))
        elif pc[0] == "circle":
            cx, cy = pc[1]
            R = pc[2]
            fx, fy = px - cx, py - cy
            b = fx * ex + fy * ey
            cc = fx * fx + fy * fy - R * R
            disc = b * b - cc
            sq = np.sqrt(np.maximum(disc, 0.0))
            bad = disc < 0
            hits.append(np.where(bad, np.nan, -b - sq))
            hits.append(np.where(bad, np.nan, -b + sq))
        else:
            a, bb = pc[1], pc[2]
            dx, dy = bb[0] - a[0], bb[1] - a[1]
            den = ex * dy - ey * dx
            wx, wy = a[0] - px, a[1] - py
            with np.errstate(divide="ignore", invalid="ignore"):
                r = (wx * dy - wy * dx) / den
                u = (wx * ey - wy * ex) / den
            hits.append(np.where((u >= 0) & (u <= 1), r, np.nan))
    if not hits:
        return np.full((P.shape[0], E.shape[0], 0), np.nan)
    return np.stack(hits, axis=-1)


def _ray_tail(points, region, box_lo, box_hi, s: float, n_theta: int = 720) -> np.ndarray:
    """int over (R^2 minus box) intersected with ``region`` of |x-y|^(-2-2s) dy."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(P) == 0:
        return np.zeros(0)
    th = (np.arange(n_theta) + 0.5) * 2 * np.pi / n_theta
    E = np.stack([np.cos(th), np.sin(th)], axis=1)
    parts = region.parts if isinstance(region, SetExpr) else (region,)
    pieces = [pc for p in parts for pc in p.boundary_pieces()]
    out = np.zeros(len(P))
    lo = np.asarray(box_lo)
    hi = np.asarray(box_hi)
    chunk = max(1, 200000 // n_theta)
    for k0 in range(0, len(P), chunk):
        Pc = P[k0:k0 + chunk]
        with np.errstate(divide="ignore", invalid="ignore"):
            tx = np.where(E[None, :, 0] > 0, (hi[0] - Pc[:, 0:1]) / E[None, :, 0],
                          (lo[0] - Pc[:, 0:1]) / E[None, :, 0])
            ty = np.where(E[None, :, 1] > 0, (hi[1] - Pc[:, 1:2]) / E[None, :, 1],
                          (lo[1] - Pc[:, 1:2]) / E[None, :, 1])
        rb = np.minimum(np.abs(tx), np.abs(ty))
        cr = _ray_crossings(Pc, E, pieces)
        cr = np.where(cr > rb[..., None], cr, np.nan)
        cr = np.sort(cr, axis=-1)  # nan last
        edges = np.concatenate([rb[..., None], cr, np.full(rb.shape + (1,), np.inf)], axis=-1)
        # walk segments [edges_j, edges_{j+1}]
        acc = np.zeros(rb.shape)
        prev = edges[..., 0]
        for j in range(1, edges.shape[-1]):
            nxt = edges[..., j]
            valid = ~np.isnan(nxt)
            nxt = np.where(valid, nxt, np.inf)
            mid = np.where(np.isinf(nxt), 2.0 * prev + 1.0, 0.5 * (prev + nxt))
            mid = np.where(np.isinf(prev), 0.0, mid)
            q = np.stack([Pc[:, 0:1] + mid * E[None, :, 0], Pc[:, 1:2] + mid * E[None, :, 1]], axis=-1)
            inside = region.contains(q)
            with np.errstate(divide="ignore"):
                seg = (prev ** (-2 * s) - np.where(np.isinf(nxt), 0.0, nxt ** (-2 * s))) / (2 * s)
            acc += np.where(inside & (nxt > prev), seg, 0.0)
            prev = np.where(valid, nxt, np.inf)
            if not np.any(valid):
                break
        out[k0:k0 + chunk] = acc.sum(axis=1) * (2 * np.pi / n_theta)
    return out


# ----------------------------------------------------------------------
# gridded nonlocal operator
# ----------------------------------------------------------------------

class NonlocalOperator:
    """Cell-pair weights, tails and the resulting quadratic forms on a grid.

    Fields are piecewise constant on cells and constant beyond the box
    (``far_field``).  With ``S_i`` the row sum of all weights of cell ``i``
    (tails included), the discrete fractional Laplacian is

        L u_i = (2 / h^n) [u_i S_i - (W * u)_i - sum_c c T_ic].
    """

    def __init__(self, grid: Grid, s: float):
        self.grid = grid
        self.s = float(s)
        N = grid.shape[0]
        if grid.dim == 1:
            self._Wq = stencil_1d(self.s, grid.h, N)
            TL, TR = _tails_1d(grid, self.s)
            self.tails = (TL, TR)
        else:
            if grid.shape[0] != grid.shape[1]:
                raise GeometryError("2D operators need square grids")
            self._Wq = stencil_2d(self.s, grid.h, N)
            # midpoint rule in x: cells sit well inside the box in practice
            pointwise = _box_tail_2d(grid.nodes().reshape(-1, 2), grid.lo, grid.hi, self.s)
            self.tails = (pointwise.reshape(grid.shape) * grid.cell_volume,)
        self._W = _full_stencil(self._Wq)
        self.rowsum = self.conv(np.ones(grid.shape)) + sum(self.tails)

    def conv(self, v: np.ndarray) -> np.ndarray:
        """(W * v)_i = sum_j W_(i-j) v_j over box cells."""
        N = self.grid.shape[0]
        full = fftconvolve(v, self._W)
        sl = slice(N - 1, 2 * N - 1)
        return full[sl] if v.ndim == 1 else full[sl, sl]

    def far_sum(self, far) -> np.ndarray:
        return sum(c * T for c, T in zip(far, self.tails))

    def laplacian(self, u: np.ndarray, far) -> np.ndarray:
        hn = self.grid.cell_volume
        return 2.0 / hn * (u * self.rowsum - self.conv(u) - self.far_sum(far))

    def energy(self, u: np.ndarray, far, mask: np.ndarray) -> float:
        """K(u, Omega) with Omega the cells flagged in ``mask``."""
        far = tuple(far)
        shift = float(np.mean(u[mask])) if np.any(mask) else 0.0
        v = u - shift
        far = tuple(c - shift for c in far)
        chi = mask.astype(float)
        ext = 1.0 - chi
        cv = chi * v
        # Omega x Omega (ordered pairs, halved) + Omega x (box minus Omega)
        q_all = v * v * self.conv(chi) - 2 * v * self.conv(cv) + self.conv(cv * v)
        omega_omega = float(np.sum(chi * q_all))
        q_ext = v * v * self.conv(ext) - 2 * v * self.conv(ext * v) + self.conv(ext * v * v)
        omega_ext = float(np.sum(chi * q_ext))
        tail = float(sum(np.sum(chi * (v - c) ** 2 * T) for c, T in zip(far, self.tails)))
        return max(0.5 * omega_omega, 0.0) + max(omega_ext, 0.0) + tail

    def energy_gradient(self, u: np.ndarray, far, mask: np.ndarray):
        """Gradient of K with respect to cell values and far-field constants."""
        chi = mask.astype(float)
        g = np.where(mask, self.grid.cell_volume * self.laplacian(u, far),
                     2.0 * (u * self.conv(chi) - self.conv(chi * u)))
        gfar = tuple(-2.0 * float(np.sum(chi * (u - c) * T)) for c, T in zip(far, self.tails))
        return g, gfar

    def exterior_weights(self, mask: np.ndarray) -> np.ndarray:
        """Sum of weights from each cell to Omega (used for Jacobi scaling)."""
        return self.conv(mask.astype(float))


@lru_cache(maxsize=32)
def _cached_operator(grid: Grid, s: float) -> NonlocalOperator:
    return NonlocalOperator(grid, s)


def operator_for(grid: Grid, s: float) -> NonlocalOperator:
    """Shared operator per (grid, s); the instance is never mutated after build."""
    return _cached_operator(grid, float(s))


# ----------------------------------------------------------------------
# region-level functionals
# ----------------------------------------------------------------------

def _raster(region, grid: Grid) -> np.ndarray:
    return grid.mask(region).astype(float)


def _far_membership_1d(region: RegionSpec) -> tuple[bool, bool]:
    return (bool(region.contains(np.array([-1e300]))[0]),
            bool(region.contains(np.array([1e300]))[0]))


def interaction(A, B, params: KernelParams, window: Grid | None = None) -> float:
    """L(A, B) = double integral of |x-y|^(-n-2s) over A x B.

    1D interval unions use the closed form.  In 2D both sets are rasterized
    on ``window`` (cell-centre membership) and summed with the cell-pair
    stencil; parts of B beyond the window enter through ray-resolved tails.
    """
    s = params.s
    if A.dim != B.dim or A.dim != params.n:
        raise GeometryError("dimension mismatch")
    if A.dim == 1 and isinstance(A, RegionSpec) and isinstance(B, RegionSpec):
        return _iv_pairs_interaction(A.params, B.params, s)
    if window is None:
        raise GeometryError("2D interactions need a grid window")
    a_bounded = A.is_bounded
    if not a_bounded and B.is_bounded:
        A, B = B, A
    elif not a_bounded:
        raise GeometryError("at least one set must be bounded in 2D")
    a = _raster(A, window)
    b = _raster(B, window)
    if np.any(a * b > 0):
        raise GeometryError("sets overlap on a set of positive measure")
    if not np.any(a):
        return 0.0
    op = operator_for(window, s)
    inside = float(np.sum(a * op.conv(b)))
    idx = np.nonzero(a.reshape(-1))[0]
    pts = window.nodes().reshape(-1, 2)[idx]
    tail = _ray_tail(pts, B, window.lo, window.hi, s) * window.cell_volume
    return inside + float(np.sum(tail))


def _empty_like(region) -> bool:
    return isinstance(region, RegionSpec) and region.is_empty


def frac_perimeter(E, omega: RegionSpec, params: KernelParams, window: Grid | None = None) -> float:
    """Per_s(E, Omega) as the three-term sum of interactions; requires s < 1/2."""
    if not params.s < 0.5:
        raise DivergentInteraction("the three-term s-perimeter needs s < 1/2")
    if E.dim != omega.dim:
        raise GeometryError("dimension mismatch")
    if _empty_like(E):
        return 0.0
    Ec = complement(E)
    Oc = complement(omega)
    EO, EcO = intersect(E, omega), intersect(Ec, omega)
    EOc, EcOc = intersect(E, Oc), intersect(Ec, Oc)
    terms = [
        (EO, EcO),
        (EO, EcOc),
        (EOc, EcO),
    ]
    total = []
    for X, Y in terms:
        if _empty_like(X) or _empty_like(Y):
            continue
        total.append(interaction(X, Y, params, window))
    return math.fsum(total)


def classical_perimeter(E: RegionSpec, omega: RegionSpec) -> float:
    """Per(E, Omega); exact for parametric sets."""
    if isinstance(E, SetExpr):
        raise GeometryError("classical perimeter needs a parametric set")
    return _classical_perimeter(E, omega)


def gagliardo_K(u: ScalarField, omega, params: KernelParams) -> float:
    """K(u, Omega) = 1/2 u(Omega, Omega) + u(Omega, Omega^c) for piecewise-constant u."""
    if u.grid.dim != params.n:
        raise GeometryError("field and kernel dimensions differ")
    mask = u.grid.mask(omega)
    if not np.any(mask):
        raise GeometryError("omega does not cover any grid cell")
    op = operator_for(u.grid, params.s)
    return op.energy(u.values, u.far_field, mask)


def neville_at_zero(x, y) -> float:
    """Polynomial extrapolation of the points (x_i, y_i) to x = 0."""
    x = list(map(float, x))
    p = list(map(float, y))
    n = len(x)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (x[i + k] * p[i] - x[i] * p[i + 1]) / (x[i + k] - x[i])
    return p[0]


def rescaled_perimeter_limit(E, omega: RegionSpec, s_values, window: Grid | None = None) -> dict:
    """Table of (s, (1-2s) Per_s(E, Omega)) and its extrapolation to s = 1/2."""
    s_values = [float(s) for s in s_values]
    if not s_values:
        raise ValueError("s_values must be non-empty")
    if any(not 0 < s < 0.5 for s in s_values):
        raise ValueError("s_values must lie in (0, 1/2)")
    if any(b <= a for a, b in zip(s_values, s_values[1:])):
        raise ValueError("s_values must be increasing")
    rows = []
    for s in s_values:
        per = frac_perimeter(E, omega, KernelParams(s, omega.dim), window)
        rows.append((s, (1.0 - 2.0 * s) * per))
    delta = [1.0 - 2.0 * s for s, _ in rows]
    limit = neville_at_zero(delta, [v for _, v in rows]) if len(rows) > 1 else rows[0][1]
    return {"rows": rows, "limit": limit}

