"""Fractional Laplacian, nonlocal Neumann extension, the 1D optimal profile,
the surface-tension constant c_star and mass-corrected recovery sequences."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import GeometryError, Grid, RegionSpec, ScalarField, build_grid, indicator
from .energy import QUARTIC, allen_cahn_F_eps
from ._descent import FieldObjective, projected_bb
from .kernels import neville_at_zero, operator_for

__all__ = [
    "frac_laplacian",
    "neumann_extension",
    "ProfileTable",
    "ProfileNotConverged",
    "solve_profile",
    "estimate_cstar",
    "CstarEstimate",
    "bspline_bump",
    "RecoveryField",
    "build_recovery_sequence",
]


class ProfileNotConverged(RuntimeError):
    pass


def frac_laplacian(u: ScalarField, s: float, at=None) -> np.ndarray:
    """(-Delta)^s u = 2 PV int (u(x) - u(y)) |x-y|^(-n-2s) dy, averaged over each cell.

    Returns values at every cell when ``at`` is None, otherwise at the cells
    containing the points ``at``.
    """
    op = operator_for(u.grid, s)
    full = op.laplacian(u.values, u.far_field)
    if at is None:
        return full
    idx = u.grid.locate(at)
    if u.grid.dim == 1:
        return full[idx]
    return full[idx[:, 0], idx[:, 1]]


# ----------------------------------------------------------------------
# Neumann extension
# ----------------------------------------------------------------------

def _cell_kernel_1d(x: np.ndarray, a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    """int_a^b |x - y|^(-1-2s) dy for x outside [a, b]; rows are points."""
    x = x[:, None]
    near = np.where(x > b, x - b, a - x)
    far = np.where(x > b, x - a, b - x)
    if np.any(near <= 0):
        raise GeometryError("evaluation point touches omega")
    return (near ** (-2 * s) - far ** (-2 * s)) / (2 * s)


def neumann_extension(u: ScalarField, omega, s: float, at=None, mode: str = "pointwise") -> np.ndarray:
    """Kernel-weighted average of the values of u on Omega.

    ``mode="pointwise"`` evaluates

        u(x) = int_Omega u(y) |x-y|^(-n-2s) dy / int_Omega |x-y|^(-n-2s) dy

    at the points ``at`` with u piecewise constant on the cells of Omega.
    ``mode="cell"`` returns the cell-averaged version at every exterior cell
    of the grid, which is what stationarity of the discrete energy in the
    exterior unknowns enforces.
    """
    grid = u.grid
    mask = grid.mask(omega)
    if mode == "cell":
        op = operator_for(grid, s)
        num = op.conv(np.where(mask, u.values, 0.0))
        den = op.conv(mask.astype(float))
        out = np.full(grid.shape, np.nan)
        out[~mask] = num[~mask] / den[~mask]
        return out
    if mode != "pointwise":
        raise ValueError(f"unknown mode {mode!r}")
    pts = np.atleast_1d(np.asarray(at, dtype=float))
    if grid.dim == 1:
        pts = pts.reshape(-1)
        if np.any(omega.contains(pts)):
            raise GeometryError("Neumann extension is defined outside omega only")
        idx = np.nonzero(mask)[0]
        a = grid.lo[0] + idx * grid.h
        w = _cell_kernel_1d(pts, a, a + grid.h, s)
        vals = u.values[idx]
    else:
        pts = pts.reshape(-1, 2)
        if np.any(omega.contains(pts)):
            raise GeometryError("Neumann extension is defined outside omega only")
        centres = grid.nodes()[mask]
        d2 = np.sum((pts[:, None, :] - centres[None, :, :]) ** 2, axis=-1)
        if np.any(d2 < (0.5 * grid.h) ** 2):
            raise GeometryError("evaluation point touches omega")
        w = d2 ** (-1 - s) * grid.cell_volume
        vals = u.values[mask]
    return (w @ vals) / w.sum(axis=1)


# ----------------------------------------------------------------------
# optimal profile
# ----------------------------------------------------------------------

@dataclass
class ProfileTable:
    """Samples of the odd increasing 1D minimizer u0 on a cell-centred grid of (-L, L)."""

    t: np.ndarray
    u0: np.ndarray
    s: float
    L: float
    h: float
    C: float = math.nan
    residual: float = math.nan
    iterations: int = 0

    def __call__(self, x) -> np.ndarray:
        """Linear interpolation, clamped to -1/+1 beyond the table."""
        x = np.asarray(x, dtype=float)
        t = np.concatenate([[-self.L], self.t, [self.L]])
        v = np.concatenate([[-1.0], self.u0, [1.0]])
        out = np.interp(x, t, v)
        return np.where(x <= -self.L, -1.0, np.where(x >= self.L, 1.0, out))

    def tail_constant(self, lo_frac: float = 0.5) -> float:
        """max |1 - u0(t)| (1 + t)^(2s) over t in [lo_frac L, L]."""
        sel = self.t >= lo_frac * self.L
        return float(np.max(np.abs(1.0 - self.u0[sel]) * (1.0 + self.t[sel]) ** (2 * self.s)))

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "u0"])
            for a, b in zip(self.t, self.u0):
                w.writerow([f"{a:.17g}", f"{b:.17g}"])

    @staticmethod
    def from_csv(path, s: float) -> "ProfileTable":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t, u = data[:, 0], data[:, 1]
        h = float(t[1] - t[0])
        L = float(-t[0] + 0.5 * h)
        tab = ProfileTable(t, u, s, L, h)
        tab.C = tab.tail_constant()
        return tab


def solve_profile(s: float, L: float = 40.0, h: float = 0.05, tol: float = 1e-8,
                  max_iter: int = 20000) -> ProfileTable:
    """Minimize K(u, (-L, L)) + int W(u) with u = -1 left of -L and +1 right of L.

    Starts from tanh(t); every iterate is made odd so the translation mode
    cannot drift.  Converged when sup |(-Delta)^s u + W'(u)| < ``tol``.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    if L < 20 or not (0 < h <= 0.05):
        raise ValueError("solve_profile needs L >= 20 and 0 < h <= 0.05")
    n = int(round(2 * L / h))
    if n % 2:
        n += 1
    grid = Grid((-0.5 * n * h,), h, (n,))
    op = operator_for(grid, s)
    far = (-1.0, 1.0)
    mask = np.ones(n, dtype=bool)
    t = grid.axis()
    dW = QUARTIC.dW

    def odd(v):
        return 0.5 * (v - v[::-1])

    obj = FieldObjective(op, mask, mask, np.zeros(n), far)

    def project(z):
        return np.clip(odd(z), -1.0, 1.0)

    def el_residual(z, g):
        return float(np.max(np.abs(g))) / h

    res = projected_bb(obj, np.tanh(t), project, tol, max_iter, residual=el_residual)
    if not res.converged:
        raise ProfileNotConverged(f"profile residual {res.residual:.3e} after {res.iterations} iterations")
    u, it = res.z, res.iterations
    table = ProfileTable(t, u, s, 0.5 * n * h, h, iterations=it)
    el = op.laplacian(u, far) + dW(u)
    core = np.abs(t) <= 0.5 * table.L
    table.residual = float(np.max(np.abs(el[core])))
    table.C = table.tail_constant()
    return table


def profile_residual(table: ProfileTable, frac: float = 0.5) -> float:
    """sup |(-Delta)^s u0 + W'(u0)| over |t| <= frac L."""
    grid = Grid((-table.L,), table.h, (len(table.t),))
    op = operator_for(grid, table.s)
    el = op.laplacian(table.u0, (-1.0, 1.0)) + QUARTIC.dW(table.u0)
    core = np.abs(table.t) <= frac * table.L
    return float(np.max(np.abs(el[core])))


# ----------------------------------------------------------------------
# recovery fields and c_star
# ----------------------------------------------------------------------

def _profile_field(E: RegionSpec, grid: Grid, eps: float, table: ProfileTable, M: float = 2.0) -> ScalarField:
    d = E.signed_distance(grid.nodes())
    far = indicator(E, grid).far_field
    return ScalarField(grid, table(d / eps), far, M)


def _aligned_grid(omega: RegionSpec, h: float, half_width: float) -> Grid:
    """Box centred on omega whose half-width is a whole number of cells."""
    lo, hi = omega.bbox()
    c = 0.5 * (lo + hi)
    k = int(math.ceil(half_width / h - 1e-9))
    return Grid(tuple(float(v) for v in c - k * h), h, (2 * k,) * omega.dim, k * h)


@dataclass
class CstarEstimate:
    s: float
    eps: list
    values: list
    limit: float
    order: float
    interfaces: int = 1
    extras: dict = field(default_factory=dict)

    @property
    def per_interface(self) -> float:
        return self.limit / self.interfaces


def _richardson(eps, values, p: float) -> float:
    """Extrapolate V(eps) = c + A eps^p (+ higher order) to eps = 0 by Neville in eps^p."""
    x = [e ** p for e in eps]
    return neville_at_zero(x[-2:], values[-2:])


def estimate_cstar(s: float, table: ProfileTable | None = None,
                   eps_list=(0.1, 0.05, 0.025, 0.0125), E: RegionSpec | None = None,
                   omega: RegionSpec | None = None) -> CstarEstimate:
    """Extrapolate F_eps(u0(d/eps), Omega) to eps -> 0.

    The default set has a single interface in (-1, 1); the result divided by
    the number of interfaces estimates c_star.  The approach to the limit is
    O(eps^(2s-1)), which fixes the Richardson exponent.
    """
    if not 0.5 <= s < 1.0:
        raise ValueError("c_star is defined for s in [1/2, 1)")
    if table is None:
        table = solve_profile(s)
    omega = omega or RegionSpec.interval(-1.0, 1.0)
    E = E or RegionSpec.interval(0.0, math.inf)
    from .kernels import classical_perimeter

    interfaces = int(round(classical_perimeter(E, omega)))
    values = []
    for eps in eps_list:
        hx = eps * table.h
        half = max(1.0 + 4 * hx, table.L * eps + 1.0)
        grid = _aligned_grid(omega, hx, half)
        v = _profile_field(E, grid, eps, table)
        values.append(allen_cahn_F_eps(v, omega, s, eps, M=2.0).total)
    p = 2 * s - 1 if s > 0.5 else 1.0
    lim = _richardson(list(eps_list), values, p) if len(values) > 1 else values[0]
    return CstarEstimate(s, list(eps_list), values, lim, p, max(interfaces, 1))


def bspline_bump(x: np.ndarray, centre, radius: float) -> np.ndarray:
    """Cubic B-spline of |x - centre| / radius, support radius ``radius`` (unnormalized)."""
    x = np.asarray(x, dtype=float)
    if np.ndim(centre) == 0 or x.ndim == 1:
        r = np.abs(x - float(np.atleast_1d(centre)[0])) / radius
    else:
        r = np.linalg.norm(x - np.asarray(centre, dtype=float), axis=-1) / radius
    q = 2.0 * r
    return np.where(q < 1, 2 / 3 - q ** 2 + 0.5 * q ** 3,
                    np.where(q < 2, (2 - q) ** 3 / 6, 0.0))


@dataclass
class RecoveryField:
    field: ScalarField
    c_eps: float
    bump: np.ndarray


def build_recovery_sequence(E: RegionSpec, omega: RegionSpec, s: float, eps: float, m: float,
                            M: float = 2.0, grid: Grid | None = None, table: ProfileTable | None = None,
                            bump_centre=None, bump_radius: float = 0.2,
                            clearance: float = 0.05) -> RecoveryField:
    """u_eps = u0(d/eps) + c_eps phi with c_eps = m - int_Omega u0(d/eps).

    ``phi`` is a cubic B-spline bump normalized to unit discrete integral,
    placed inside Omega at distance at least ``clearance`` from the boundary
    of E and from the boundary of Omega.
    """
    if not 0.5 <= s < 1.0:
        raise ValueError("recovery sequences are built for s in [1/2, 1)")
    if grid is None:
        grid = build_grid(omega, min(0.01, eps / 8), 4.0)
    if table is None:
        table = solve_profile(s)
    if bump_centre is None:
        bump_centre = _default_bump_centre(E, omega, bump_radius, clearance)
    centre = np.atleast_1d(np.asarray(bump_centre, dtype=float))
    _check_bump(E, omega, centre, bump_radius, clearance)
    v = _profile_field(E, grid, eps, table, M)
    mask = grid.mask(omega)
    phi = np.where(mask, bspline_bump(grid.nodes(), centre if grid.dim == 2 else centre[0], bump_radius), 0.0)
    phi /= phi.sum() * grid.cell_volume
    c = m - float(np.sum(v.values[mask])) * grid.cell_volume
    vals = v.values + c * phi
    return RecoveryField(ScalarField(grid, vals, v.far_field, M), c, phi)


def _default_bump_centre(E, omega, radius, clearance):
    if omega.dim != 1:
        raise GeometryError("pass bump_centre explicitly in 2D")
    grid_pts = np.linspace(*[float(v[0]) for v in omega.bbox()], 2001)
    ok = omega.contains(grid_pts)
    dist_E = np.abs(E.signed_distance(grid_pts)) if not (E.is_empty or E.is_full) else np.full(grid_pts.shape, np.inf)
    dist_O = np.abs(omega.signed_distance(grid_pts))
    score = np.where(ok, np.minimum(dist_E, dist_O), -np.inf)
    best = grid_pts[int(np.argmax(score))]
    if score.max() < radius + clearance:
        raise GeometryError("no room for the bump away from the interface")
    return best


def _check_bump(E, omega, centre, radius, clearance):
    c = centre if omega.dim == 2 else centre[:1]
    pt = c.reshape(1, -1) if omega.dim == 2 else c
    if not omega.contains(pt)[0] or abs(float(omega.signed_distance(pt)[0])) < radius:
        raise GeometryError("bump support must lie inside omega")
    if not (E.is_empty or E.is_full):
        if abs(float(E.signed_distance(pt)[0])) < radius + clearance:
            raise GeometryError("bump support intersects the interface tube")
