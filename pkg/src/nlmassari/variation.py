"""First variation of K along flows: the hybrid mean curvature of a couple.

The flow of a compactly supported field X moves the phase interface inside
Omega while the exterior data stay put.  ``hybrid_mean_curvature``
differentiates K along that flow and ``constancy_diagnostic`` compares the
ratios delta K[X] / int_{E cap Omega} div X across a library of fields.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import GeometryError, RegionSpec, ScalarField, intersect
from .kernels import G, operator_for

__all__ = [
    "Bump",
    "VectorFieldSpec",
    "FlowError",
    "CurvatureNotConverged",
    "CurvatureEstimate",
    "ConstancyReport",
    "flow_pushforward",
    "hybrid_mean_curvature",
    "constancy_diagnostic",
]

T_LEVELS = (1e-2, 5e-3)
# max of |psi'| for psi(rho) = (1 - rho^2)^2, attained at rho = 1/sqrt(3)
_PSI_LIP = 8.0 / (3.0 * math.sqrt(3.0))


class FlowError(ValueError):
    """Flow time too large for the explicit flow map to stay a diffeomorphism."""


class CurvatureNotConverged(RuntimeError):
    """The two finite-difference levels disagree beyond the estimator tolerance."""


@dataclass(frozen=True)
class Bump:
    """amplitude * (1 - |x - centre|^2 / radius^2)^2 * direction inside the ball."""

    centre: tuple
    radius: float
    direction: tuple
    amplitude: float = 1.0

    def profile(self, x):
        d = x - np.asarray(self.centre)
        r2 = np.sum(d * d, axis=-1) / self.radius ** 2
        inside = r2 < 1.0
        psi = np.where(inside, (1.0 - r2) ** 2, 0.0)
        # gradient of psi: -4 (1 - r2) d / radius^2
        dpsi = np.where(inside[..., None], -4.0 * (1.0 - r2)[..., None] * d / self.radius ** 2, 0.0)
        return psi, dpsi


@dataclass(frozen=True)
class VectorFieldSpec:
    """Finite linear combination of C^1 bumps; 1D fields use 1-tuples."""

    terms: tuple = ()
    dim: int = 1
    name: str = ""

    @staticmethod
    def bump(centre, radius: float, direction=1.0, amplitude: float = 1.0, name: str = "") -> "VectorFieldSpec":
        c = tuple(float(v) for v in np.atleast_1d(centre))
        d = np.atleast_1d(np.asarray(direction, dtype=float))
        if d.size != len(c):
            raise GeometryError("direction and centre dimensions differ")
        nrm = float(np.linalg.norm(d))
        if nrm == 0.0 or not radius > 0:
            raise GeometryError("bump needs a nonzero direction and positive radius")
        b = Bump(c, float(radius), tuple(d / nrm), float(amplitude))
        return VectorFieldSpec((b,), len(c), name or f"bump@{c}")

    @staticmethod
    def zero(dim: int = 1) -> "VectorFieldSpec":
        return VectorFieldSpec((), dim, "zero")

    def __add__(self, other: "VectorFieldSpec") -> "VectorFieldSpec":
        if self.dim != other.dim:
            raise GeometryError("cannot add fields of different dimension")
        return VectorFieldSpec(self.terms + other.terms, self.dim, f"{self.name}+{other.name}")

    def __mul__(self, a: float) -> "VectorFieldSpec":
        terms = tuple(Bump(b.centre, b.radius, b.direction, a * b.amplitude) for b in self.terms)
        return VectorFieldSpec(terms, self.dim, f"{a:g}*{self.name}")

    __rmul__ = __mul__

    def __neg__(self) -> "VectorFieldSpec":
        return self * -1.0

    def _points(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return x[..., None]
        return x

    def __call__(self, x) -> np.ndarray:
        """Field values; shape of ``x`` in 1D, ``x.shape`` with trailing 2 in 2D."""
        p = self._points(x)
        out = np.zeros(p.shape)
        for b in self.terms:
            psi, _ = b.profile(p)
            out += b.amplitude * psi[..., None] * np.asarray(b.direction)
        return out[..., 0] if self.dim == 1 else out

    def divergence(self, x) -> np.ndarray:
        p = self._points(x)
        out = np.zeros(p.shape[:-1])
        for b in self.terms:
            _, dpsi = b.profile(p)
            out += b.amplitude * (dpsi @ np.asarray(b.direction))
        return out

    def lipschitz(self) -> float:
        return sum(abs(b.amplitude) * _PSI_LIP / b.radius for b in self.terms)

    def sup(self) -> float:
        return sum(abs(b.amplitude) for b in self.terms)

    def check_support(self, omega: RegionSpec) -> None:
        for b in self.terms:
            if not float(omega.signed_distance(np.asarray(b.centre).reshape(
                    (1,) if self.dim == 1 else (1, 2)))[0]) > b.radius:
                raise GeometryError(f"support of {self.name or 'X'} is not strictly inside omega")

    def divergence_integral(self, E: RegionSpec, omega: RegionSpec, window=None) -> float:
        """int_{E cap Omega} div X.  Exact in 1D; cell quadrature on ``window`` in 2D."""
        if self.dim == 1:
            inter = intersect(E, omega)
            total = 0.0
            for a, b in inter.params:
                total += float(self(np.array([b]))[0]) - float(self(np.array([a]))[0])
            return total
        if window is None:
            raise GeometryError("2D divergence integrals need a grid window")
        nodes = window.nodes()
        m = window.mask(E) & window.mask(omega)
        return float(np.sum(self.divergence(nodes)[m])) * window.cell_volume

    def describe(self) -> dict:
        return {"name": self.name,
                "bumps": [{"centre": list(b.centre), "radius": b.radius, "direction": list(b.direction),
                           "amplitude": b.amplitude} for b in self.terms]}


def _rk4_flow(X: VectorFieldSpec, y: np.ndarray, t: float, steps: int = 8) -> np.ndarray:
    dt = t / steps
    for _ in range(steps):
        k1 = X(y)
        k2 = X(y + 0.5 * dt * k1)
        k3 = X(y + 0.5 * dt * k2)
        k4 = X(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def _pushforward_1d(u: ScalarField, X: VectorFieldSpec, t: float) -> np.ndarray:
    g = u.grid
    edges = g.lo[0] + np.arange(g.shape[0] + 1) * g.h
    moved = _rk4_flow(X, edges, t)
    changed = moved != edges
    out = u.values.copy()
    if not np.any(changed):
        return out
    # cells whose edges move, padded by the largest displacement in cells
    reach = int(math.ceil(float(np.max(np.abs(moved - edges))) / g.h)) + 1
    idx = np.nonzero(changed)[0]
    i0 = max(int(idx[0]) - reach, 0)
    i1 = min(int(idx[-1]) + reach, g.shape[0])
    # the transported field equals u_j on [moved_j, moved_{j+1}]; integrate it exactly
    knots = moved[i0:i1 + 1]
    cum = np.concatenate([[0.0], np.cumsum(u.values[i0:i1] * np.diff(knots))])
    C = np.interp(edges[i0:i1 + 1], knots, cum)
    out[i0:i1] = np.diff(C) / g.h
    return out


def _pushforward_2d(u: ScalarField, X: VectorFieldSpec, t: float, sub: int) -> np.ndarray:
    g = u.grid
    out = u.values.copy()
    if not X.terms:
        return out
    pad = abs(t) * X.sup() + g.h
    lo = np.min([np.asarray(b.centre) - b.radius for b in X.terms], axis=0) - pad
    hi = np.max([np.asarray(b.centre) + b.radius for b in X.terms], axis=0) + pad
    ilo = np.clip(np.floor((lo - np.asarray(g.lo)) / g.h).astype(int), 0, None)
    ihi = np.minimum(np.ceil((hi - np.asarray(g.lo)) / g.h).astype(int), np.asarray(g.shape))
    offs = (np.arange(sub) + 0.5) / sub
    ix = np.arange(ilo[0], ihi[0])
    iy = np.arange(ilo[1], ihi[1])
    px = g.lo[0] + (ix[:, None] + offs[None, :]) * g.h
    py = g.lo[1] + (iy[:, None] + offs[None, :]) * g.h
    P = np.stack(np.meshgrid(px.ravel(), py.ravel(), indexing="ij"), axis=-1)
    back = _rk4_flow(X, P.reshape(-1, 2), -t)
    ij = g.locate(back)
    vals = u.values[ij[:, 0], ij[:, 1]].reshape(len(ix), sub, len(iy), sub)
    out[np.ix_(ix, iy)] = vals.mean(axis=(1, 3))
    return out


def flow_pushforward(u: ScalarField, X: VectorFieldSpec, t: float, sub: int = 8) -> ScalarField:
    """Transport u along the flow of X for time t: the cell averages of u o phi_{-t}.

    In 1D the averages are exact for piecewise-constant u.  In 2D each cell is
    sampled on a ``sub`` x ``sub`` lattice of pulled-back points.
    """
    if X.dim != u.grid.dim:
        raise GeometryError("field and grid dimensions differ")
    if abs(t) * X.lipschitz() >= 0.5:
        raise FlowError("|t| Lip(X) must stay below 0.5")
    if t == 0.0 or not X.terms:
        return u.copy()
    vals = _pushforward_1d(u, X, t) if u.grid.dim == 1 else _pushforward_2d(u, X, t, sub)
    return u.copy(values=vals)


def _omega_pieces_1d(u: ScalarField, mask: np.ndarray):
    """Maximal runs of equal values among the Omega cells: (left, right, value)."""
    g = u.grid
    idx = np.nonzero(mask)[0]
    left = g.lo[0] + idx * g.h
    right = g.lo[0] + (idx + 1) * g.h
    vals = u.values[idx]
    brk = np.ones(len(idx), dtype=bool)
    brk[1:] = (np.diff(idx) != 1) | (vals[1:] != vals[:-1])
    starts = np.nonzero(brk)[0]
    ends = np.append(starts[1:], len(idx))
    return left[starts], right[ends - 1], vals[starts]


def _pair_L(a, b, c, d, s):
    """int_a^b int_c^d |x-y|^(-1-2s) for b <= c (broadcasting; s < 1/2)."""
    # touching edges can cross by a rounding error
    def Gp(r):
        return G(np.maximum(r, 0.0), s)
    return Gp(c - a) - Gp(c - b) - Gp(d - a) + Gp(d - b)


def _exact_K_1d(pl, pr, pv, u: ScalarField, mask: np.ndarray, s: float, chunk: int = 256) -> float:
    """K of the function equal to ``pv`` on the pieces [pl, pr] of Omega and to
    the cell values of ``u`` outside, with closed-form pair integrals."""
    g = u.grid
    ext = np.nonzero(~mask)[0]
    el = g.lo[0] + ext * g.h
    er = g.lo[0] + (ext + 1) * g.h
    ev = u.values[ext]
    lo, hi = g.lo[0], g.hi[0]
    terms = []
    for k0 in range(0, len(pl), chunk):
        a, b, v = pl[k0:k0 + chunk, None], pr[k0:k0 + chunk, None], pv[k0:k0 + chunk, None]
        # Omega x Omega, each unordered pair once
        j = np.arange(len(pl))[None, :]
        later = j > np.arange(k0, k0 + a.shape[0])[:, None]
        L = np.where(later, _pair_L(a, b, pl[None, :], pr[None, :], s), 0.0)
        terms.append(float(np.sum((v - pv[None, :]) ** 2 * L)))
        # Omega x exterior cells, each side ordered so the left interval comes first
        right_side = el[None, :] >= b
        L = np.where(right_side, _pair_L(a, b, el[None, :], er[None, :], s),
                     _pair_L(el[None, :], er[None, :], a, b, s))
        terms.append(float(np.sum((v - ev[None, :]) ** 2 * L)))
        # half-lines beyond the box
        TL = G(b - lo, s) - G(a - lo, s)
        TR = G(hi - a, s) - G(hi - b, s)
        terms.append(float(np.sum((v - u.far_field[0]) ** 2 * TL + (v - u.far_field[1]) ** 2 * TR)))
    return math.fsum(terms)


@dataclass
class CurvatureEstimate:
    value: float
    error: float
    levels: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def hybrid_mean_curvature(u: ScalarField, omega: RegionSpec, s: float, X: VectorFieldSpec,
                          t_levels=T_LEVELS, rtol: float = 0.1, atol: float = 1e-4) -> CurvatureEstimate:
    """delta K(u, Omega)[X] by central differences in t with one Richardson step.

    The error bar is the Richardson correction itself.  Raises
    ``CurvatureNotConverged`` when the two levels disagree by more than
    ``rtol`` relative plus ``atol`` times K(u), which signals an under-resolved
    interface.
    """
    if not 0.0 < s < 0.5:
        raise ValueError("the hybrid curvature is defined for s in (0, 1/2)")
    t1, t2 = (float(v) for v in t_levels)
    if u.grid.h > min(t1, t2) / 4.0:
        raise GeometryError(f"grid too coarse: need h <= {min(t1, t2) / 4.0:g}")
    X.check_support(omega)
    mask = u.grid.mask(omega)
    if u.grid.dim == 1:
        # transport the jump points themselves: cell averages of a moved jump
        # carry an O(1) energy oscillation per cell crossed
        pl, pr, pv = _omega_pieces_1d(u, mask)

        def K_at(t):
            if abs(t) * X.lipschitz() >= 0.5:
                raise FlowError("|t| Lip(X) must stay below 0.5")
            return _exact_K_1d(_rk4_flow(X, pl, t), _rk4_flow(X, pr, t), pv, u, mask, s)
    else:
        op = operator_for(u.grid, s)

        def K_at(t):
            v = flow_pushforward(u, X, t)
            return op.energy(v.values, v.far_field, mask)

    def central(t):
        return (K_at(t) - K_at(-t)) / (2.0 * t)

    d1, d2 = central(t1), central(t2)
    r = (t1 / t2) ** 2
    value = (r * d2 - d1) / (r - 1.0)
    err = abs(d2 - d1) / (r - 1.0)
    if abs(d2 - d1) > rtol * max(abs(d1), abs(d2)) + atol * max(K_at(0.0), 1.0):
        raise CurvatureNotConverged(f"levels disagree: {d1:.6g} vs {d2:.6g}")
    return CurvatureEstimate(value, err, {str(t1): d1, str(t2): d2})


@dataclass
class ConstancyReport:
    ratios: dict
    errors: dict
    excluded: list
    mean: float
    spread: float
    constant: bool
    zero: bool
    degenerate: bool
    tolerance: float = 0.1

    def as_dict(self) -> dict:
        def num(v):
            return v if isinstance(v, float) and math.isfinite(v) else None
        return {
            "ratios": {k: num(v) for k, v in self.ratios.items()},
            "errors": {k: num(v) for k, v in self.errors.items()},
            "excluded": list(self.excluded),
            "mean": num(self.mean),
            "spread": num(self.spread),
            "constant": self.constant,
            "zero": self.zero,
            "degenerate": self.degenerate,
            "tolerance": self.tolerance,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)


def _phase_set(u: ScalarField, omega: RegionSpec) -> RegionSpec:
    """The set E with u = chi_E - chi_{E^c} on Omega (1D: read off the cell values)."""
    g = u.grid
    mask = g.mask(omega)
    vals = u.values[mask]
    if not np.allclose(np.abs(vals), 1.0, atol=1e-12):
        raise ValueError("u must be a signed indicator on omega")
    if g.dim != 1:
        raise GeometryError("E must be passed explicitly in 2D")
    x = g.axis(0)
    inside = (u.values > 0) & mask
    pairs, start = [], None
    for k in range(g.shape[0]):
        if inside[k] and start is None:
            start = x[k] - 0.5 * g.h
        if start is not None and (not inside[k]):
            pairs.append((start, x[k] - 0.5 * g.h))
            start = None
    if start is not None:
        pairs.append((start, g.hi[0]))
    return RegionSpec.intervals(*pairs) if pairs else RegionSpec.empty(1)


def constancy_diagnostic(u: ScalarField, omega: RegionSpec, s: float, fields, E: RegionSpec | None = None,
                         tolerance: float = 0.1, min_denominator: float = 1e-8) -> ConstancyReport:
    """Ratios delta K[X] / int_{E cap Omega} div X over a library of fields.

    Fields with a denominator below ``min_denominator`` are listed in
    ``excluded``.  ``constant`` flags a relative spread within ``tolerance``;
    ``zero`` flags every ratio vanishing within its error bar.
    """
    mask = u.grid.mask(omega)
    if np.ptp(u.values[mask]) == 0.0:
        return ConstancyReport({}, {}, [X.name for X in fields], math.nan, math.nan, False, True, True, tolerance)
    E = E if E is not None else _phase_set(u, omega)
    ratios, errors, excluded = {}, {}, []
    for k, X in enumerate(fields):
        key = X.name or f"X{k}"
        den = X.divergence_integral(E, omega, u.grid)
        if abs(den) < min_denominator:
            excluded.append(key)
            continue
        est = hybrid_mean_curvature(u, omega, s, X)
        ratios[key] = est.value / den
        errors[key] = est.error / abs(den)
    if not ratios:
        return ConstancyReport({}, {}, excluded, math.nan, math.nan, False, False, True, tolerance)
    vals = np.array(list(ratios.values()))
    errs = np.array(list(errors.values()))
    mean = float(np.mean(vals))
    spread = float(np.ptp(vals) / abs(mean)) if mean != 0.0 else math.inf
    zero = bool(np.all(np.abs(vals) <= errs + 1e-8 * max(1.0, float(np.max(np.abs(vals))))))
    return ConstancyReport(ratios, errors, excluded, mean, spread, len(ratios) >= 2 and spread <= tolerance,
                           zero, False, tolerance)
