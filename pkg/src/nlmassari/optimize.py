"""Minimization engines: Massari set families, Dirichlet-exterior and
mass-constrained Allen-Cahn fields, multiplier extraction, Lambda-minimality."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._descent import FieldObjective, projected_bb
from .domain import (
    GeometryError,
    Grid,
    RegionSpec,
    ScalarField,
    build_grid,
    indicator,
    intersect,
    symmetric_difference,
)
from .energy import (
    QUARTIC,
    EnergyBreakdown,
    ForcingSpec,
    allen_cahn_F_eps,
    c_ns,
    kappa_eps,
    massari_classical,
    massari_fractional,
    regime,
    total_E_eps,
)
from .kernels import KernelParams, classical_perimeter, frac_perimeter, gagliardo_K, operator_for

__all__ = [
    "MinimizeResult",
    "SetFamily",
    "half_line_family",
    "minimize_massari_set",
    "minimize_E_eps_dirichlet",
    "minimize_J1_dirichlet",
    "minimize_F_eps_mass",
    "minimize_F_eps_mass_multistart",
    "extract_multiplier",
    "stationarity_residual",
    "check_lambda_minimality",
    "ProjectionError",
]


class ProjectionError(RuntimeError):
    """Alternating clip / mass-shift projection failed to reach a joint point."""


@dataclass
class MinimizeResult:
    argmin: object
    iterations: int
    stationarity_residual: float
    energy: EnergyBreakdown | None
    lambda_eps: float | None = None
    mu_eps: float | None = None
    converged: bool = True
    label: str = "best-found"
    params: tuple = ()
    trace: list = field(default_factory=list)
    starts: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)


# ----------------------------------------------------------------------
# set families
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SetFamily:
    """Parametric sets ``build(*params)`` with box bounds per parameter."""

    build: Callable
    bounds: tuple
    scan_points: int = 201
    name: str = "family"

    def grid_points(self):
        axes = [np.linspace(lo, hi, self.scan_points) for lo, hi in self.bounds]
        return itertools.product(*axes)


def half_line_family(omega: RegionSpec, exterior: RegionSpec, scan_points: int = 201) -> SetFamily:
    """E_t = exterior outside Omega, (t, sup Omega) inside: a single interface at t."""
    if omega.dim != 1 or len(omega.params) != 1:
        raise GeometryError("half-line families need an interval omega")
    a, b = omega.params[0]

    def build(t):
        inside = RegionSpec.interval(t, b)
        outside = intersect(exterior, omega.complemented())
        return RegionSpec.intervals(*(inside.params + outside.params))

    return SetFamily(build, ((a, b),), scan_points, "half-line")


def _check_family_member(E: RegionSpec, exterior: RegionSpec, omega: RegionSpec):
    if E.dim == 1:
        diff = intersect(symmetric_difference(E, exterior), omega.complemented())
        if diff.measure() > 1e-12:
            raise GeometryError("family member differs from the exterior set outside omega")


def _massari_value(E, omega, s, forcing, window):
    if s is None:
        return massari_classical(E, omega, forcing, window)
    return massari_fractional(E, omega, s, forcing, window)


def minimize_massari_set(omega: RegionSpec, s: float | None, H, exterior: RegionSpec, family: SetFamily,
                         window: Grid | None = None, compact: RegionSpec | None = None) -> MinimizeResult:
    """Exhaustive scan over the family, then bounded Brent refinement per parameter.

    ``s=None`` minimizes the classical functional.  Ties keep the
    lexicographically smallest parameter vector.  With ``compact`` (a subset
    of Omega) the functional is localized there while competitors still
    vary over all of Omega.
    """
    family_omega = omega
    omega = omega if compact is None else compact
    forcing = H if isinstance(H, ForcingSpec) else ForcingSpec(H)
    best = None
    n_eval = 0
    for p in family.grid_points():
        E = family.build(*p)
        _check_family_member(E, exterior, family_omega)
        try:
            val = _massari_value(E, omega, s, forcing, window)
        except (ValueError, GeometryError):
            continue
        n_eval += 1
        if best is None or val < best[0] - 1e-12 * max(1.0, abs(best[0])):
            best = (val, tuple(float(v) for v in p))
    if best is None:
        raise ValueError("no feasible member in the family")
    val, params = best
    steps = [(hi - lo) / max(family.scan_points - 1, 1) for lo, hi in family.bounds]
    params = list(params)
    for k, (lo, hi) in enumerate(family.bounds):
        a, b = max(lo, params[k] - steps[k]), min(hi, params[k] + steps[k])
        if b <= a:
            continue

        def f(x, k=k):
            q = list(params)
            q[k] = x
            return _massari_value(family.build(*q), omega, s, forcing, window)

        r = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
        n_eval += r.nfev
        if r.fun < val - 1e-12 * max(1.0, abs(val)):
            val, params[k] = float(r.fun), float(r.x)
    E = family.build(*params)
    if s is None:
        per = classical_perimeter(E, omega)
    else:
        per = frac_perimeter(E, omega, KernelParams(s, omega.dim), window)
    energy = EnergyBreakdown(per, 0.0, val - per, 0.0, "classical" if s is None else regime(s))
    return MinimizeResult(E, n_eval, 0.0, energy, params=tuple(params), label="best-found")


# ----------------------------------------------------------------------
# field problems
# ----------------------------------------------------------------------

def _default_grid(omega: RegionSpec, eps: float, h: float | None, R: float) -> Grid:
    if h is None:
        h = min(0.01, eps / 8.0)
    return build_grid(omega, h, R)


def stationarity_residual(u: ScalarField, omega, s: float, eps: float, lam: float = 0.0,
                          forcing_density=None) -> float:
    """sup over Omega of |eps^2s (-Delta)^s u + W'(u) + lam (+ forcing density)|."""
    mask = u.grid.mask(omega)
    op = operator_for(u.grid, s)
    r = eps ** (2 * s) * op.laplacian(u.values, u.far_field) + QUARTIC.dW(u.values) + lam
    if forcing_density is not None:
        r = r + forcing_density
    return float(np.max(np.abs(r[mask])))


def extract_multiplier(u: ScalarField, omega, s: float, eps: float) -> tuple[float, float]:
    """lambda = -mean_Omega(eps^2s (-Delta)^s u + W'(u)), mu = kappa_eps lambda."""
    mask = u.grid.mask(omega)
    if np.any(np.abs(u.values[mask]) >= u.M):
        raise ValueError("box constraint active in omega: the multiplier identity does not hold")
    op = operator_for(u.grid, s)
    r = eps ** (2 * s) * op.laplacian(u.values, u.far_field) + QUARTIC.dW(u.values)
    lam = -float(np.mean(r[mask]))
    return lam, kappa_eps(s, eps) * lam


def _dirichlet_descent(omega, s, exterior_data: ScalarField, a_K: float, lin, M: float,
                       init: ScalarField | None, tol: float, max_iter: int):
    grid = exterior_data.grid
    mask = grid.mask(omega)
    ext_vals = exterior_data.values[~mask]
    if np.any(np.abs(ext_vals) > M) or any(abs(c) > M for c in exterior_data.far_field):
        raise ValueError("exterior data exceed the bound M")
    op = operator_for(grid, s)
    obj = FieldObjective(op, mask, mask, exterior_data.values.copy(), exterior_data.far_field,
                         a_K=a_K, a_W=1.0, lin=lin)
    u0 = (init.values if init is not None else exterior_data.values)[mask]

    def project(z):
        return np.clip(z, -M, M)

    res = projected_bb(obj, u0, project, tol, max_iter)
    u, far = obj.unpack(res.z)
    return ScalarField(grid, u, far, M), res


def minimize_E_eps_dirichlet(omega: RegionSpec, s: float, eps: float, forcing, exterior_data: ScalarField,
                             M: float = 2.0, init: ScalarField | None = None, tol: float = 1e-7,
                             max_iter: int = 20000) -> MinimizeResult:
    """Minimize E_eps over u on Omega with u fixed to ``exterior_data`` outside Omega."""
    forcing = forcing if isinstance(forcing, ForcingSpec) else ForcingSpec(forcing)
    kap = kappa_eps(s, eps)
    # work with E_eps / kappa: eps^2s K + int W + (c_ns / kappa) int H_eps u
    grid = exterior_data.grid
    lin = c_ns(s, grid.dim) * forcing.at_eps(grid.nodes(), s, eps) / kap
    lin = None if not np.any(lin) else lin
    field_out, res = _dirichlet_descent(omega, s, exterior_data, eps ** (2 * s), lin, M, init, tol, max_iter)
    energy = total_E_eps(field_out, omega, s, eps, forcing, M)
    trace = [(i, kap * f, r, math.nan, math.nan) for i, f, r in res.history]
    return MinimizeResult(field_out, res.iterations, res.residual, energy, converged=res.converged,
                          trace=trace)


def minimize_J1_dirichlet(omega: RegionSpec, s: float, exterior_data: ScalarField, M: float = 2.0,
                          init: ScalarField | None = None, tol: float = 1e-9,
                          max_iter: int = 20000) -> MinimizeResult:
    """Minimize the unit-scale energy K(u, Omega) + int_Omega W(u) with exterior data fixed.

    Its stationary points solve (-Delta)^s u + W'(u) = 0 in Omega.
    """
    field_out, res = _dirichlet_descent(omega, s, exterior_data, 1.0, None, M, init, tol, max_iter)
    K = gagliardo_K(field_out, omega, KernelParams(s, field_out.grid.dim))
    mask = field_out.grid.mask(omega)
    W = float(np.sum(QUARTIC.W(field_out.values[mask]))) * field_out.grid.cell_volume
    energy = EnergyBreakdown(K, W, 0.0, 0.0, regime(s), K, 1.0)
    el = float(np.max(np.abs((operator_for(field_out.grid, s).laplacian(field_out.values, field_out.far_field)
                              + QUARTIC.dW(field_out.values))[mask])))
    trace = [(i, f, r, math.nan, math.nan) for i, f, r in res.history]
    return MinimizeResult(field_out, res.iterations, el, energy, converged=res.converged, trace=trace)


def _mass_projector(mask: np.ndarray, nfree_cells: int, hn: float, m: float, M: float, tol: float):
    n_om = int(mask.sum())
    target = m / hn
    flat_mask = mask.reshape(-1)

    def project(z):
        z = z.copy()
        u = z[:nfree_cells]
        for _ in range(100):
            np.clip(u, -M, M, out=u)
            c = (target - float(np.sum(u[flat_mask]))) / n_om
            u[flat_mask] += c
            if np.max(np.abs(u)) <= M:
                break
        else:
            err = abs(float(np.sum(u[flat_mask])) * hn - m)
            if np.max(np.abs(u)) > M or err > tol:
                raise ProjectionError("clip and mass shift did not reach a joint point")
        np.clip(z[nfree_cells:], -M, M, out=z[nfree_cells:])
        return z

    return project


def _mass_init(kind, omega: RegionSpec, grid: Grid, m: float, M: float) -> ScalarField:
    if isinstance(kind, ScalarField):
        return kind
    nodes = grid.nodes()
    if kind == "minus":
        return ScalarField(grid, -np.ones(grid.shape), (-1.0,) * (2 if grid.dim == 1 else 1), M)
    if kind == "plus":
        return ScalarField(grid, np.ones(grid.shape), (1.0,) * (2 if grid.dim == 1 else 1), M)
    if kind == "indicator":
        return indicator(_mass_matching_set(omega, grid, m), grid, M)
    if kind == "zero":
        return ScalarField(grid, np.zeros(grid.shape), (0.0,) * (2 if grid.dim == 1 else 1), M)
    if callable(kind):
        vals = np.asarray(kind(nodes), dtype=float)
        return ScalarField(grid, vals, (float(vals.reshape(-1)[0]), float(vals.reshape(-1)[-1]))
                           if grid.dim == 1 else (float(vals.reshape(-1)[0]),), M)
    raise ValueError(f"unknown initialization {kind!r}")


def _mass_matching_set(omega: RegionSpec, grid: Grid, m: float) -> RegionSpec:
    """Set E = {x_1 > t} with |E cap Omega| - |Omega minus E| = m on the grid."""
    mask = grid.mask(omega)
    x1 = grid.nodes() if grid.dim == 1 else grid.nodes()[..., 0]
    xs = np.sort(x1[mask].reshape(-1))
    n_in = int(round((m / grid.cell_volume + len(xs)) / 2))
    n_in = min(max(n_in, 0), len(xs))
    if n_in == 0:
        t = xs[-1] + grid.h
    elif n_in == len(xs):
        t = xs[0] - grid.h
    else:
        t = 0.5 * (xs[len(xs) - n_in - 1] + xs[len(xs) - n_in])
    if grid.dim == 1:
        return RegionSpec.interval(t, math.inf)
    return RegionSpec.half_space((1.0, 0.0), t)


def minimize_F_eps_mass(omega: RegionSpec, s: float, eps: float, m: float, M: float = 2.0,
                        init="indicator", grid: Grid | None = None, h: float | None = None, R: float = 4.0,
                        tol: float = 1e-9, max_iter: int = 50000, mass_tol: float = 1e-8) -> MinimizeResult:
    """Minimize F_eps over Z_{M,m}: every box cell and the far-field constants are unknowns."""
    area = omega.measure()
    if not abs(m) < area:
        raise ValueError("mass must satisfy |m| < |omega|")
    grid = grid or _default_grid(omega, eps, h, R)
    mask = grid.mask(omega)
    op = operator_for(grid, s)
    start = _mass_init(init, omega, grid, m, M)
    N = grid.size
    free = np.ones(grid.shape, dtype=bool)
    obj = FieldObjective(op, mask, free, start.values, start.far_field, a_K=eps ** (2 * s), a_W=1.0,
                         far_free=True)
    # uniform scaling on Omega keeps the mass projection a plain shift
    D = obj.diag()
    flat = mask.reshape(-1)
    D[:N][flat] = float(np.max(D[:N][flat]))
    obj.diag = lambda: D
    project = _mass_projector(mask, N, grid.cell_volume, m, M, mass_tol)
    kap = kappa_eps(s, eps)
    trace = []

    def record(it, f, res, z):
        u = z[:N]
        mass_err = abs(float(np.sum(u[flat])) * grid.cell_volume - m)
        trace.append((it, kap * f, res, mass_err, math.nan))

    out = projected_bb(obj, obj.pack(start.values, start.far_field), project, tol, max_iter, trace=record)
    u, far = obj.unpack(out.z)
    u = u.reshape(grid.shape)
    result_field = ScalarField(grid, u, far, M)
    energy = allen_cahn_F_eps(result_field, omega, s, eps, M)
    try:
        lam, mu = extract_multiplier(result_field, omega, s, eps)
    except ValueError:
        lam = mu = math.nan
    if trace:
        it, f, r, me, _ = trace[-1]
        trace[-1] = (it, f, r, me, lam)
    el = stationarity_residual(result_field, omega, s, eps, lam) if math.isfinite(lam) else math.inf
    extras = {"projected_step": out.residual,
              "mass_error": abs(result_field.integral(omega) - m),
              "init": init if isinstance(init, str) else "custom"}
    return MinimizeResult(result_field, out.iterations, el, energy, lam, mu, out.converged,
                          trace=trace, extras=extras)


def minimize_F_eps_mass_multistart(omega: RegionSpec, s: float, eps: float, m: float, M: float = 2.0,
                                   inits: Sequence = ("minus", "plus", "indicator"), **kw) -> MinimizeResult:
    """Run every canonical start and keep the lowest F_eps (labelled best-found)."""
    results = [minimize_F_eps_mass(omega, s, eps, m, M, init=k, **kw) for k in inits]
    best = min(results, key=lambda r: (r.energy.total, inits.index(r.extras["init"])
                                       if r.extras["init"] in inits else 99))
    best.starts = [(r.extras["init"], r.energy.total, r.converged, r.iterations) for r in results]
    best.label = "best-found"
    return best


# ----------------------------------------------------------------------
# Lambda-minimality
# ----------------------------------------------------------------------

@dataclass
class LambdaReport:
    Lambda: float
    base_perimeter: float
    margins: list
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def check_lambda_minimality(E: RegionSpec, omega: RegionSpec, s: float, Lambda: float,
                            competitors: Sequence[RegionSpec], window: Grid | None = None,
                            tol: float = 1e-9) -> LambdaReport:
    """Margins Per_s(F) + Lambda |E delta F| - Per_s(E) for each competitor F."""
    params = KernelParams(s, omega.dim)
    base = frac_perimeter(E, omega, params, window)
    margins = []
    violations = []
    for k, F in enumerate(competitors):
        if E.dim != 1:
            raise GeometryError("Lambda-minimality checks are exact in 1D only")
        diff = symmetric_difference(E, F)
        if intersect(diff, omega.complemented()).measure() > 1e-12:
            raise GeometryError("competitor differs from E outside omega")
        margin = frac_perimeter(F, omega, params, window) + Lambda * diff.measure() - base
        margins.append(margin)
        if margin < -tol * max(1.0, abs(base)):
            violations.append(k)
    return LambdaReport(float(Lambda), base, margins, violations)

