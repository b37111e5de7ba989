"""Potential, scaling constants, Massari functionals and Allen-Cahn energies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .domain import GeometryError, Grid, RegionSpec, ScalarField, intersect
from .kernels import KernelParams, classical_perimeter, frac_perimeter, gagliardo_K

__all__ = [
    "PotentialSpec",
    "potential_W",
    "kappa_eps",
    "c_ns",
    "omega_ball",
    "regime",
    "ForcingSpec",
    "EnergyBreakdown",
    "massari_fractional",
    "massari_classical",
    "script_P",
    "allen_cahn_F_eps",
    "total_E_eps",
    "total_G_eps",
]


@dataclass(frozen=True)
class PotentialSpec:
    """Double well with zeros at +-1; defaults to (1 - t^2)^2 / 4."""

    W: Callable = lambda t: 0.25 * (1.0 - t * t) ** 2
    dW: Callable = lambda t: -t * (1.0 - t * t)
    d2W: Callable = lambda t: 3.0 * t * t - 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.W(t), self.dW(t), self.d2W(t)


QUARTIC = PotentialSpec()


def potential_W(t):
    """(W, W', W'') of the model quartic well."""
    W, dW, d2W = QUARTIC(t)
    if np.ndim(W) == 0:
        return float(W), float(dW), float(d2W)
    return W, dW, d2W


def regime(s: float) -> str:
    if s < 0.5:
        return "sub-half"
    return "half" if s == 0.5 else "super-half"


def kappa_eps(s: float, eps: float) -> float:
    """Energy rescale: eps^-2s, 1/|eps log eps| or 1/eps depending on s."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    if s < 0.5:
        return eps ** (-2.0 * s)
    if s == 0.5:
        return 1.0 / abs(eps * math.log(eps))
    return 1.0 / eps


def omega_ball(n: int) -> float:
    """Volume of the unit ball in R^n (omega_0 = 1)."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def c_ns(s: float, n: int) -> float:
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    if s < 0.5:
        return 1.0 / (2.0 * (1.0 - 2.0 * s))
    return 1.0 / (2.0 * omega_ball(n - 1))


@dataclass(frozen=True)
class ForcingSpec:
    """Macroscopic forcing H and its microscopic family H_eps = 2 kappa_eps g_eps.

    ``H`` is a constant or a callable of the coordinates.  ``g_eps(x, eps, s)``
    is the microscopic term; when omitted, H_eps = H for every eps.
    """

    H: float | Callable = 0.0
    g_eps: Callable | None = None
    label: str = "constant"

    @staticmethod
    def constant(value: float) -> "ForcingSpec":
        return ForcingSpec(float(value))

    @staticmethod
    def oscillatory(value: float, amplitude: float = 1.0) -> "ForcingSpec":
        """H_eps = H + amplitude * eps * sin(x1 / eps), so H_eps -> H in L^1."""
        def g(x, eps, s):
            x1 = x if np.ndim(x) == 1 or np.shape(x)[-1] != 2 else x[..., 0]
            return (value + amplitude * eps * np.sin(x1 / eps)) / (2.0 * kappa_eps(s, eps))
        return ForcingSpec(float(value), g, "oscillatory")

    @property
    def is_constant(self) -> bool:
        return not callable(self.H) and self.g_eps is None

    def limit(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = x.shape if x.ndim == 1 or x.shape[-1] != 2 else x.shape[:-1]
        if callable(self.H):
            return np.broadcast_to(np.asarray(self.H(x), dtype=float), shape)
        return np.full(shape, float(self.H))

    def at_eps(self, x, s: float, eps: float) -> np.ndarray:
        if self.g_eps is None:
            return self.limit(x)
        return 2.0 * kappa_eps(s, eps) * np.asarray(self.g_eps(x, eps, s), dtype=float)

    def sup(self, grid: Grid) -> float:
        return float(np.max(np.abs(self.limit(grid.nodes()))))


def _as_forcing(H) -> ForcingSpec:
    if isinstance(H, ForcingSpec):
        return H
    if H is None:
        return ForcingSpec(0.0)
    return ForcingSpec(H)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Itemized energy.  ``gagliardo`` and ``potential`` already carry kappa_eps,
    so ``total`` is the plain sum of the four parts; ``K`` and ``kappa`` keep
    the raw ingredients."""

    gagliardo: float
    potential: float
    forcing: float = 0.0
    multiplier_term: float = 0.0
    scaling_regime: str = "sub-half"
    K: float = 0.0
    kappa: float = 1.0
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.gagliardo + self.potential + self.forcing + self.multiplier_term)

    def with_terms(self, forcing: float | None = None, multiplier_term: float | None = None) -> "EnergyBreakdown":
        return EnergyBreakdown(self.gagliardo, self.potential,
                               self.forcing if forcing is None else forcing,
                               self.multiplier_term if multiplier_term is None else multiplier_term,
                               self.scaling_regime, self.K, self.kappa)

    def as_dict(self) -> dict:
        return {
            "gagliardo": self.gagliardo,
            "potential": self.potential,
            "forcing": self.forcing,
            "multiplier_term": self.multiplier_term,
            "scaling_regime": self.scaling_regime,
            "K": self.K,
            "kappa": self.kappa,
            "total": self.total,
        }


# ----------------------------------------------------------------------
# Massari functionals
# ----------------------------------------------------------------------

def _integral_over(region, forcing: ForcingSpec, window: Grid | None) -> float:
    """int_region H for a bounded region."""
    if forcing.is_constant:
        h = float(forcing.H)
        if h == 0.0:
            return 0.0
        if isinstance(region, RegionSpec) and region.dim == 1:
            return h * region.measure()
        if window is None:
            if isinstance(region, RegionSpec):
                return h * region.measure()
            raise GeometryError("composite 2D sets need a grid window")
        return h * float(np.count_nonzero(window.mask(region))) * window.cell_volume
    if isinstance(region, RegionSpec) and region.dim == 1:
        return math.fsum(integrate.quad(lambda x: float(forcing.limit(np.array([x]))[0]), a, b,
                                        epsabs=1e-13, epsrel=1e-12, limit=200)[0]
                         for a, b in region.params)
    if window is None:
        raise GeometryError("non-constant 2D forcing needs a grid window")
    m = window.mask(region)
    return float(np.sum(forcing.limit(window.nodes())[m])) * window.cell_volume


def _check_bounded_omega(omega):
    if not omega.is_bounded:
        raise GeometryError("omega must be bounded")


def massari_fractional(E, omega: RegionSpec, s: float, H=0.0, window: Grid | None = None) -> float:
    """Per_s(E, Omega) + (1/(1-2s)) int_{Omega cap E} H."""
    if not 0.0 < s < 0.5:
        raise ValueError("the fractional Massari functional needs s in (0, 1/2)")
    _check_bounded_omega(omega)
    forcing = _as_forcing(H)
    per = frac_perimeter(E, omega, KernelParams(s, omega.dim), window)
    return per + _integral_over(intersect(E, omega), forcing, window) / (1.0 - 2.0 * s)


def massari_classical(E: RegionSpec, omega: RegionSpec, H=0.0, window: Grid | None = None) -> float:
    """Per(E, Omega) + (1/omega_{n-1}) int_{Omega cap E} H."""
    _check_bounded_omega(omega)
    forcing = _as_forcing(H)
    vol = _integral_over(intersect(E, omega), forcing, window)
    return classical_perimeter(E, omega) + vol / omega_ball(omega.dim - 1)


def script_P(E, omega: RegionSpec, s: float | None, H=0.0, window: Grid | None = None) -> float:
    """Perimeter plus the signed-indicator forcing term; ``s=None`` selects the classical form."""
    _check_bounded_omega(omega)
    forcing = _as_forcing(H)
    # int_Omega (chi_E - chi_E^c) H = 2 int_{Omega cap E} H - int_Omega H
    signed = 2.0 * _integral_over(intersect(E, omega), forcing, window) - _integral_over(omega, forcing, window)
    if s is None:
        return classical_perimeter(E, omega) + signed / (2.0 * omega_ball(omega.dim - 1))
    if not 0.0 < s < 0.5:
        raise ValueError("the fractional functional needs s in (0, 1/2)")
    return frac_perimeter(E, omega, KernelParams(s, omega.dim), window) + signed / (2.0 * (1.0 - 2.0 * s))


# ----------------------------------------------------------------------
# Allen-Cahn energies
# ----------------------------------------------------------------------

def _check_field(u: ScalarField, omega, M: float | None):
    bound = u.M if M is None else M
    mask = u.grid.mask(omega)
    if np.any(np.abs(u.values[mask]) > bound * (1.0 + 1e-12)):
        raise ValueError(f"field violates the bound |u| <= {bound} on omega")
    return mask


def allen_cahn_F_eps(u: ScalarField, omega, s: float, eps: float, M: float | None = None,
                     potential: PotentialSpec = QUARTIC) -> EnergyBreakdown:
    """F_eps = kappa_eps (eps^2s K(u, Omega) + int_Omega W(u))."""
    mask = _check_field(u, omega, M)
    kap = kappa_eps(s, eps)
    K = gagliardo_K(u, omega, KernelParams(s, u.grid.dim))
    W = float(np.sum(potential.W(u.values[mask]))) * u.grid.cell_volume
    # for s < 1/2, kappa * eps^2s == 1 exactly
    grad_scale = 1.0 if s < 0.5 else kap * eps ** (2.0 * s)
    return EnergyBreakdown(grad_scale * K, kap * W, 0.0, 0.0, regime(s), K, kap)


def total_E_eps(u: ScalarField, omega, s: float, eps: float, forcing=0.0, M: float | None = None,
                potential: PotentialSpec = QUARTIC) -> EnergyBreakdown:
    """E_eps = F_eps + c_{n,s} int_Omega H_eps u."""
    F = allen_cahn_F_eps(u, omega, s, eps, M, potential)
    forcing = _as_forcing(forcing)
    mask = u.grid.mask(omega)
    Heps = forcing.at_eps(u.grid.nodes(), s, eps)
    term = c_ns(s, u.grid.dim) * float(np.sum((Heps * u.values)[mask])) * u.grid.cell_volume
    return F.with_terms(forcing=term)


def total_G_eps(u: ScalarField, omega, s: float, eps: float, mu_eps: float, M: float | None = None,
                potential: PotentialSpec = QUARTIC) -> EnergyBreakdown:
    """G_eps = F_eps + mu_eps int_Omega u."""
    F = allen_cahn_F_eps(u, omega, s, eps, M, potential)
    return F.with_terms(multiplier_term=float(mu_eps) * u.integral(omega))

