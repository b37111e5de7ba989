import math

import numpy as np
import pytest

from nlmassari.domain import GeometryError, RegionSpec, ScalarField, build_grid, indicator
from nlmassari.energy import ForcingSpec
from nlmassari.kernels import KernelParams, frac_perimeter
from nlmassari.operator import neumann_extension
from nlmassari.optimize import (SetFamily, _mass_projector, check_lambda_minimality, extract_multiplier,
                                half_line_family, minimize_E_eps_dirichlet, minimize_F_eps_mass,
                                minimize_F_eps_mass_multistart, minimize_massari_set, stationarity_residual)

HALF = RegionSpec.interval(0.0, math.inf)


@pytest.fixture(scope="module")
def mass_run(omega):
    return minimize_F_eps_mass(omega, 0.25, 0.1, 0.3)


@pytest.fixture(scope="module")
def symmetric_run(omega):
    return minimize_F_eps_mass(omega, 0.25, 0.1, 0.0)


def test_classical_massari_expels_interface(omega):
    fam = half_line_family(omega, HALF)
    r = minimize_massari_set(omega, None, -0.75, HALF, fam)
    assert r.params[0] == pytest.approx(-1.0)
    assert r.energy.total == pytest.approx(-1.5)
    r0 = minimize_massari_set(omega, None, 0.0, HALF, fam)
    assert r0.energy.gagliardo == 0.0


def test_fractional_massari_flat_family_breaks_ties_low(omega):
    # in 1D every single-interface member has the same s-perimeter, so the tie rule decides
    fam = half_line_family(omega, HALF, scan_points=2001)
    r = minimize_massari_set(omega, 0.25, 0.0, HALF, fam)
    ts = np.linspace(-1, 1, 2001)
    vals = [frac_perimeter(fam.build(t), omega, KernelParams(0.25)) for t in ts]
    assert np.ptp(vals) < 1e-12
    assert r.params[0] == ts[0]
    assert r.energy.total <= min(vals) + 1e-12


def test_fractional_massari_forcing_matches_scan(omega):
    fam = half_line_family(omega, HALF, scan_points=2001)
    H = lambda x: 0.2 - x
    r = minimize_massari_set(omega, 0.25, ForcingSpec(H, label="linear"), HALF, fam)
    assert r.params[0] == pytest.approx(0.2, abs=1e-3)


def test_massari_rejects_bad_family(omega):
    fam = SetFamily(lambda t: RegionSpec.interval(t, 5.0), ((-0.5, 0.5),), 5)
    with pytest.raises(GeometryError):
        minimize_massari_set(omega, 0.25, 0.0, HALF, fam)


def test_dirichlet_fixed_point(omega, grid_1d):
    plus = ScalarField(grid_1d, np.ones(grid_1d.shape), (1.0, 1.0))
    r = minimize_E_eps_dirichlet(omega, 0.25, 0.1, 0.0, plus, init=plus)
    assert np.allclose(r.argmin.values, 1.0)
    assert r.energy.total == pytest.approx(0.0, abs=1e-12)
    assert r.iterations <= 1


def test_dirichlet_monotone_and_sharp(omega, grid_1d):
    ext = indicator(HALF, grid_1d)
    r = minimize_E_eps_dirichlet(omega, 0.25, 0.05, ForcingSpec.constant(0.0), ext)
    energies = [row[1] for row in r.trace]
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(energies, energies[1:]))
    assert r.converged
    assert np.max(np.abs(r.argmin.values)) <= 2.0


def test_dirichlet_rejects_large_exterior(omega, grid_1d):
    bad = ScalarField(grid_1d, np.full(grid_1d.shape, 3.0), (3.0, 3.0), M=3.0)
    with pytest.raises(ValueError):
        minimize_E_eps_dirichlet(omega, 0.25, 0.1, 0.0, bad)


def test_mass_constraint_and_bounds(mass_run, omega):
    assert mass_run.converged
    u = mass_run.argmin
    assert abs(u.integral(omega) - 0.3) <= 1e-8
    assert np.max(np.abs(u.values)) <= 2.0 and max(abs(c) for c in u.far_field) <= 2.0


def test_mass_euler_lagrange(mass_run, omega):
    assert mass_run.stationarity_residual <= 1e-5
    lam, mu = extract_multiplier(mass_run.argmin, omega, 0.25, 0.1)
    assert lam == pytest.approx(mass_run.lambda_eps)
    assert mu == pytest.approx(10 ** 0.5 * lam)


def test_mass_trace_monotone(mass_run):
    energies = [row[1] for row in mass_run.trace]
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(energies, energies[1:]))


def test_neumann_emerges(mass_run, omega):
    u = mass_run.argmin
    mask = u.grid.mask(omega)
    ext = neumann_extension(u, omega, 0.25, mode="cell")
    rel = np.max(np.abs(ext[~mask] - u.values[~mask])) / np.max(np.abs(u.values[~mask]))
    assert rel <= 1e-3


def test_symmetric_case(symmetric_run):
    u = symmetric_run.argmin.values
    assert abs(symmetric_run.lambda_eps) <= 1e-6
    assert np.max(np.abs(u + u[::-1])) <= 1e-4


def test_near_saturated_mass(omega):
    r = minimize_F_eps_mass(omega, 0.25, 0.1, 2.0 - 1e-3, init="plus")
    inside = r.argmin.values[r.argmin.grid.mask(omega)]
    assert np.all(inside > 0.99)


def test_mass_rejects_infeasible(omega):
    with pytest.raises(ValueError):
        minimize_F_eps_mass(omega, 0.25, 0.1, 2.0)


def test_multistart_labels(omega):
    r = minimize_F_eps_mass_multistart(omega, 0.25, 0.1, 0.3, h=0.02)
    assert r.label == "best-found"
    assert [s[0] for s in r.starts] == ["minus", "plus", "indicator"]
    assert r.energy.total == min(s[1] for s in r.starts)


def test_projection_idempotent():
    rng = np.random.default_rng(1)
    mask = np.zeros(50, dtype=bool)
    mask[10:40] = True
    project = _mass_projector(mask, 50, 0.1, 0.5, 2.0, 1e-8)
    z = project(rng.normal(scale=3.0, size=50))
    assert np.max(np.abs(project(z) - z)) <= 1e-14
    assert abs(z[mask].sum() * 0.1 - 0.5) <= 1e-12


def test_extract_multiplier_constant(omega, grid_1d):
    c = 0.4
    u = ScalarField(grid_1d, np.full(grid_1d.shape, c), (c, c))
    lam, _ = extract_multiplier(u, omega, 0.25, 0.1)
    assert lam == pytest.approx(c * (1 - c * c))
    assert stationarity_residual(u, omega, 0.25, 0.1, lam) < 1e-10


def test_lambda_minimality(omega):
    E = HALF
    same = check_lambda_minimality(E, omega, 0.25, 0.0, [E])
    assert same.margins[0] == pytest.approx(0.0, abs=1e-12) and same.ok
    extra_pair = RegionSpec.intervals((0.0, 0.3), (0.6, math.inf))
    assert not check_lambda_minimality(extra_pair, omega, 0.25, 0.0, [E]).ok
    comps = [RegionSpec.interval(t, math.inf) for t in np.linspace(-0.5, 0.5, 20)]
    assert check_lambda_minimality(E, omega, 0.25, 0.75, comps).ok
    with pytest.raises(GeometryError):
        check_lambda_minimality(E, omega, 0.25, 0.0, [RegionSpec.interval(0.0, 3.0)])
