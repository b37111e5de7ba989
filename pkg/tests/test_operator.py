import math

import numpy as np
import pytest

from nlmassari.domain import GeometryError, RegionSpec, ScalarField, build_grid, indicator
from nlmassari.kernels import KernelParams, gagliardo_K
from nlmassari.operator import (ProfileTable, build_recovery_sequence, estimate_cstar, frac_laplacian,
                                neumann_extension, profile_residual, solve_profile)

HALF = RegionSpec.interval(0.0, math.inf)


@pytest.fixture(scope="module")
def profile75():
    return solve_profile(0.75)


def _bump_field(grid, scale=1.0, shift=0.0):
    x = grid.nodes()
    return ScalarField(grid, scale * np.where(np.abs(x - shift) < 0.6, (0.36 - (x - shift) ** 2) ** 2, 0.0), (0, 0))


def test_laplacian_of_constant(grid_1d):
    u = ScalarField(grid_1d, np.full(grid_1d.shape, 0.7), (0.7, 0.7))
    assert np.max(np.abs(frac_laplacian(u, 0.25))) < 1e-10


def test_laplacian_of_odd_field_is_odd(grid_1d):
    u = indicator(HALF, grid_1d)
    L = frac_laplacian(u, 0.25)
    assert np.max(np.abs(L + L[::-1])) < 1e-9


def test_laplacian_of_step_closed_form(grid_1d):
    u = indicator(HALF, grid_1d)
    # cell average of 8 x^(-1/2) over the cell [1, 1.01]
    expected = 8 * 2 * (math.sqrt(1.01) - 1.0) / 0.01
    assert frac_laplacian(u, 0.25, at=[1.005])[0] == pytest.approx(expected, rel=1e-9)


def test_laplacian_outside_grid(grid_1d):
    with pytest.raises(GeometryError):
        frac_laplacian(indicator(HALF, grid_1d), 0.25, at=[10.0])


def test_laplacian_linearity(grid_1d):
    u, v = _bump_field(grid_1d), _bump_field(grid_1d, 2.0, 0.3)
    w = ScalarField(grid_1d, 0.3 * u.values - 1.7 * v.values, (0, 0))
    lhs = frac_laplacian(w, 0.4)
    rhs = 0.3 * frac_laplacian(u, 0.4) - 1.7 * frac_laplacian(v, 0.4)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))


@pytest.mark.parametrize("s", [0.25, 0.75])
def test_integration_by_parts(grid_1d, omega, s):
    u, v = _bump_field(grid_1d), _bump_field(grid_1d, 1.0, 0.2)
    h = grid_1d.h
    assert np.sum(frac_laplacian(u, s) * v.values) * h == pytest.approx(
        np.sum(frac_laplacian(v, s) * u.values) * h, rel=1e-8)
    # sum_x L(u)(x) u(x) h is the full double integral, which equals 2 K(u, Omega) for u supported in Omega
    assert np.sum(frac_laplacian(u, s) * u.values) * h == pytest.approx(
        2 * gagliardo_K(u, omega, KernelParams(s)), rel=1e-8)


def test_neumann_constant(grid_1d, omega):
    u = ScalarField(grid_1d, np.full(grid_1d.shape, 0.42), (0.42, 0.42))
    assert np.allclose(neumann_extension(u, omega, 0.25, at=[-3.0, 1.5, 2.0]), 0.42, rtol=0, atol=1e-14)


def test_neumann_closed_form(grid_1d, omega):
    u = indicator(HALF, grid_1d)
    val = neumann_extension(u, omega, 0.25, at=[2.0])[0]
    num = 2 * ((1 / math.sqrt(1)) - 1 / math.sqrt(2)) - 2 * (1 / math.sqrt(2) - 1 / math.sqrt(3))
    den = 2 * (1 / math.sqrt(1) - 1 / math.sqrt(3))
    assert val == pytest.approx(num / den, rel=1e-12)
    assert val == pytest.approx(0.386, abs=1e-3)


def test_neumann_decays_like_inverse_distance(grid_1d, omega):
    u = indicator(HALF, grid_1d)
    far = neumann_extension(u, omega, 0.25, at=[50.0, 500.0])
    assert far[0] == pytest.approx(0.015, abs=1e-3)
    assert far[1] == pytest.approx(far[0] / 10, rel=0.01)


def test_neumann_convex_combination(grid_1d, omega):
    x = grid_1d.nodes()
    u = ScalarField(grid_1d, np.sin(3 * x) * 0.9, (0, 0))
    pts = np.concatenate([np.linspace(-3.9, -1.01, 30), np.linspace(1.01, 3.9, 30)])
    ext = neumann_extension(u, omega, 0.25, at=pts)
    inside = u.values[grid_1d.mask(omega)]
    assert np.all(ext >= inside.min() - 1e-14) and np.all(ext <= inside.max() + 1e-14)


def test_neumann_rejects_inside(grid_1d, omega):
    with pytest.raises(GeometryError):
        neumann_extension(indicator(HALF, grid_1d), omega, 0.25, at=[0.5])


def test_profile_properties(profile75):
    p = profile75
    assert np.max(np.abs(p.u0 + p.u0[::-1])) < 1e-12
    assert np.all(np.diff(p.u0) >= 0)
    assert p(0.0) == pytest.approx(0.0, abs=1e-12)
    assert profile_residual(p) <= 1e-6
    assert math.isfinite(p.C)


def test_profile_tail_stable_under_doubling(profile75):
    bigger = solve_profile(0.75, L=80.0)
    assert 0.5 <= bigger.C / profile75.C <= 2.0


def test_profile_preconditions():
    with pytest.raises(ValueError):
        solve_profile(0.75, L=10)
    with pytest.raises(ValueError):
        solve_profile(0.75, h=0.1)


def test_profile_csv_roundtrip(profile75, tmp_path):
    path = tmp_path / "u0.csv"
    profile75.to_csv(path)
    back = ProfileTable.from_csv(path, 0.75)
    assert np.array_equal(back.u0, profile75.u0)
    assert back.L == pytest.approx(profile75.L)


def test_cstar_positive_and_additive(profile75):
    one = estimate_cstar(0.75, profile75, eps_list=(0.1, 0.05, 0.025))
    two = estimate_cstar(0.75, profile75, eps_list=(0.1, 0.05, 0.025), E=RegionSpec.interval(-0.5, 0.5))
    assert 0 < one.limit < math.inf
    assert two.interfaces == 2
    assert two.limit == pytest.approx(2 * one.limit, rel=0.05)
    gaps = np.abs(np.diff(one.values))
    assert np.all(np.diff(gaps) < 0)
    with pytest.raises(ValueError):
        estimate_cstar(0.25)


def test_recovery_mass_and_symmetry(profile75, omega):
    E = RegionSpec.interval(-0.5, 0.5)
    r = build_recovery_sequence(E, omega, 0.75, 0.05, 0.0, table=profile75)
    assert abs(r.c_eps) < 1e-12
    r = build_recovery_sequence(HALF, omega, 0.75, 0.05, 0.1, table=profile75)
    g = r.field.grid
    assert r.field.integral(omega) == pytest.approx(0.1, abs=g.h ** 2)


def test_recovery_bump_must_avoid_interface(profile75, omega):
    with pytest.raises(GeometryError):
        build_recovery_sequence(HALF, omega, 0.75, 0.05, 0.1, table=profile75, bump_centre=0.1)
