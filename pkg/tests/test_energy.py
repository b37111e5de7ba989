import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlmassari.domain import RegionSpec, ScalarField, indicator
from nlmassari.energy import (ForcingSpec, allen_cahn_F_eps, c_ns, kappa_eps, massari_classical,
                              massari_fractional, potential_W, regime, script_P, total_E_eps, total_G_eps)
from nlmassari.kernels import KernelParams, frac_perimeter

HALF = RegionSpec.interval(0.0, math.inf)


def _const(grid, c):
    return ScalarField(grid, np.full(grid.shape, float(c)), (c, c))


@pytest.mark.parametrize("t,expected", [(1.0, (0, 0, 2)), (0.0, (0.25, 0, -1)), (-1.0, (0, 0, 2))])
def test_potential_values(t, expected):
    assert tuple(map(float, potential_W(t))) == pytest.approx(expected)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3))
def test_potential_positive_off_wells(t):
    W, dW, _ = potential_W(t)
    assert W >= 0
    h = 1e-6
    assert dW == pytest.approx((potential_W(t + h)[0] - potential_W(t - h)[0]) / (2 * h), abs=1e-6)


def test_kappa_branches():
    assert kappa_eps(0.25, 0.1) == pytest.approx(10 ** 0.5)
    assert kappa_eps(0.5, 0.1) == pytest.approx(1 / (0.1 * math.log(10)))
    assert kappa_eps(0.75, 0.1) == pytest.approx(10.0)
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            kappa_eps(0.25, bad)
    assert [regime(s) for s in (0.25, 0.5, 0.75)] == ["sub-half", "half", "super-half"]


def test_c_ns():
    assert c_ns(0.25, 1) == pytest.approx(1.0)
    assert c_ns(0.75, 2) == pytest.approx(0.25)
    assert c_ns(0.75, 1) == pytest.approx(0.5)


def test_massari_fractional(omega):
    per = frac_perimeter(HALF, omega, KernelParams(0.25))
    assert massari_fractional(HALF, omega, 0.25) == pytest.approx(per)
    assert massari_fractional(RegionSpec.empty(1), omega, 0.25) == 0.0
    assert massari_fractional(HALF, omega, 0.25, 1.0) == pytest.approx(per + 2.0)
    with pytest.raises(ValueError):
        massari_fractional(HALF, omega, 0.6)


@pytest.mark.parametrize("t", [-0.6, 0.0, 0.45])
def test_massari_classical_closed_form(omega, t):
    E = RegionSpec.interval(t, math.inf)
    assert massari_classical(E, omega, 0.3) == pytest.approx(1 + 0.3 * (1 - t))


def test_massari_classical_no_jump(omega):
    E = RegionSpec.interval(-2.0, math.inf)
    assert massari_classical(E, omega, 0.3) == pytest.approx(0.6)
    assert massari_classical(HALF, omega) == 1.0


@pytest.mark.parametrize("E", [HALF, RegionSpec.interval(-0.5, 0.5), RegionSpec.intervals((-0.8, -0.1), (0.4, 2))])
def test_script_P_identity(omega, E):
    H = 0.7
    diff = script_P(E, omega, 0.25, H) - massari_fractional(E, omega, 0.25, H)
    assert diff == pytest.approx(-(1 / (2 * 0.5)) * H * 2, abs=1e-10)
    assert script_P(E, omega, 0.25, H) == pytest.approx(script_P(E.complemented(), omega, 0.25, -H), abs=1e-10)
    assert script_P(E, omega, 0.25, 0.0) == pytest.approx(frac_perimeter(E, omega, KernelParams(0.25)))


def test_F_eps_constants(grid_1d, omega):
    assert allen_cahn_F_eps(_const(grid_1d, 1.0), omega, 0.25, 0.1).total == pytest.approx(0.0, abs=1e-12)
    F0 = allen_cahn_F_eps(_const(grid_1d, 0.0), omega, 0.25, 0.1)
    assert F0.total == pytest.approx(kappa_eps(0.25, 0.1) * 2 / 4)


def test_F_eps_signed_indicator_equals_4_per(omega):
    from nlmassari.domain import build_grid
    g = build_grid(omega, 0.005, 4.0)
    F = allen_cahn_F_eps(indicator(HALF, g), omega, 0.25, 0.1)
    assert F.gagliardo == F.K
    assert F.gagliardo == pytest.approx(4 * frac_perimeter(HALF, omega, KernelParams(0.25)), rel=5e-3)
    assert F.potential == pytest.approx(0.0, abs=1e-14)


def test_F_eps_rejects_out_of_bounds(grid_1d, omega):
    with pytest.raises(ValueError):
        allen_cahn_F_eps(_const(grid_1d, 3.0), omega, 0.25, 0.1, M=2.0)


def test_total_energies(grid_1d, omega):
    u = indicator(RegionSpec.interval(-0.3, 0.4), grid_1d)
    F = allen_cahn_F_eps(u, omega, 0.25, 0.1)
    assert total_E_eps(u, omega, 0.25, 0.1, 0.0).total == pytest.approx(F.total)
    one = _const(grid_1d, 1.0)
    E1 = total_E_eps(one, omega, 0.25, 0.1, ForcingSpec.constant(0.5))
    assert E1.forcing == pytest.approx(c_ns(0.25, 1) * 0.5 * 2)
    H = ForcingSpec.constant(0.5)
    Eu = total_E_eps(u, omega, 0.25, 0.1, H)
    Em = total_E_eps(u.copy(values=-u.values, far_field=(1.0, 1.0)), omega, 0.25, 0.1, H)
    assert Em.forcing - Eu.forcing == pytest.approx(-2 * Eu.forcing)
    assert Eu.total == pytest.approx(F.total + Eu.forcing, abs=1e-12)
    assert total_G_eps(u, omega, 0.25, 0.1, 0.0).total == pytest.approx(F.total)
    assert total_G_eps(_const(grid_1d, 0.0), omega, 0.25, 0.1, 0.3).multiplier_term == 0.0
    assert total_G_eps(one, omega, 0.25, 0.1, 0.3).multiplier_term == pytest.approx(0.6)


def test_oscillatory_forcing_converges(grid_1d):
    H = ForcingSpec.oscillatory(-0.75, 1.0)
    x = grid_1d.nodes()
    errs = [np.sum(np.abs(H.at_eps(x, 0.25, e) - H.limit(x))) * grid_1d.h for e in (0.1, 0.05, 0.025)]
    assert errs[0] > errs[1] > errs[2]


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.01, 0.5), st.sampled_from([0.25, 0.5, 0.75]))
def test_F_eps_nonnegative(c, eps, s):
    from nlmassari.domain import build_grid
    g = build_grid(RegionSpec.interval(-1, 1), 0.05, 3.0)
    x = g.nodes()
    u = ScalarField(g, np.clip(c * np.tanh(x / 0.2), -1.5, 1.5), (-c, c))
    assert allen_cahn_F_eps(u, RegionSpec.interval(-1, 1), s, eps).total >= 0.0
