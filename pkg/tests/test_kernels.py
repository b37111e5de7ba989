import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlmassari.domain import RegionSpec, build_grid, indicator
from nlmassari.kernels import (DivergentInteraction, KernelParams, classical_perimeter, frac_perimeter,
                               gagliardo_K, interaction, interval_interaction, rescaled_perimeter_limit)

P25 = KernelParams(0.25)


def _brute_force(a, b, c, d, s, h):
    x = np.arange(a + h / 2, b, h)
    y = np.arange(c + h / 2, d, h)
    total = 0.0
    for xi in x:
        total += np.sum(np.abs(xi - y) ** (-1 - 2 * s))
    return total * h * h


def test_adjacent_intervals_closed_form():
    v = interaction(RegionSpec.interval(-1, 0), RegionSpec.interval(0, 1), P25)
    assert abs(v - (8 - 4 * math.sqrt(2))) <= 1e-10


def test_separated_intervals_against_midpoint_sum():
    exact = interval_interaction(-1.0, -0.5, 0.0, 1.0, 0.25)
    assert _brute_force(-1.0, -0.5, 0.0, 1.0, 0.25, 1e-3) == pytest.approx(exact, rel=1e-3)


def test_shrinking_set_gives_zero():
    assert interval_interaction(0.0, 1.0, 2.0, 2.0, 0.25) == 0.0


def test_overlap_rejected():
    with pytest.raises((DivergentInteraction, ValueError)):
        interaction(RegionSpec.interval(0, 1), RegionSpec.interval(0.5, 2), P25)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 2), st.floats(0.0, 1), st.floats(0.1, 2), st.floats(-5, 5),
       st.floats(0.05, 0.45))
def test_interaction_symmetry_and_translation(a, la, gap, lb, c, s):
    A = (a, a + la)
    B = (a + la + gap, a + la + gap + lb)
    v = interval_interaction(*A, *B, s)
    p = KernelParams(s)
    assert interaction(RegionSpec.interval(*B), RegionSpec.interval(*A), p) == pytest.approx(v, rel=1e-12)
    assert interval_interaction(A[0] + c, A[1] + c, B[0] + c, B[1] + c, s) == pytest.approx(v, rel=1e-9)


def test_perimeter_of_empty_set(omega):
    assert frac_perimeter(RegionSpec.empty(1), omega, P25) == 0.0


def test_complement_symmetry(omega):
    E = RegionSpec.intervals((-0.3, 0.4), (0.8, 5.0))
    assert frac_perimeter(E, omega, P25) == pytest.approx(frac_perimeter(E.complemented(), omega, P25), rel=1e-12)


def test_scaling(omega, half_line):
    lhs = frac_perimeter(half_line, RegionSpec.interval(-2, 2), P25)
    assert lhs == pytest.approx(2 ** (1 - 0.5) * frac_perimeter(half_line, omega, P25), rel=1e-10)


def test_monotone_in_omega(half_line, omega):
    assert frac_perimeter(half_line, RegionSpec.interval(-0.5, 0.5), P25) <= frac_perimeter(half_line, omega, P25)


def test_perimeter_rejects_large_s(half_line, omega):
    with pytest.raises(ValueError):
        frac_perimeter(half_line, omega, KernelParams(0.6))


def test_classical_perimeter(omega, half_line):
    assert classical_perimeter(half_line, omega) == 1
    assert classical_perimeter(RegionSpec.interval(-0.5, 0.5), omega) == 2
    big = RegionSpec.rectangle(-2, -2, 2, 2)
    assert abs(classical_perimeter(RegionSpec.disk(0, 0, 0.5), big) - math.pi) <= 1e-12


def test_gagliardo_of_constant(grid_1d, omega):
    u = indicator(RegionSpec.empty(1), grid_1d)
    assert gagliardo_K(u, omega, P25) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("E", [RegionSpec.interval(0, math.inf), RegionSpec.interval(-0.5, 0.5),
                               RegionSpec.intervals((-0.7, -0.2), (0.3, math.inf))])
def test_signed_indicator_identity(omega, E):
    g = build_grid(omega, 0.005, 4.0)
    K = gagliardo_K(indicator(E, g), omega, P25)
    assert K == pytest.approx(4 * frac_perimeter(E, omega, P25), rel=5e-3)


def test_gagliardo_shift_invariance(grid_1d, omega):
    u = indicator(RegionSpec.interval(-0.4, 0.6), grid_1d)
    v = u.copy(values=u.values + 0.3, far_field=tuple(f + 0.3 for f in u.far_field))
    assert gagliardo_K(v, omega, P25) == pytest.approx(gagliardo_K(u, omega, P25), rel=1e-10)


def test_rescaled_limit(omega, half_line):
    s = [0.30, 0.40, 0.45, 0.49]
    assert rescaled_perimeter_limit(half_line, omega, s)["limit"] == pytest.approx(1.0, rel=0.05)
    assert rescaled_perimeter_limit(RegionSpec.interval(-0.5, 0.5), omega, s)["limit"] == pytest.approx(2.0, rel=0.05)
    assert rescaled_perimeter_limit(RegionSpec.empty(1), omega, s)["limit"] == 0.0
    with pytest.raises(ValueError):
        rescaled_perimeter_limit(half_line, omega, [])


def test_2d_disk_perimeter_positive_and_symmetric():
    omega2 = RegionSpec.disk(0, 0, 1)
    E = RegionSpec.disk(0, 0, 0.5)
    g = build_grid(omega2, 0.05, 2.0)
    p = frac_perimeter(E, omega2, KernelParams(0.25, 2), g)
    q = frac_perimeter(E.complemented(), omega2, KernelParams(0.25, 2), g)
    assert p > 0 and p == pytest.approx(q, rel=1e-6)
