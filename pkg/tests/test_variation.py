import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlmassari.domain import GeometryError, RegionSpec, ScalarField, build_grid, indicator
from nlmassari.kernels import KernelParams, frac_perimeter
from nlmassari.variation import (CurvatureNotConverged, FlowError, VectorFieldSpec, constancy_diagnostic,
                                 flow_pushforward, hybrid_mean_curvature)

A, B = -0.3, 0.6


@pytest.fixture(scope="module")
def fine_grid(omega):
    return build_grid(omega, 0.00125, 4.0)


@pytest.fixture(scope="module")
def interval_couple(fine_grid):
    return indicator(RegionSpec.interval(A, B), fine_grid)


def _dK_da(a, s=0.25, d=1e-5):
    per = lambda x: 4 * frac_perimeter(RegionSpec.interval(x, B), RegionSpec.interval(-1, 1), KernelParams(s))
    return (per(a + d) - per(a - d)) / (2 * d)


def test_field_algebra():
    X = VectorFieldSpec.bump(0.0, 0.5, name="X")
    Y = VectorFieldSpec.bump(0.2, 0.3, amplitude=2.0, name="Y")
    x = np.linspace(-1, 1, 101)
    assert np.allclose((2.0 * X + (-Y))(x), 2 * X(x) - Y(x))
    assert np.allclose((-X)(x), -X(x))
    assert np.all(VectorFieldSpec.zero()(x) == 0)
    assert X(np.array([0.0]))[0] == pytest.approx(1.0)
    with pytest.raises(GeometryError):
        VectorFieldSpec.bump(0.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.05, 0.5), st.floats(-0.9, 0.9))
def test_divergence_matches_derivative(c, r, x):
    X = VectorFieldSpec.bump(c, r)
    h = 1e-8
    fd = (X(np.array([x + h]))[0] - X(np.array([x - h]))[0]) / (2 * h)
    assert X.divergence(np.array([x]))[0] == pytest.approx(fd, abs=1e-4)
    assert np.max(np.abs(X.divergence(np.linspace(-1, 1, 2001)))) <= X.lipschitz() + 1e-12


def test_divergence_integral_1d(omega):
    X = VectorFieldSpec.bump(A, 0.2)
    assert X.divergence_integral(RegionSpec.interval(A, B), omega) == pytest.approx(-1.0)
    away = VectorFieldSpec.bump(0.1, 0.1)
    assert away.divergence_integral(RegionSpec.interval(A, B), omega) == pytest.approx(0.0, abs=1e-15)


def test_support_check(omega):
    with pytest.raises(GeometryError):
        VectorFieldSpec.bump(0.9, 0.2).check_support(omega)


def test_pushforward_constant_and_integral(omega, grid_1d):
    X = VectorFieldSpec.bump(0.0, 0.5)
    c = ScalarField(grid_1d, np.full(grid_1d.shape, 0.3), (0.3, 0.3))
    assert np.allclose(flow_pushforward(c, X, 0.05).values, 0.3, atol=1e-14)
    u = indicator(RegionSpec.interval(-0.2, 0.4), grid_1d)
    t = 0.05
    v = flow_pushforward(u, X, t)
    # cell averages are exact, so the integral tracks the moved endpoints
    from nlmassari.variation import _rk4_flow
    a, b = _rk4_flow(X, np.array([-0.2, 0.4]), t, steps=64)
    expected = 2 * (b - a) - (grid_1d.hi[0] - grid_1d.lo[0])
    assert np.sum(v.values) * grid_1d.h == pytest.approx(expected, abs=1e-8)


def test_pushforward_moves_interface(grid_1d):
    X = VectorFieldSpec.bump(0.0, 0.5)
    u = indicator(RegionSpec.interval(0.0, math.inf), grid_1d)
    v = flow_pushforward(u, X, 0.1)
    # the jump at 0 travels by about t X(0) = 0.1
    crossing = grid_1d.nodes()[np.argmin(np.abs(v.values))]
    assert crossing == pytest.approx(0.1, abs=2 * grid_1d.h)


def test_flow_step_limit(grid_1d):
    X = VectorFieldSpec.bump(0.0, 0.1)
    with pytest.raises(FlowError):
        flow_pushforward(indicator(RegionSpec.interval(0, 1), grid_1d), X, 1.0)


def test_curvature_against_closed_form(interval_couple, omega):
    X = VectorFieldSpec.bump(A, 0.2, name="X")
    est = hybrid_mean_curvature(interval_couple, omega, 0.25, X)
    assert est.value == pytest.approx(_dK_da(A), rel=1e-4)
    assert est.error < 1e-3 * abs(est.value)


def test_curvature_is_linear(interval_couple, omega):
    X = VectorFieldSpec.bump(A, 0.2)
    Y = VectorFieldSpec.bump(B, 0.3, amplitude=0.5)
    vx = hybrid_mean_curvature(interval_couple, omega, 0.25, X).value
    vy = hybrid_mean_curvature(interval_couple, omega, 0.25, Y).value
    vc = hybrid_mean_curvature(interval_couple, omega, 0.25, 2.0 * X + (-1.0) * Y).value
    assert vc == pytest.approx(2 * vx - vy, rel=1e-3)


def test_curvature_preconditions(interval_couple, omega, grid_1d):
    X = VectorFieldSpec.bump(A, 0.2)
    with pytest.raises(ValueError):
        hybrid_mean_curvature(interval_couple, omega, 0.75, X)
    with pytest.raises(GeometryError):
        hybrid_mean_curvature(indicator(RegionSpec.interval(A, B), grid_1d), omega, 0.25, X)


def test_curvature_rejects_under_resolved(interval_couple, omega):
    X = VectorFieldSpec.bump(A, 0.2)
    with pytest.raises(CurvatureNotConverged):
        hybrid_mean_curvature(interval_couple, omega, 0.25, X, rtol=0.0, atol=0.0)


def test_constancy_on_symmetric_couple(interval_couple, omega):
    fields = [VectorFieldSpec.bump(A, r, name=f"r{r}") for r in (0.1, 0.2, 0.25)]
    fields.append(VectorFieldSpec.bump(0.1, 0.1, name="away"))
    rep = constancy_diagnostic(interval_couple, omega, 0.25, fields)
    assert rep.excluded == ["away"]
    assert rep.constant and len(rep.ratios) == 3
    assert rep.mean == pytest.approx(-_dK_da(A), rel=1e-4)
    blob = json.loads(rep.to_json())
    assert blob["excluded"] == ["away"]


def test_constancy_flags_constant_field(fine_grid, omega):
    u = ScalarField(fine_grid, np.ones(fine_grid.shape), (1.0, 1.0))
    rep = constancy_diagnostic(u, omega, 0.25, [VectorFieldSpec.bump(0.0, 0.2)])
    assert rep.degenerate and not rep.constant
