import math

import numpy as np
import pytest
from scipy.integrate import quad

from app.errors import BoundaryLeak, GridTooCoarse, InvalidGrid
from app.models.grid_models import Grid1D, PVKernel
from app.services import numerics_service


def test_pv_kernel_is_exactly_odd():
    kernel = PVKernel(epsilon=0.01)
    xi = np.linspace(-5.0, 5.0, 1001)
    assert np.all(numerics_service.pv_g(kernel, xi) == -numerics_service.pv_g(kernel, -xi))
    assert numerics_service.pv_g(kernel, 0.0) == 0.0


def test_default_epsilon_tracks_spacing():
    grid = Grid1D.symmetric(5.0, 101)
    assert numerics_service.resolve_epsilon(grid, None).epsilon == pytest.approx(0.05 * grid.spacing)
    assert numerics_service.resolve_epsilon(grid, 0.3).epsilon == 0.3


def test_ramp_filter_of_gaussian_peak():
    grid = Grid1D.symmetric(10.0, 513)
    profile = np.exp(-0.5 * grid.points ** 2)
    ramp = numerics_service.ramp_filter(profile, grid)
    assert ramp[grid.n // 2] == pytest.approx(2.0 / math.sqrt(2.0 * math.pi), rel=1e-3)
    assert ramp.shape == profile.shape


def test_pv_convolve_matches_two_pi_ramp():
    grid = Grid1D.symmetric(10.0, 513)
    kernel = PVKernel.for_grid(grid)
    profile = np.exp(-0.5 * grid.points ** 2)
    alphas = grid.points[100:-100]
    pv = numerics_service.pv_convolve(profile, grid, kernel, alphas)
    ramp = 2.0 * math.pi * numerics_service.ramp_filter(profile, grid)[100:-100]
    assert np.max(np.abs(pv - ramp)) / np.max(np.abs(ramp)) < 1e-2


def test_pv_convolve_scalar_and_zero_profile():
    grid = Grid1D.symmetric(6.0, 241)
    kernel = PVKernel.for_grid(grid)
    assert isinstance(numerics_service.pv_convolve(np.exp(-grid.points ** 2), grid, kernel, 0.3), float)
    assert numerics_service.pv_convolve(np.zeros(grid.n), grid, kernel, 0.3) == 0.0


def test_pv_filter_agrees_with_pointwise_convolution():
    grid = Grid1D.symmetric(6.0, 121)
    kernel = PVKernel.for_grid(grid)
    profiles = np.vstack([np.exp(-grid.points ** 2), np.exp(-(grid.points - 1.0) ** 2)])
    filtered = numerics_service.pv_filter(profiles, grid, kernel)
    pointwise = numerics_service.pv_convolve(profiles[1], grid, kernel, grid.points)
    np.testing.assert_allclose(filtered[1], pointwise, atol=1e-12)


def test_non_decaying_profile_is_rejected():
    grid = Grid1D.symmetric(2.0, 101)
    with pytest.raises(BoundaryLeak):
        numerics_service.pv_convolve(np.ones(grid.n), grid, PVKernel.for_grid(grid), 0.0)


def test_profile_length_must_match_grid():
    grid = Grid1D.symmetric(2.0, 101)
    with pytest.raises(InvalidGrid):
        numerics_service.pv_convolve(np.zeros(50), grid, PVKernel.for_grid(grid), 0.0)


def test_ramp_filter_needs_enough_samples():
    grid = Grid1D.symmetric(1.0, 5)
    with pytest.raises(GridTooCoarse):
        numerics_service.ramp_filter(np.zeros(5), grid)


def test_angle_weights():
    angles = numerics_service.uniform_angles(90)
    weights = numerics_service.angle_weights(angles)
    assert weights.sum() == pytest.approx(math.pi, abs=1e-12)
    np.testing.assert_allclose(weights, math.pi / 90)

    shuffled = np.array([2.0, 0.1, 1.0])
    weights = numerics_service.angle_weights(shuffled)
    assert weights.sum() == pytest.approx(math.pi)
    assert weights[1] == pytest.approx(0.5 * ((1.0 - 0.1) + (0.1 + math.pi - 2.0)))


def test_eigenvalue_floor_projects_to_unit_trace_psd():
    matrix = np.diag([0.7, 0.5, -0.2]).astype(complex)
    projected, clipped = numerics_service.eigenvalue_floor(matrix)
    assert clipped == pytest.approx(0.2)
    assert np.trace(projected).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(projected).min() >= -1e-15


def test_grid_validation():
    with pytest.raises(InvalidGrid):
        Grid1D(min=1.0, max=0.0, n=10)
    with pytest.raises(InvalidGrid):
        Grid1D(min=0.0, max=1.0, n=1)
    grid = Grid1D.from_points(np.linspace(-1.0, 1.0, 11))
    assert grid.spacing == pytest.approx(0.2)
    with pytest.raises(InvalidGrid):
        Grid1D.from_points(np.array([0.0, 0.1, 0.5]))


def _gaussian_slope(x):
    return -2.0 * x * np.exp(-x * x)


def _dense_pv(alpha):
    """-2 PV int f'(x) / (x - alpha) dx for f = exp(-x^2), by QUADPACK's Cauchy weight."""
    value, _ = quad(_gaussian_slope, -10.0, 10.0, weight="cauchy", wvar=alpha)
    return -2.0 * value


@pytest.mark.parametrize("alpha", [0.0, 0.7, -1.3])
def test_pv_convolve_matches_dense_principal_value(alpha):
    grid = Grid1D.symmetric(8.0, 1601)
    kernel = PVKernel.for_grid(grid)
    value = numerics_service.pv_convolve(np.exp(-grid.points ** 2), grid, kernel, alpha)
    assert value == pytest.approx(_dense_pv(alpha), rel=5e-3)
    if alpha == 0.0:
        assert _dense_pv(alpha) == pytest.approx(4.0 * math.sqrt(math.pi), rel=1e-8)


def test_pv_convolve_is_second_order_in_the_grid():
    kernel = PVKernel(epsilon=0.05)
    alpha = 0.4
    reference, _ = quad(lambda x: -_gaussian_slope(x) * numerics_service.pv_g(kernel, x - alpha), -10.0, 10.0,
                        points=[alpha - kernel.epsilon, alpha, alpha + kernel.epsilon], limit=500,
                        epsabs=1e-13, epsrel=1e-12)
    steps, errors = [], []
    for n in (161, 321, 641):
        grid = Grid1D.symmetric(8.0, n)
        value = numerics_service.pv_convolve(np.exp(-grid.points ** 2), grid, kernel, alpha)
        steps.append(grid.spacing)
        errors.append(abs(value - reference))
    order = np.polyfit(np.log(steps), np.log(errors), 1)[0]
    assert 1.7 <= order <= 2.3


def test_pv_convolve_approaches_the_principal_value_linearly_in_epsilon():
    grid = Grid1D.symmetric(8.0, 4001)
    profile = np.exp(-grid.points ** 2)
    target = _dense_pv(0.0)
    epsilons = np.array([0.08, 0.04, 0.02])
    errors = [abs(numerics_service.pv_convolve(profile, grid, PVKernel(epsilon=e), 0.0) - target) for e in epsilons]
    order = np.polyfit(np.log(epsilons), np.log(errors), 1)[0]
    assert 0.8 <= order <= 1.2
