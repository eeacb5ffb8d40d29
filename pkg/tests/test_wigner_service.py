import math

import numpy as np
import pytest

from app.errors import GridMismatch, NyquistViolation, SupportClipped
from app.models.field_models import DensityKernel
from app.models.grid_models import Grid1D
from app.models.state_models import StateSpec
from app.services import numerics_service, state_service, wigner_service


@pytest.fixture
def vacuum_kernel(fine_grid, vacuum):
    return state_service.realize_kernel(vacuum, fine_grid)


@pytest.fixture
def fock1_kernel(fine_grid):
    return state_service.realize_kernel(StateSpec(kind="fock", n=1), fine_grid)


def test_vacuum_wigner_matches_oracle(vacuum_kernel, fine_grid, vacuum):
    field = wigner_service.wigner_transform(vacuum_kernel, fine_grid, fine_grid)
    centre = fine_grid.n // 2
    assert field.values[centre, centre] == pytest.approx(2.0, abs=1e-3)
    assert field.normalization() == pytest.approx(1.0, abs=1e-4)
    q = fine_grid.points[:, np.newaxis]
    p = fine_grid.points[np.newaxis, :]
    np.testing.assert_allclose(field.values, state_service.wigner_oracle(vacuum, q, p), atol=1e-6)
    assert field.diagnostics["imaginary_residue"] < 1e-10


def test_fock1_is_negative_at_origin(fock1_kernel, fine_grid):
    field = wigner_service.wigner_transform(fock1_kernel, fine_grid, fine_grid)
    centre = fine_grid.n // 2
    assert field.values[centre, centre] == pytest.approx(-2.0, abs=1e-3)


def test_coherent_wigner_is_displaced(fine_grid):
    spec = StateSpec(kind="coherent", alpha_re=1.0, alpha_im=0.5)
    out = Grid1D.symmetric(6.0, 193)
    field = wigner_service.wigner_transform(state_service.realize_kernel(spec, fine_grid), out, out)
    q = out.points[:, np.newaxis]
    p = out.points[np.newaxis, :]
    np.testing.assert_allclose(field.values, state_service.wigner_oracle(spec, q, p), atol=1e-3)


def test_momentum_grid_beyond_band_is_rejected(vacuum_kernel):
    band = math.pi / vacuum_kernel.grid.spacing
    with pytest.raises(NyquistViolation):
        wigner_service.wigner_transform(vacuum_kernel, vacuum_kernel.grid, Grid1D.symmetric(1.05 * band, 11))


def test_momentum_up_to_the_full_band():
    kernel_grid = Grid1D.symmetric(8.0, 65)
    x1 = kernel_grid.points[:, np.newaxis]
    x2 = kernel_grid.points[np.newaxis, :]
    q0, p0 = 0.5, 5.5
    psi1 = math.pi ** -0.25 * np.exp(-0.5 * (x1 - q0) ** 2 + 1j * p0 * x1)
    psi2 = math.pi ** -0.25 * np.exp(-0.5 * (x2 - q0) ** 2 + 1j * p0 * x2)
    kernel = DensityKernel(kernel_grid, psi1 * psi2.conj())
    p_grid = Grid1D.symmetric(10.0, 81)
    assert p_grid.max > math.pi / (2.0 * kernel_grid.spacing)
    field = wigner_service.wigner_transform(kernel, kernel_grid, p_grid)
    assert field.diagnostics["y_step"] == pytest.approx(kernel_grid.spacing)
    expected = 2.0 * np.exp(-(x1 - q0) ** 2 - (p_grid.points[np.newaxis, :] - p0) ** 2)
    np.testing.assert_allclose(field.values, expected, atol=1e-3)


def test_chirp_z_rows_match_a_direct_sum():
    rng = np.random.default_rng(9)
    samples = rng.standard_normal((3, 40)) + 1j * rng.standard_normal((3, 40))
    y = -2.3 + 0.15 * np.arange(40)
    p_grid = Grid1D(min=-1.7, max=4.1, n=23)
    direct = samples @ np.exp(-1j * np.outer(p_grid.points, y)).T * 0.15
    np.testing.assert_allclose(wigner_service._fourier_rows(samples, y, p_grid), direct, atol=1e-10)


def test_trace_products(vacuum_kernel, fock1_kernel, fine_grid):
    vacuum = wigner_service.wigner_transform(vacuum_kernel, fine_grid, fine_grid)
    fock = wigner_service.wigner_transform(fock1_kernel, fine_grid, fine_grid)
    assert wigner_service.trace_product(vacuum, vacuum) == pytest.approx(1.0, abs=1e-3)
    assert wigner_service.trace_product(fock, fock) == pytest.approx(1.0, abs=1e-3)
    assert abs(wigner_service.trace_product(vacuum, fock)) < 1e-3
    other = Grid1D.symmetric(4.0, 33)
    with pytest.raises(GridMismatch):
        wigner_service.trace_product(vacuum, wigner_service.wigner_transform(vacuum_kernel, other, other))


def test_marginals(vacuum_kernel, fine_grid):
    field = wigner_service.wigner_transform(vacuum_kernel, fine_grid, fine_grid)
    np.testing.assert_allclose(wigner_service.position_marginal(field), vacuum_kernel.diagonal(), atol=1e-6)
    p_grid = Grid1D.symmetric(5.0, 51)
    momentum = wigner_service.momentum_distribution(vacuum_kernel, p_grid)
    np.testing.assert_allclose(momentum, np.exp(-p_grid.points ** 2) / math.sqrt(math.pi), atol=1e-6)


def test_characteristic_function_round_trip(vacuum_kernel):
    uv = Grid1D.symmetric(8.0, 257)
    chi = wigner_service.characteristic_function(vacuum_kernel, uv, uv)
    u = uv.points[:, np.newaxis]
    v = uv.points[np.newaxis, :]
    np.testing.assert_allclose(chi, np.exp(-0.25 * (u * u + v * v)), atol=1e-6)

    out = Grid1D.symmetric(4.0, 41)
    field = wigner_service.wigner_from_characteristic(chi, uv, uv, out, out)
    q = out.points[:, np.newaxis]
    p = out.points[np.newaxis, :]
    np.testing.assert_allclose(field.values, 2.0 * np.exp(-(q * q + p * p)), atol=1e-4)


def test_characteristic_frequency_limit(vacuum_kernel):
    limit = math.pi / vacuum_kernel.grid.spacing
    with pytest.raises(NyquistViolation):
        wigner_service.characteristic_function(vacuum_kernel, Grid1D.symmetric(2.0 * limit, 5),
                                               Grid1D.symmetric(1.0, 5))


def test_quadrature_distribution_of_coherent_state(fine_grid):
    spec = StateSpec(kind="coherent", alpha_re=1.0, alpha_im=0.5)
    field = wigner_service.wigner_transform(state_service.realize_kernel(spec, fine_grid), fine_grid, fine_grid)
    theta = 0.6
    row = wigner_service.quadrature_distribution(field, theta, fine_grid, order=3)
    np.testing.assert_allclose(row, state_service.quadrature_oracle(spec, theta, fine_grid.points), atol=1e-3)


def test_quadrature_distribution_needs_support(vacuum_kernel, fine_grid):
    field = wigner_service.wigner_transform(vacuum_kernel, fine_grid, fine_grid)
    with pytest.raises(SupportClipped):
        wigner_service.quadrature_distribution(field, 0.0, Grid1D.symmetric(1.0, 41))


@pytest.mark.parametrize("method", ["pv", "ramp"])
def test_reconstruct_fock1_from_exact_quadratures(method, fine_grid):
    data = state_service.exact_quadratures(StateSpec(kind="fock", n=1), numerics_service.uniform_angles(90), fine_grid)
    out = Grid1D.symmetric(6.0, 121)
    field = wigner_service.reconstruct_wigner(data, out, out, method=method)
    origin = field.values[out.n // 2, out.n // 2]
    assert -2.2 <= origin <= -1.5
    assert field.diagnostics["normalization_residual"] < 1e-2


@pytest.mark.slow
def test_reconstruct_vacuum_relative_error(fine_grid, vacuum):
    data = state_service.exact_quadratures(vacuum, numerics_service.uniform_angles(180), fine_grid)
    out = Grid1D.symmetric(6.0, 121)
    field = wigner_service.reconstruct_wigner(data, out, out)
    truth = state_service.wigner_oracle(vacuum, out.points[:, np.newaxis], out.points[np.newaxis, :])
    assert np.linalg.norm(field.values - truth) / np.linalg.norm(truth) < 0.01


def test_sampled_reconstruction_error_falls_as_inverse_square_root_of_shots(fine_grid, vacuum):
    angles = numerics_service.uniform_angles(30)
    out = Grid1D.symmetric(4.0, 41)
    exact = wigner_service.reconstruct_wigner(state_service.exact_quadratures(vacuum, angles, fine_grid), out, out)
    shots = np.array([100, 1_000, 10_000, 100_000])
    errors = []
    for count in shots:
        squared = []
        for seed in range(6):
            data = state_service.sample_quadratures(vacuum, angles, int(count), seed, fine_grid)
            field = wigner_service.reconstruct_wigner(data, out, out)
            squared.append(np.sum((field.values - exact.values) ** 2))
        errors.append(math.sqrt(np.mean(squared)) / np.linalg.norm(exact.values))
    slope = np.polyfit(np.log(shots), np.log(errors), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)
