import math

import numpy as np
import pytest

from app.errors import ShiftOutOfRange, SingularAngleInData, TooFewAngles
from app.models.grid_models import Grid1D
from app.models.state_models import StateSpec
from app.services import mub_continuous_service, numerics_service, state_service


@pytest.fixture
def vacuum_data(fine_grid, vacuum):
    return state_service.exact_quadratures(vacuum, numerics_service.uniform_angles(90), fine_grid)


@pytest.mark.parametrize("a, b", [(0.0, 0.0), (1.0, 0.0), (0.7, 0.5), (-1.2, -1.0)])
def test_vacuum_displacement_coefficients(fine_grid, vacuum, a, b):
    kernel = state_service.realize_kernel(vacuum, fine_grid)
    expected = np.exp(0.5j * a * b) * math.exp(-0.25 * (a * a + b * b))
    assert abs(mub_continuous_service.displacement_coefficient(kernel, a, b) - expected) < 1e-8


def test_shift_beyond_grid_is_rejected(fine_grid, vacuum):
    kernel = state_service.realize_kernel(vacuum, fine_grid)
    with pytest.raises(ShiftOutOfRange):
        mub_continuous_service.displacement_coefficient(kernel, 0.0, 20.0)


def test_lattice_displacements_are_orthonormal():
    gram = mub_continuous_service.displacement_gram(8, 0.5)
    np.testing.assert_allclose(gram, np.eye(64), atol=1e-12)
    operators = mub_continuous_service.lattice_displacements(4, 1.0)
    np.testing.assert_allclose(operators[0, 0], np.eye(4))
    # Shift by one row-to-column step, no phase for m = 0.
    assert operators[0, 1, 0, 1] == 1.0 and operators[0, 1, 3, 0] == 1.0


def test_select_angles():
    angles = numerics_service.uniform_angles(8)
    keep = mub_continuous_service.select_angles(angles)
    assert keep.tolist() == [False] + [True] * 7
    with pytest.raises(SingularAngleInData):
        mub_continuous_service.select_angles(angles, mode="reject")
    assert mub_continuous_service.select_angles(angles + 0.1, mode="reject").all()
    with pytest.raises(ValueError):
        mub_continuous_service.select_angles(angles, mode="ignore")


def test_ray_transforms_of_vacuum(vacuum_data):
    t = np.linspace(-4.0, 4.0, 33)
    transforms = mub_continuous_service.ray_transforms(vacuum_data, t, 0.01)
    expected = np.exp(-0.25 * t * t - 0.01 * np.abs(t))
    for row in transforms[:5]:
        np.testing.assert_allclose(row, expected, atol=1e-8)


def test_displacement_coefficients_from_data(vacuum_data):
    a = np.linspace(-2.0, 2.0, 9)
    b = np.linspace(-1.0, 1.0, 5)
    coefficients = mub_continuous_service.displacement_coefficients(vacuum_data, a, b, 1e-4, 8.0)
    aa, bb = np.meshgrid(a, b, indexing="ij")
    expected = np.exp(0.5j * aa * bb - 0.25 * (aa * aa + bb * bb))
    np.testing.assert_allclose(coefficients, expected, atol=5e-3)


def test_reconstruct_vacuum_kernel(vacuum_data, vacuum):
    out = Grid1D.symmetric(5.0, 101)
    recon = mub_continuous_service.reconstruct_density_matrix(vacuum_data, out)
    truth = state_service.realize_kernel(vacuum, out)
    assert np.max(np.abs(recon.values - truth.values)) / np.max(np.abs(truth.values)) < 0.03
    assert recon.trace() == pytest.approx(1.0)
    assert recon.hermitian_residual() == 0.0
    diagnostics = recon.diagnostics
    assert diagnostics["angles_excluded"] == 1
    assert diagnostics["angles_used"] == 89
    assert diagnostics["hermitian_residual"] < 0.05
    assert diagnostics["trace_residual"] < 0.02


def test_reject_mode_raises_on_singular_angle(vacuum_data):
    with pytest.raises(SingularAngleInData):
        mub_continuous_service.reconstruct_density_matrix(vacuum_data, Grid1D.symmetric(4.0, 41),
                                                          singular_angles="reject")


def test_too_few_usable_angles(fine_grid, vacuum):
    data = state_service.exact_quadratures(vacuum, [0.0, math.pi], fine_grid)
    with pytest.raises(TooFewAngles):
        mub_continuous_service.reconstruct_density_matrix(data, Grid1D.symmetric(4.0, 41))


def test_positivity_projection(vacuum_data):
    out = Grid1D.symmetric(5.0, 101)
    recon = mub_continuous_service.reconstruct_density_matrix(vacuum_data, out, positivity=True)
    assert recon.eigenvalues().min() > -1e-10
    assert recon.trace() == pytest.approx(1.0)
    assert recon.diagnostics["clipped_eigenvalue_mass"] >= 0.0


@pytest.mark.slow
def test_reconstruct_coherent_kernel(fine_grid):
    spec = StateSpec(kind="coherent", alpha_re=1.0, alpha_im=0.5)
    data = state_service.exact_quadratures(spec, numerics_service.uniform_angles(180), fine_grid)
    out = Grid1D.symmetric(5.0, 101)
    recon = mub_continuous_service.reconstruct_density_matrix(data, out)
    truth = state_service.realize_kernel(spec, out)
    assert np.max(np.abs(recon.values - truth.values)) / np.max(np.abs(truth.values)) < 0.05


@pytest.mark.parametrize("name, spec", state_service.reference_states(), ids=[n for n, _ in state_service.reference_states()])
def test_density_matrix_and_direct_wigner_agree(name, spec, fine_grid):
    data = state_service.exact_quadratures(spec, numerics_service.uniform_angles(90), fine_grid)
    gap = mub_continuous_service.wigner_consistency(data, Grid1D.symmetric(5.0, 101))
    assert gap < 0.05, name
