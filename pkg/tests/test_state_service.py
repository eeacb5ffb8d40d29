import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.errors import NegativeProbability, NotNormalized, NotPrime, SupportClipped, UsageError, WrongKind
from app.models.field_models import Density2D
from app.models.grid_models import Grid1D
from app.models.state_models import Blob, StateSpec
from app.services import numerics_service, state_service


def test_vacuum_kernel_is_analytic(fine_grid, vacuum):
    kernel = state_service.realize_kernel(vacuum, fine_grid)
    x1 = fine_grid.points[:, np.newaxis]
    x2 = fine_grid.points[np.newaxis, :]
    np.testing.assert_allclose(kernel.values, np.exp(-0.5 * (x1 * x1 + x2 * x2)) / math.sqrt(math.pi), atol=1e-12)
    assert kernel.diagnostics["tail_mass"] == 0.0


@pytest.mark.parametrize("name, spec", state_service.reference_states())
def test_reference_kernels_are_valid(name, spec, fine_grid):
    kernel = state_service.realize_kernel(spec, fine_grid)
    kernel.check_valid()
    assert kernel.diagnostics["trace"] == pytest.approx(1.0, abs=1e-6)


def test_thermal_and_coherent_record_tail_mass():
    thermal = state_service.fock_mixture(StateSpec(kind="thermal", nbar=1.0, nmax=20))
    assert thermal.tail_mass == pytest.approx(0.5 ** 21)
    assert thermal.weights.sum() == pytest.approx(1.0)
    coherent = state_service.fock_mixture(StateSpec(kind="coherent", alpha_re=3.0, nmax=10))
    assert coherent.tail_mass > 0.0
    assert np.linalg.norm(coherent.vectors[0]) == pytest.approx(1.0)


def test_cat_state_has_definite_parity():
    even = state_service.fock_mixture(StateSpec(kind="cat", alpha_re=1.5, parity=1))
    odd = state_service.fock_mixture(StateSpec(kind="cat", alpha_re=1.5, parity=-1))
    assert np.all(even.vectors[0, 1::2] == 0.0)
    assert np.all(odd.vectors[0, 0::2] == 0.0)


def test_mixture_propagates_truncation():
    spec = StateSpec(kind="mixed", weights=[0.25, 0.75], nmax=12,
                     components=[StateSpec(kind="vacuum"), StateSpec(kind="fock", n=2)])
    mixture = state_service.fock_mixture(spec)
    assert mixture.vectors.shape == (2, 13)
    np.testing.assert_allclose(mixture.weights, [0.25, 0.75])


def test_state_spec_validation():
    with pytest.raises(ValidationError):
        StateSpec(kind="fock")
    with pytest.raises(ValidationError):
        StateSpec(kind="thermal")
    with pytest.raises(ValidationError):
        StateSpec(kind="mixed", weights=[0.5], components=[StateSpec(kind="vacuum"), StateSpec(kind="vacuum")])
    with pytest.raises(ValidationError):
        StateSpec(kind="phantom", blobs=[Blob(weight=0.5)])


def test_wrong_kind():
    phantom = state_service.default_phantom()
    with pytest.raises(WrongKind):
        state_service.realize_kernel(phantom, Grid1D.default())
    with pytest.raises(WrongKind):
        state_service.realize_phantom(StateSpec(kind="vacuum"), Grid1D.default(), Grid1D.default())
    with pytest.raises(WrongKind):
        state_service.realize_qudit(StateSpec(kind="vacuum"))
    with pytest.raises(WrongKind):
        state_service.wigner_oracle(StateSpec(kind="cat", alpha_re=1.0), 0.0, 0.0)


def test_phantom_mass_and_positivity(grid):
    density = state_service.realize_phantom(state_service.default_phantom(), grid, grid)
    assert density.mass() == pytest.approx(1.0, abs=1e-9)
    assert density.values.min() >= 0.0
    assert density.classical


def test_phantom_must_fit_the_grid():
    small = Grid1D.symmetric(2.0, 65)
    with pytest.raises(SupportClipped):
        state_service.realize_phantom(state_service.default_phantom(), small, small)


def test_qudit_states():
    pure = state_service.realize_qudit(StateSpec(kind="qudit_pure", d=3, vector_re=[1.0, 1.0, 0.0]))
    np.testing.assert_allclose(pure.matrix[:2, :2], 0.5)
    first = state_service.realize_qudit(StateSpec(kind="qudit_random_mixed", d=5, seed=7))
    second = state_service.realize_qudit(StateSpec(kind="qudit_random_mixed", d=5, seed=7))
    np.testing.assert_array_equal(first.matrix, second.matrix)
    assert first.is_physical()
    with pytest.raises(NotPrime):
        state_service.realize_qudit(StateSpec(kind="qudit_random_mixed", d=4, seed=1))


@pytest.mark.parametrize("spec", [
    StateSpec(kind="vacuum"),
    StateSpec(kind="coherent", alpha_re=1.0, alpha_im=0.5),
    StateSpec(kind="fock", n=2),
    StateSpec(kind="thermal", nbar=0.5),
    StateSpec(kind="mixed", weights=[0.5, 0.5], components=[StateSpec(kind="vacuum"), StateSpec(kind="fock", n=1)]),
])
def test_quadrature_density_matches_oracle(spec):
    x = np.linspace(-5.0, 5.0, 101)
    for theta in numerics_service.uniform_angles(6):
        np.testing.assert_allclose(state_service.quadrature_density(spec, theta, x),
                                   state_service.quadrature_oracle(spec, theta, x), atol=1e-9)


def test_coherent_quadrature_mean():
    spec = StateSpec(kind="coherent", alpha_re=1.0, alpha_im=0.5)
    assert state_service.quadrature_mean(spec, 0.0) == pytest.approx(math.sqrt(2.0))
    assert state_service.quadrature_mean(spec, math.pi / 2) == pytest.approx(math.sqrt(2.0) * 0.5)
    x = np.linspace(-6.0, 8.0, 1401)
    density = state_service.quadrature_density(spec, 1.0, x)
    assert np.sum(x * density) * (x[1] - x[0]) == pytest.approx(state_service.quadrature_mean(spec, 1.0), abs=1e-9)


def test_exact_quadratures_rows_are_normalized(fine_grid):
    data = state_service.exact_quadratures(StateSpec(kind="fock", n=3), numerics_service.uniform_angles(8), fine_grid)
    assert data.provenance_tag == "exact"
    data.check_rows()


def test_sampling_is_deterministic_per_seed(grid, vacuum):
    angles = numerics_service.uniform_angles(4)
    first = state_service.sample_quadratures(vacuum, angles, 500, 11, grid)
    second = state_service.sample_quadratures(vacuum, angles, 500, 11, grid)
    other = state_service.sample_quadratures(vacuum, angles, 500, 12, grid)
    np.testing.assert_array_equal(first.values, second.values)
    assert not np.array_equal(first.values, other.values)
    assert first.provenance_tag == "sampled(500)"


def test_sampled_histograms_converge(grid, vacuum):
    data = state_service.sample_quadratures(vacuum, [0.0, 1.0], 200_000, 0, grid)
    data.check_rows()
    expected = state_service.quadrature_oracle(vacuum, 0.0, grid.points)
    assert np.max(np.abs(data.values - expected)) < 0.03
    # Counts per bin are integers.
    counts = data.values * 200_000 * grid.spacing
    np.testing.assert_allclose(counts, np.rint(counts), atol=1e-6)


def test_sampling_needs_shots(grid, vacuum):
    with pytest.raises(UsageError):
        state_service.sample_quadratures(vacuum, [0.0], 0, 0, grid)


def test_wigner_oracles():
    q = np.linspace(-3.0, 3.0, 7)[:, np.newaxis]
    p = np.linspace(-3.0, 3.0, 7)[np.newaxis, :]
    fock = state_service.wigner_oracle(StateSpec(kind="fock", n=1), q, p)
    assert fock[3, 3] == pytest.approx(-2.0)
    thermal = state_service.wigner_oracle(StateSpec(kind="thermal", nbar=0.0), q, p)
    np.testing.assert_allclose(thermal, state_service.wigner_oracle(StateSpec(kind="vacuum"), q, p))


def test_physical_checks_on_models(grid):
    values = np.zeros((grid.n, grid.n))
    values[0, 0] = -1.0
    with pytest.raises(NegativeProbability):
        Density2D(grid, grid, values, classical=True)


def test_normalized_densities_are_checked_on_construction(grid):
    phantom = state_service.realize_phantom(state_service.default_phantom(), grid, grid)
    assert phantom.normalized
    with pytest.raises(NotNormalized):
        Density2D(grid, grid, 1.5 * phantom.values, classical=True, normalized=True)
    unchecked = Density2D(grid, grid, 1.5 * phantom.values, classical=True)
    assert unchecked.mass() == pytest.approx(1.5, abs=1e-9)


def test_ellipse_blob_is_normalized_to_its_weight(grid):
    spec = StateSpec(kind="phantom", blobs=[
        Blob(shape="ellipse", x0=0.5, y0=-0.5, a=1.5, b=0.8, angle=0.4, weight=0.7),
        Blob(x0=-2.0, y0=1.0, sigma=0.5, weight=0.3),
    ])
    density = state_service.realize_phantom(spec, grid, grid)
    assert density.mass() == pytest.approx(1.0, abs=1e-9)
    assert density.values[grid.n // 2 + 4, grid.n // 2 - 4] > 0.0
