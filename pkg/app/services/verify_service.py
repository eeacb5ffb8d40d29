"""
Verify Service
Invariant suites run by the `verify` subcommand, one suite per module. Each
check reports its measured value against its threshold; a suite never stops at
the first failure.
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from app.errors import TomographyError
from app.models.field_models import Density2D, PrimeDim
from app.models.grid_models import Grid1D, PVKernel
from app.models.run_models import CheckResult, VerifyResult
from app.models.state_models import Blob, StateSpec
from app.services import (
    fractional_service,
    mub_continuous_service,
    numerics_service,
    qudit_service,
    radon_service,
    state_service,
    wigner_service,
)

LOGGER = logging.getLogger(__name__)

DEFAULT_PRIMES = (2, 3, 5, 7)


def _at_most(module: str, name: str, value: float, threshold: float, detail: str = "") -> CheckResult:
    return CheckResult(module=module, name=name, passed=bool(value <= threshold), value=float(value),
                       threshold=float(threshold), detail=detail)


def _holds(module: str, name: str, passed: bool, detail: str = "") -> CheckResult:
    return CheckResult(module=module, name=name, passed=bool(passed), detail=detail)


def _guarded(module: str, name: str, check: Callable[[], List[CheckResult]]) -> List[CheckResult]:
    try:
        return check()
    except TomographyError as e:
        return [_holds(module, name, False, f"{type(e).__name__}: {e}")]


# -----------------------------------------------------------------------------
# numerics
# -----------------------------------------------------------------------------
def verify_numerics() -> List[CheckResult]:
    module = "numerics"
    grid = Grid1D.symmetric(10.0, 513)
    kernel = PVKernel.for_grid(grid)
    x = grid.points
    profile = np.exp(-0.5 * x * x)
    results = [_at_most(module, "pv_kernel_odd", float(np.max(np.abs(
        numerics_service.pv_g(kernel, x) + numerics_service.pv_g(kernel, -x)))), 0.0)]

    ramp = numerics_service.ramp_filter(profile, grid)
    peak = 2.0 / math.sqrt(2.0 * math.pi)
    results.append(_at_most(module, "ramp_gaussian_peak", abs(ramp[grid.n // 2] - peak) / peak, 1e-3))

    pv = numerics_service.pv_convolve(profile, grid, kernel, x[100:-100])
    reference = 2.0 * math.pi * ramp[100:-100]
    results.append(_at_most(module, "pv_matches_ramp",
                            float(np.max(np.abs(pv - reference)) / np.max(np.abs(reference))), 1e-2))

    weights = numerics_service.angle_weights(numerics_service.uniform_angles(90))
    results.append(_at_most(module, "angle_weights_sum", abs(weights.sum() - math.pi), 1e-12))
    return results


# -----------------------------------------------------------------------------
# radon
# -----------------------------------------------------------------------------
def _gaussian_density(grid: Grid1D, sigma: float = 1.0) -> Density2D:
    x = grid.points[:, np.newaxis]
    y = grid.points[np.newaxis, :]
    values = np.exp(-(x * x + y * y) / (2.0 * sigma ** 2)) / (2.0 * math.pi * sigma ** 2)
    return Density2D(grid, grid, values, classical=True, normalized=True)


def verify_radon() -> List[CheckResult]:
    module = "radon"
    grid = Grid1D.symmetric(8.0, 129)
    sinogram = radon_service.forward_radon(_gaussian_density(grid), numerics_service.uniform_angles(36),
                                           grid, order=3)
    mean_row = sinogram.values.mean(axis=0)
    anisotropy = float(np.max(np.abs(sinogram.values - mean_row)) / np.max(mean_row))
    results = [_at_most(module, "isotropy", anisotropy, 1e-4)]

    spec = StateSpec(kind="phantom", blobs=[Blob(x0=-1.5, y0=0.0, sigma=0.6, weight=0.6),
                                            Blob(x0=1.5, y0=1.0, sigma=0.7, weight=0.4)])
    phantom = state_service.realize_phantom(spec, grid, grid)
    data = radon_service.forward_radon(phantom, numerics_service.uniform_angles(90), grid)
    for method in radon_service.METHODS:
        recon = radon_service.inverse_radon(data, grid, grid, method=method)
        error = np.linalg.norm(recon.values - phantom.values) / np.linalg.norm(phantom.values)
        results.append(_at_most(module, f"round_trip_{method}", float(error), 0.05))

    factorization = radon_service.conditional_factorize(phantom)
    rebuilt = factorization.reassemble()
    supported = factorization.supported
    residual = float(np.max(np.abs(rebuilt[:, supported] - phantom.values[:, supported])))
    results.append(_at_most(module, "conditional_reassembly", residual, 1e-12))
    return results


# -----------------------------------------------------------------------------
# wigner
# -----------------------------------------------------------------------------
def verify_wigner() -> List[CheckResult]:
    module = "wigner"
    grid = Grid1D.default()
    centre = grid.n // 2
    vacuum = wigner_service.wigner_transform(state_service.realize_kernel(StateSpec(kind="vacuum"), grid),
                                             grid, grid)
    fock = wigner_service.wigner_transform(state_service.realize_kernel(StateSpec(kind="fock", n=1), grid),
                                           grid, grid)
    results = [
        _at_most(module, "vacuum_origin", abs(vacuum.values[centre, centre] - 2.0), 1e-3),
        _at_most(module, "vacuum_normalization", abs(vacuum.normalization() - 1.0), 1e-4),
        _at_most(module, "fock1_origin", abs(fock.values[centre, centre] + 2.0), 1e-3),
        _at_most(module, "vacuum_purity", abs(wigner_service.trace_product(vacuum, vacuum) - 1.0), 1e-3),
        _at_most(module, "fock_overlap", abs(wigner_service.trace_product(vacuum, fock)), 1e-3),
    ]

    out = Grid1D.symmetric(6.0, 121)
    data = state_service.exact_quadratures(StateSpec(kind="fock", n=1), numerics_service.uniform_angles(90), grid)
    recon = wigner_service.reconstruct_wigner(data, out, out)
    origin = float(recon.values[out.n // 2, out.n // 2])
    results.append(_holds(module, "fock1_negativity", -2.2 <= origin <= -1.5, f"W(0,0) = {origin:.4f}"))
    return results


# -----------------------------------------------------------------------------
# fractional
# -----------------------------------------------------------------------------
def verify_fractional(seed: int = 0) -> List[CheckResult]:
    module = "fractional"
    points = np.linspace(-3.0, 3.0, 21)
    x = points[:, np.newaxis]
    xprime = points[np.newaxis, :]
    worst = 0.0
    for theta in (np.pi / 6, -np.pi / 6, np.pi / 3, -np.pi / 3, np.pi / 2):
        series = fractional_service.rotation_matrix_element(theta, x, xprime, 200)
        closed = fractional_service.quadrature_amplitude(theta, x, xprime)
        worst = max(worst, float(np.max(np.abs(series - closed))))
    results = [_at_most(module, "mehler_cross_check", worst, 1e-8)]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        x1, x2 = rng.uniform(-3.0, 3.0, 2)
        theta1 = rng.uniform(0.0, np.pi)
        theta2 = theta1 + rng.uniform(0.2, np.pi - 0.2)
        law = fractional_service.continuous_mub_overlap(theta1, theta2)
        numeric = fractional_service.numeric_mub_overlap(x1, theta1, x2, theta2)
        worst = max(worst, abs(numeric - law) / law)
    results.append(_at_most(module, "mub_overlap_law", worst, 1e-2))

    fine = Grid1D.symmetric(3.0, 6001)
    residual = fractional_service.eigen_relation_residual(0.7, 0.5, fine)
    results.append(_at_most(module, "eigen_relation", residual, 1e-3))

    plane = Grid1D.symmetric(4.0, 81)
    ridge = fractional_service.ridge_overlap(0.3, 0.0, 1.2, 0.0, plane, plane)
    law = fractional_service.continuous_mub_overlap(0.3, 1.2)
    results.append(_at_most(module, "ridge_overlap", abs(ridge - law) / law, 2e-2))
    field = fractional_service.projector_ridge(0.7, 0.5, plane, plane)
    outside = 1.0 - fractional_service.ridge_mass_fraction(field, 0.7, 0.5, cells=2.0)
    results.append(_at_most(module, "projector_ridge_off_line_mass", outside, 0.05))
    return results


# -----------------------------------------------------------------------------
# mub-continuous
# -----------------------------------------------------------------------------
def verify_mub_continuous() -> List[CheckResult]:
    module = "mub-continuous"
    grid = Grid1D.default()
    vacuum = StateSpec(kind="vacuum")
    kernel = state_service.realize_kernel(vacuum, grid)
    coefficient = mub_continuous_service.displacement_coefficient(kernel, 1.0, 0.0)
    results = [
        _at_most(module, "vacuum_coefficient", abs(coefficient - math.exp(-0.25)), 1e-4),
        _at_most(module, "trace_coefficient", abs(mub_continuous_service.displacement_coefficient(kernel, 0.0, 0.0) - 1.0),
                 1e-10),
        _at_most(module, "lattice_orthogonality",
                 float(np.max(np.abs(mub_continuous_service.displacement_gram(8, 0.5) - np.eye(64)))), 1e-12),
    ]

    out = Grid1D.symmetric(5.0, 101)
    data = state_service.exact_quadratures(vacuum, numerics_service.uniform_angles(90), grid)
    recon = mub_continuous_service.reconstruct_density_matrix(data, out)
    truth = state_service.realize_kernel(vacuum, out)
    error = float(np.max(np.abs(recon.values - truth.values)) / np.max(np.abs(truth.values)))
    results.append(_at_most(module, "vacuum_kernel", error, 0.03))
    results.append(_at_most(module, "hermitian_before_symmetrization", recon.diagnostics["hermitian_residual"], 0.05))
    results.append(_at_most(module, "trace_before_renormalization", recon.diagnostics["trace_residual"], 0.02))
    cat = state_service.exact_quadratures(StateSpec(kind="cat", alpha_re=1.5, parity=1),
                                          numerics_service.uniform_angles(90), grid)
    for name, exact in (("vacuum", data), ("cat", cat)):
        gap = mub_continuous_service.wigner_consistency(exact, out)
        results.append(_at_most(module, f"two_route_wigner[{name}]", gap, 0.05))
    return results


# -----------------------------------------------------------------------------
# qudit-mub
# -----------------------------------------------------------------------------
def verify_qudit(primes: Sequence[int] = DEFAULT_PRIMES, trials: int = 20, seed: int = 0) -> List[CheckResult]:
    module = "qudit-mub"
    results = []
    rng = np.random.default_rng(seed)
    for d in primes:
        dim = PrimeDim(d)
        tag = f"d={d}"
        inverses = all((m * qudit_service.mod_inverse(m, dim)) % d == 1 for m in range(1, d))
        results.append(_holds(module, f"mod_inverse[{tag}]", inverses))

        shift, clock = qudit_service.schwinger_ops(dim)
        commutation = float(np.max(np.abs(clock @ shift - dim.omega * shift @ clock)))
        results.append(_at_most(module, f"commutation[{tag}]", commutation, 1e-15 * d))

        identities = all(qudit_service.power_identity_check(dim, m, b) for m in range(1, d) for b in range(d))
        results.append(_holds(module, f"power_identity[{tag}]", identities))

        fam = qudit_service.mub_family(dim)
        results.append(_at_most(module, f"orthonormality[{tag}]", qudit_service.orthonormality_residual(fam), 1e-12))
        results.append(_at_most(module, f"flatness[{tag}]", qudit_service.flatness_residual(fam), 1e-12))
        eigen = max(qudit_service.eigen_relation_residual(fam, m) for m in range(1, d))
        results.append(_at_most(module, f"eigen_relation[{tag}]", eigen, 1e-12))
        results.append(_holds(module, f"operator_rank[{tag}]", qudit_service.operator_gram_rank(dim) == d * d))

        mixed = qudit_service.maximally_mixed(dim)
        fixed = qudit_service.reconstruct_qudit(qudit_service.measurement_probabilities(mixed, fam), fam)
        results.append(_at_most(module, f"mixed_fixed_point[{tag}]",
                                float(np.max(np.abs(fixed.matrix - mixed.matrix))), 1e-12))

        worst = 0.0
        for _ in range(trials):
            state = qudit_service.random_mixed(dim, rng)
            recon = qudit_service.reconstruct_qudit(qudit_service.measurement_probabilities(state, fam), fam)
            worst = max(worst, qudit_service.trace_norm_error(recon, state))
        results.append(_at_most(module, f"round_trip[{tag}]", worst, 1e-10))
    return results


# -----------------------------------------------------------------------------
# states
# -----------------------------------------------------------------------------
def verify_states() -> List[CheckResult]:
    module = "states"
    grid = Grid1D.default()
    x1 = grid.points[:, np.newaxis]
    x2 = grid.points[np.newaxis, :]
    vacuum = state_service.realize_kernel(StateSpec(kind="vacuum"), grid)
    analytic = np.exp(-0.5 * (x1 * x1 + x2 * x2)) / math.sqrt(math.pi)
    results = [_at_most(module, "vacuum_kernel", float(np.max(np.abs(vacuum.values - analytic))), 1e-10)]

    thermal = state_service.realize_kernel(StateSpec(kind="thermal", nbar=1.0), grid)
    results.append(_at_most(module, "thermal_trace", abs(thermal.trace() - 1.0), 1e-6))

    coherent = StateSpec(kind="coherent", alpha_re=1.0, alpha_im=0.5)
    worst = 0.0
    for theta in numerics_service.uniform_angles(8):
        exact = state_service.quadrature_density(coherent, theta, grid.points)
        worst = max(worst, float(np.max(np.abs(exact - state_service.quadrature_oracle(coherent, theta, grid.points)))))
    results.append(_at_most(module, "coherent_oracle", worst, 1e-3))

    for name, spec in state_service.reference_states():
        try:
            state_service.realize_kernel(spec, grid).check_valid()
            results.append(_holds(module, f"valid_kernel[{name}]", True))
        except TomographyError as e:
            results.append(_holds(module, f"valid_kernel[{name}]", False, f"{type(e).__name__}: {e}"))
    return results


SUITES: Dict[str, Callable[..., List[CheckResult]]] = {
    "numerics": verify_numerics,
    "radon": verify_radon,
    "wigner": verify_wigner,
    "fractional": verify_fractional,
    "mub-continuous": verify_mub_continuous,
    "qudit-mub": verify_qudit,
    "states": verify_states,
}


def run_verification(module: str = "all", d: Optional[int] = None) -> VerifyResult:
    """
    Run one suite or all of them.

    Args:
        module: Suite name or "all"
        d: Restrict the qudit suite to one prime

    Returns:
        VerifyResult with every check, passed or not

    Raises:
        ValueError: for an unknown module name
    """
    if module != "all" and module not in SUITES:
        raise ValueError(f"unknown module '{module}', expected one of {sorted(SUITES)} or 'all'")
    names = list(SUITES) if module == "all" else [module]
    result = VerifyResult()
    for name in names:
        if name == "qudit-mub":
            primes = (PrimeDim(d).d,) if d is not None else DEFAULT_PRIMES
            checks = _guarded(name, "suite", lambda: verify_qudit(primes))
        else:
            checks = _guarded(name, "suite", SUITES[name])
        result.checks.extend(checks)
        failed = sum(not check.passed for check in checks)
        log = LOGGER.warning if failed else LOGGER.info
        log("[Verify] %s: %d checks, %d failed", name, len(checks), failed)
    return result
