"""
Fractional Service
Rotated-quadrature eigenstates psi_{x',theta}(x) = <x|x',theta>, the rotation
unitary U(theta) = exp(i theta n) in the oscillator basis, projector kernels,
and the overlap laws between rotated-quadrature bases.

Conventions (hbar = 1, a = (x + i p)/sqrt(2)):
    X_theta = x cos(theta) + p sin(theta) = U x U^dagger,  |x',theta> = U |x'>
    <x|x',theta> = sum_n psi_n(x) psi_n(x') e^{i n theta}
                 = e^{i[pi/4 sgn(sin) - theta/2]} / sqrt(2 pi |sin|)
                   * exp(-i [(x^2 + x'^2) cos - 2 x x'] / (2 sin))
with theta first reduced to (-pi, pi], where the closed form and the series agree.
"""
import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.special import erfc

from app.config.settings import (
    MEHLER_TAIL_TOLERANCE,
    SINGULAR_SIN_THRESHOLD,
)
from app.errors import SingularAngle, TruncationInsufficient
from app.models.field_models import DensityKernel, OscillatorBasis, WignerField
from app.models.grid_models import Grid1D
from app.services import wigner_service

LOGGER = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


# -----------------------------------------------------------------------------
# Angles
# -----------------------------------------------------------------------------
def wrap_angle(theta: float) -> float:
    """Reduce theta to (-pi, pi]."""
    wrapped = float(np.mod(theta + np.pi, 2.0 * np.pi) - np.pi)
    return np.pi if wrapped == -np.pi else wrapped


def reduce_angle(theta: float) -> Tuple[float, int]:
    """
    Reduce theta to (-pi/2, pi/2] using |x', theta + pi> = |-x', theta>.

    Returns:
        (reduced angle, sign) such that |x', theta> = |sign * x', reduced>
    """
    turns = int(np.floor((np.pi / 2 - theta) / np.pi))
    reduced = theta + turns * np.pi
    if reduced <= -np.pi / 2:
        reduced += np.pi
        turns += 1
    return float(reduced), (-1 if turns % 2 else 1)


def _check_sin(theta: float) -> float:
    s = np.sin(theta)
    if abs(s) <= SINGULAR_SIN_THRESHOLD:
        raise SingularAngle(
            f"|sin(theta)| = {abs(s):.3e} <= {SINGULAR_SIN_THRESHOLD:g}: the kernel is a delta function here"
        )
    return float(s)


# -----------------------------------------------------------------------------
# Closed-form kernel
# -----------------------------------------------------------------------------
def quadrature_amplitude(theta: float, x: ArrayLike, xprime: ArrayLike) -> ArrayLike:
    """
    Coordinate wave function of the X_theta eigenstate with eigenvalue x'.

    Args:
        theta: Quadrature angle (radians), |sin(theta)| > 1e-8
        x: Coordinate(s)
        xprime: Eigenvalue(s); broadcast against x

    Returns:
        Complex amplitude <x|x',theta>

    Raises:
        SingularAngle: when |sin(theta)| <= 1e-8
    """
    theta = wrap_angle(theta)
    s = _check_sin(theta)
    c = np.cos(theta)
    x = np.asarray(x, dtype=float)
    xprime = np.asarray(xprime, dtype=float)
    prefactor = np.exp(1j * (0.25 * np.pi * np.sign(s) - 0.5 * theta)) / np.sqrt(2.0 * np.pi * abs(s))
    value = prefactor * np.exp(-1j * ((x * x + xprime * xprime) * c - 2.0 * x * xprime) / (2.0 * s))
    return complex(value) if value.ndim == 0 else value


def build_projector_kernel(theta: float, xprime: float, grid: Grid1D) -> np.ndarray:
    """
    Matrix of |x',theta><x',theta| in the coordinate basis.

    M[i, j] = exp(i (x_i - x_j)(x' - (x_i + x_j) cos / 2) / sin) / (2 pi |sin|)

    Raises:
        SingularAngle: when |sin(theta)| <= 1e-8
    """
    theta = wrap_angle(theta)
    s = _check_sin(theta)
    c = np.cos(theta)
    xi = grid.points[:, np.newaxis]
    xj = grid.points[np.newaxis, :]
    phase = (xi - xj) * (xprime - 0.5 * (xi + xj) * c) / s
    return np.exp(1j * phase) / (2.0 * np.pi * abs(s))


@dataclass(frozen=True)
class QuadratureKernel:
    """<x|x',theta> at a fixed non-singular angle, stored wrapped to (-pi, pi]."""
    theta: float

    def __post_init__(self):
        theta = wrap_angle(self.theta)
        _check_sin(theta)
        object.__setattr__(self, "theta", theta)

    @property
    def modulus_squared(self) -> float:
        """|<x|x',theta>|^2, the same for every (x, x')."""
        return 1.0 / (2.0 * np.pi * abs(np.sin(self.theta)))

    def amplitude(self, x: ArrayLike, xprime: ArrayLike) -> ArrayLike:
        return quadrature_amplitude(self.theta, x, xprime)

    def projector(self, xprime: float, grid: Grid1D) -> np.ndarray:
        return build_projector_kernel(self.theta, xprime, grid)


def continuous_mub_overlap(theta1: float, theta2: float) -> float:
    """
    |<x2,theta2|x1,theta1>|^2 = 1 / (2 pi |sin(theta1 - theta2)|), independent of x1, x2.

    Raises:
        SingularAngle: for the same basis (sin(theta1 - theta2) = 0)
    """
    s = _check_sin(theta1 - theta2)
    return 1.0 / (2.0 * np.pi * abs(s))


# -----------------------------------------------------------------------------
# Oscillator basis and the Mehler series
# -----------------------------------------------------------------------------
def hermite_functions(x: ArrayLike, nmax: int) -> np.ndarray:
    """
    Normalized oscillator wave functions psi_0..psi_nmax at x.

    Three-term recurrence on the normalized functions themselves:
    psi_n = sqrt(2/n) x psi_{n-1} - sqrt((n-1)/n) psi_{n-2}; no factorials.

    Returns:
        Array (nmax + 1, *x.shape)
    """
    x = np.asarray(x, dtype=float)
    values = np.empty((nmax + 1,) + x.shape)
    values[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        values[1] = np.sqrt(2.0) * x * values[0]
    for n in range(2, nmax + 1):
        values[n] = np.sqrt(2.0 / n) * x * values[n - 1] - np.sqrt((n - 1.0) / n) * values[n - 2]
    return values


def oscillator_basis(grid: Grid1D, nmax: int) -> OscillatorBasis:
    basis = OscillatorBasis(nmax=nmax, grid=grid, values=hermite_functions(grid.points, nmax))
    if not basis.adequate():
        LOGGER.warning("[Fractional] grid [%g, %g] x %d is too small for nmax=%d; orthonormality degrades",
                       grid.min, grid.max, grid.n, nmax)
    return basis


def _taper(count: int) -> np.ndarray:
    """Smooth partial-sum weights: 1 for low n, 0 near count."""
    n = np.arange(count + 1)
    center = 0.5 * count
    width = max(count / 9.0, 1.0)
    return 0.5 * erfc((n - center) / width)


def _tapered_sum(hx: np.ndarray, hxp: np.ndarray, theta: float, count: int) -> np.ndarray:
    n = np.arange(count + 1)
    coefficients = _taper(count) * np.exp(1j * n * theta)
    return np.tensordot(coefficients, hx[:count + 1] * hxp[:count + 1], axes=(0, 0))


def rotation_matrix_element(theta: float, x: ArrayLike, xprime: ArrayLike, nmax: int,
                            tolerance: float = MEHLER_TAIL_TOLERANCE) -> ArrayLike:
    """
    <x|U(theta)|x'> = sum_n psi_n(x) psi_n(x') e^{i n theta} from the oscillator basis.

    The partial sum is smoothly tapered (erfc weights centred at nmax/2) so it
    converges pointwise to the closed form for sin(theta) != 0. The tail is
    estimated by comparing with the tapered sum at 0.9 nmax.

    Args:
        theta: Angle (radians)
        x: Coordinate(s)
        xprime: Coordinate(s), broadcast against x
        nmax: Highest oscillator level
        tolerance: Maximum allowed tail estimate

    Returns:
        Complex matrix element(s)

    Raises:
        TruncationInsufficient: coordinates outside the basis validity range,
            or tail estimate above tolerance
    """
    if nmax < 1:
        raise TruncationInsufficient(f"nmax must be >= 1, got {nmax}")
    x, xprime = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xprime, dtype=float))
    reach = 0.5 * np.sqrt(2.0 * nmax + 1.0)
    largest = float(max(np.max(np.abs(x)), np.max(np.abs(xprime))))
    if largest > reach:
        raise TruncationInsufficient(
            f"|x| up to {largest:g} exceeds the nmax={nmax} validity range {reach:.3f}"
        )
    hx = hermite_functions(x, nmax)
    hxp = hermite_functions(xprime, nmax)
    value = _tapered_sum(hx, hxp, theta, nmax)
    if abs(np.sin(theta)) > SINGULAR_SIN_THRESHOLD:
        coarse = _tapered_sum(hx, hxp, theta, int(0.9 * nmax))
        tail = float(np.max(np.abs(value - coarse)))
        if tail > tolerance:
            raise TruncationInsufficient(
                f"Mehler tail estimate {tail:.3e} exceeds {tolerance:g} at theta={theta:.4f}, nmax={nmax}"
            )
    return complex(value) if value.ndim == 0 else value


def apply_rotation(theta: float, values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """(U(theta) f)(x) = int <x|U|z> f(z) dz on the grid (trapezoid)."""
    kernel = quadrature_amplitude(theta, grid.points[:, np.newaxis], grid.points[np.newaxis, :])
    return kernel @ np.asarray(values, dtype=complex) * grid.spacing


def to_quadrature_representation(theta: float, values: np.ndarray, grid: Grid1D,
                                 xprime: np.ndarray) -> np.ndarray:
    """<x',theta|f> = int conj(<x|x',theta>) f(x) dx."""
    kernel = np.conj(quadrature_amplitude(theta, grid.points[np.newaxis, :], np.asarray(xprime)[:, np.newaxis]))
    return kernel @ np.asarray(values, dtype=complex) * grid.spacing


# -----------------------------------------------------------------------------
# Property checks
# -----------------------------------------------------------------------------
def eigen_relation_residual(theta: float, xprime: float, grid: Grid1D) -> float:
    """
    max |(x cos - i sin d/dx) psi - x' psi| over interior nodes, by centred differences.
    """
    psi = quadrature_amplitude(theta, grid.points, xprime)
    dpsi = np.gradient(psi, grid.spacing, edge_order=2)
    lhs = grid.points * np.cos(theta) * psi - 1j * np.sin(theta) * dpsi
    return float(np.max(np.abs(lhs - xprime * psi)[1:-1]))


def momentum_phase_residual(theta: float, values: np.ndarray, grid: Grid1D,
                            xprime: Grid1D) -> float:
    """
    Compare <x',theta|P_theta|f> with -i d/dx' <x',theta|f> for P_theta = -sin x + cos p.

    Returns:
        Max-norm difference over interior x' nodes
    """
    values = np.asarray(values, dtype=complex)
    p_f = -1j * np.gradient(values, grid.spacing, edge_order=2)
    rotated_p = -np.sin(theta) * grid.points * values + np.cos(theta) * p_f
    lhs = to_quadrature_representation(theta, rotated_p, grid, xprime.points)
    f_theta = to_quadrature_representation(theta, values, grid, xprime.points)
    rhs = -1j * np.gradient(f_theta, xprime.spacing, edge_order=2)
    return float(np.max(np.abs(lhs - rhs)[1:-1]))


def numeric_mub_overlap(x1: float, theta1: float, x2: float, theta2: float,
                        half_width: float = 40.0, taper: float = 5.0) -> float:
    """
    |int conj(psi_{x1,theta1}) psi_{x2,theta2} dx|^2 by windowed chirp quadrature.

    The integrand is a pure chirp exp(i(alpha x^2 + beta x)); it is integrated
    over a smooth flat-top window centred on the stationary point, with a step
    resolving the fastest phase inside the window.
    """
    t1, t2 = wrap_angle(theta1), wrap_angle(theta2)
    s1, s2 = _check_sin(t1), _check_sin(t2)
    continuous_mub_overlap(t1, t2)
    alpha = 0.5 * (np.cos(t1) / s1 - np.cos(t2) / s2)
    beta = -x1 / s1 + x2 / s2
    center = -beta / (2.0 * alpha)
    reach = half_width + 6.0 * taper
    step = np.pi / (4.0 * (2.0 * abs(alpha) * reach + 1.0))
    count = int(np.ceil(reach / step))
    x = center + np.arange(-count, count + 1) * step
    window = 0.5 * erfc((np.abs(x - center) - half_width) / taper)
    integrand = np.conj(quadrature_amplitude(t1, x, x1)) * quadrature_amplitude(t2, x, x2) * window
    return float(abs(np.sum(integrand) * step) ** 2)


def projector_kernel(theta: float, xprime: float, q_grid: Grid1D, p_grid: Grid1D,
                     width: float) -> DensityKernel:
    """
    |x',theta><x',theta| on a coordinate grid that contains every q_grid node,
    multiplied by the coherence window exp(-(x1 - x2)^2 / (2 L^2)).

    The window turns the Wigner ridge delta(x' - q cos - p sin) into a normal
    profile of standard deviation width = |sin| / L across the line. The grid
    extends 2.5 L past q_grid on each side, and its step keeps the sampled ridge
    (and its p-periodic images) inside the resolvable band.

    Raises:
        SingularAngle: when |sin(theta)| <= 1e-8
    """
    theta = wrap_angle(theta)
    s = _check_sin(theta)
    coherence = abs(s) / width
    reach = max(abs(q_grid.min), abs(q_grid.max))
    p_max = max(abs(p_grid.min), abs(p_grid.max))
    ridge_p = (abs(xprime) + reach * abs(np.cos(theta))) / abs(s)
    limit = min(np.pi / (ridge_p + p_max + 5.0 / coherence), 0.5 * np.pi / max(p_max, 1e-12))
    refine = max(1, int(np.ceil(q_grid.spacing / limit)))
    step = q_grid.spacing / refine
    margin = int(np.ceil(2.5 * coherence / step))
    grid = Grid1D(min=q_grid.min - margin * step, max=q_grid.max + margin * step,
                  n=(q_grid.n - 1) * refine + 2 * margin + 1)
    gap = grid.points[:, np.newaxis] - grid.points[np.newaxis, :]
    values = build_projector_kernel(theta, xprime, grid) * np.exp(-0.5 * (gap / coherence) ** 2)
    return DensityKernel(grid, values, diagnostics={"coherence_length": coherence, "ridge_width": width})


def projector_ridge(theta: float, xprime: float, q_grid: Grid1D, p_grid: Grid1D,
                    width_cells: float = 0.5) -> WignerField:
    """
    Wigner transform of the windowed projector |x',theta><x',theta|.

    Args:
        theta: Quadrature angle, |sin(theta)| > 1e-8
        xprime: Eigenvalue x'
        q_grid: Output position grid
        p_grid: Output momentum grid
        width_cells: Ridge standard deviation in output cells

    Returns:
        WignerField concentrated on q cos(theta) + p sin(theta) = x'
    """
    width = width_cells * max(q_grid.spacing, p_grid.spacing)
    kernel = projector_kernel(theta, xprime, q_grid, p_grid, width)
    field = wigner_service.wigner_transform(kernel, q_grid, p_grid, expect_normalized=False)
    field.diagnostics.update(kernel.diagnostics)
    field.diagnostics["mass_fraction"] = ridge_mass_fraction(field, theta, xprime)
    LOGGER.info("[Fractional] projector ridge theta=%.4f x'=%.4f on a %d-point kernel, %.4f of |W| within 2 cells",
                theta, xprime, kernel.grid.n, field.diagnostics["mass_fraction"])
    return field


def ridge_mass_fraction(field: WignerField, theta: float, xprime: float, cells: float = 2.0) -> float:
    """Share of sum |W| lying within `cells` output cells of the line q cos + p sin = x'."""
    cell = max(field.q_grid.spacing, field.p_grid.spacing)
    q = field.q_grid.points[:, np.newaxis]
    p = field.p_grid.points[np.newaxis, :]
    distance = np.abs(q * np.cos(theta) + p * np.sin(theta) - xprime)
    weights = np.abs(field.values)
    total = float(weights.sum())
    return float(weights[distance <= cells * cell].sum()) / total if total > 0.0 else 0.0


def ridge_overlap(theta1: float, x1: float, theta2: float, x2: float,
                  q_grid: Grid1D, p_grid: Grid1D, width_cells: float = 2.0) -> float:
    """
    Phase-space overlap of two quadrature projectors, Tr(P1 P2) = 1/(2 pi |sin(theta1 - theta2)|),
    evaluated with trace_product on their windowed Wigner ridges.
    """
    first = projector_ridge(theta1, x1, q_grid, p_grid, width_cells)
    second = projector_ridge(theta2, x2, q_grid, p_grid, width_cells)
    return wigner_service.trace_product(first, second)
