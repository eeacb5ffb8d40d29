"""
Radon Service
Forward Radon transform (sinogram synthesis), inverse Radon reconstruction by
principal-value or ramp filtering plus back-projection, and the conditional
factorization rho(q, p) = P(q|p) P(p) of a classical phase-space density.
"""
import logging
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import map_coordinates

from app.config.settings import (
    FFT_PADDING,
    INTERPOLATION_ORDER,
    MIN_ANGLES,
    NEGATIVITY_TOLERANCE,
    SUPPORT_TOLERANCE,
)
from app.errors import EmptyFiber, InvalidGrid, NegativeProbability, SupportClipped, TooFewAngles
from app.models.field_models import ConditionalFactorization, Density2D, Sinogram
from app.models.grid_models import Grid1D
from app.services import numerics_service
from app.utils.parallel import ordered_map, ordered_sum

LOGGER = logging.getLogger(__name__)

METHODS = ("pv", "ramp")


# -----------------------------------------------------------------------------
# Forward transform
# -----------------------------------------------------------------------------
def check_support(density: Density2D, offsets: Grid1D, tolerance: float = SUPPORT_TOLERANCE) -> None:
    """
    Raise SupportClipped if density mass lies outside the disc the offsets cover.
    """
    reach = min(abs(offsets.min), abs(offsets.max)) if offsets.min < 0 < offsets.max else 0.0
    x = density.x_grid.points[:, np.newaxis]
    y = density.y_grid.points[np.newaxis, :]
    outside = np.hypot(x, y) > reach + 0.5 * offsets.spacing
    peak = float(np.max(np.abs(density.values)))
    if peak == 0.0 or not np.any(outside):
        return
    leak = float(np.max(np.abs(density.values[outside])))
    if leak > tolerance * peak:
        raise SupportClipped(
            f"density support exits the offset range |x'| <= {reach:g}: "
            f"relative value {leak / peak:.3e} outside (tolerance {tolerance:g})"
        )


def _line_integrals(density: Density2D, theta: float, offsets: np.ndarray,
                    tau: np.ndarray, order: int) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    # Points x' (c, s) + tau (-s, c) along each line.
    x = offsets[:, np.newaxis] * c - tau[np.newaxis, :] * s
    y = offsets[:, np.newaxis] * s + tau[np.newaxis, :] * c
    coords = np.stack([density.x_grid.to_index(x), density.y_grid.to_index(y)])
    samples = map_coordinates(density.values, coords, order=order, mode="constant", cval=0.0)
    return trapezoid(samples, dx=tau[1] - tau[0], axis=1)


def forward_radon(density: Density2D, angles: Sequence[float], offsets: Grid1D,
                  order: int = INTERPOLATION_ORDER, require_normalized: bool = True,
                  normalization_tolerance: float = 1e-3) -> Sinogram:
    """
    Line integrals of a 2D density along x' = x cos(theta) + y sin(theta).

    Args:
        density: Density on an (x, y) grid
        angles: Projection angles in radians
        offsets: Grid of x' values
        order: Interpolation order (1 = bilinear, 3/5 = spline)
        require_normalized: Check the density integrates to 1 first
        normalization_tolerance: Tolerance for that check

    Returns:
        Sinogram with the density's measure; phase-space densities are divided by 2 pi

    Raises:
        SupportClipped: if the density reaches outside the offset range
        NotNormalized: if require_normalized and the density is not normalized
    """
    if require_normalized:
        density.check_normalized(normalization_tolerance)
    check_support(density, offsets)
    angles = np.atleast_1d(np.asarray(angles, dtype=float))

    step = min(density.x_grid.spacing, density.y_grid.spacing)
    half_diagonal = max(
        np.hypot(density.x_grid.min, density.y_grid.min),
        np.hypot(density.x_grid.max, density.y_grid.max),
        np.hypot(density.x_grid.min, density.y_grid.max),
        np.hypot(density.x_grid.max, density.y_grid.min),
    )
    count = int(np.ceil(half_diagonal / step))
    tau = np.arange(-count, count + 1) * step
    x_prime = offsets.points

    rows = ordered_map(lambda theta: _line_integrals(density, theta, x_prime, tau, order), angles)
    values = np.array(rows) * density.measure.weight
    LOGGER.info("[Radon] forward transform: %d angles x %d offsets (order %d)", angles.size, offsets.n, order)
    return Sinogram(angles=angles, offsets=offsets, values=values, measure=density.measure)


# -----------------------------------------------------------------------------
# Inverse transform
# -----------------------------------------------------------------------------
def check_angles(angles: np.ndarray, minimum: int = MIN_ANGLES) -> None:
    """At least `minimum` angles in [0, pi) with no gap wider than pi/4."""
    if angles.size < minimum:
        raise TooFewAngles(f"need at least {minimum} angles, got {angles.size}")
    reduced = np.sort(np.mod(angles, np.pi))
    gaps = np.diff(np.concatenate([reduced, [reduced[0] + np.pi]]))
    if gaps.max() > np.pi / 4 + 1e-12:
        raise TooFewAngles(f"angles do not span [0, pi): largest gap {gaps.max():.4f} rad")


def filter_projections(sinogram: Sinogram, method: str = "pv", epsilon: Optional[float] = None,
                       padding: int = FFT_PADDING, apodize: bool = False) -> np.ndarray:
    """
    Filter every sinogram row so that back-projection yields the PlainDxDy density.

    PV route: rho = (1 / 4 pi^2) * sum_theta pv_convolve; ramp route:
    rho = (1 / 2 pi) * sum_theta ramp. The returned rows already carry those
    factors.
    """
    offsets = sinogram.offsets
    if method == "pv":
        kernel = numerics_service.resolve_epsilon(offsets, epsilon)
        filtered = numerics_service.pv_filter(sinogram.values, offsets, kernel)
        return filtered / (4.0 * np.pi ** 2)
    if method == "ramp":
        live = np.any(sinogram.values != 0.0, axis=1)
        if np.any(live):
            numerics_service.check_boundary(sinogram.values[live])
        filtered = numerics_service.ramp_filter(sinogram.values, offsets, padding=padding, apodize=apodize)
        return filtered / (2.0 * np.pi)
    raise ValueError(f"unknown inversion method '{method}', expected one of {METHODS}")


def back_project(filtered: np.ndarray, angles: np.ndarray, offsets: Grid1D,
                 x_grid: Grid1D, y_grid: Grid1D) -> np.ndarray:
    """Trapezoid-in-theta sum of filtered rows sampled at x cos + y sin."""
    weights = numerics_service.angle_weights(angles)
    x = x_grid.points[:, np.newaxis]
    y = y_grid.points[np.newaxis, :]
    x_prime = offsets.points

    def project(k: int) -> np.ndarray:
        t = x * np.cos(angles[k]) + y * np.sin(angles[k])
        return weights[k] * np.interp(t, x_prime, filtered[k], left=0.0, right=0.0)

    return ordered_sum(ordered_map(project, range(angles.size)))


def inverse_radon(sinogram: Sinogram, x_grid: Grid1D, y_grid: Grid1D, method: str = "pv",
                  epsilon: Optional[float] = None, padding: int = FFT_PADDING,
                  apodize: bool = False, clip_negative: bool = False) -> Density2D:
    """
    Reconstruct a density from its projections.

    rho(x, y) = -(1/2 pi^2) int_0^pi dtheta PV int dx' (d rho_theta/dx') / (x' - x cos - y sin)
    for PlainDxDy; the phase-space measure uses -(1/pi) instead.

    Args:
        sinogram: Projections over angles in [0, pi)
        x_grid: Output x (or q) grid
        y_grid: Output y (or p) grid
        method: "pv" (regularized PV kernel) or "ramp" (FFT |k| filter)
        epsilon: PV regularization; defaults to EPSILON_FACTOR offset spacings
        padding: FFT zero-padding factor for the ramp route
        apodize: Cosine apodization for the ramp route
        clip_negative: Clip negative overshoot to zero (classical densities only)

    Returns:
        Density2D with the sinogram's measure

    Raises:
        TooFewAngles: fewer than 8 angles, or angles not spanning [0, pi)
        BoundaryLeak: rows that do not decay at the offset ends
    """
    check_angles(sinogram.angles)
    filtered = filter_projections(sinogram, method, epsilon, padding, apodize)
    values = back_project(filtered, sinogram.angles, sinogram.offsets, x_grid, y_grid)
    # The filtered rows produce the PlainDxDy density; W = 2 pi rho for dq dp / 2 pi.
    values = values * (sinogram.measure.inversion_prefactor * 2.0 * np.pi ** 2)

    diagnostics = {"method": method, "angles": int(sinogram.angles.size)}
    if clip_negative:
        clipped = float(-values[values < 0].sum()) * x_grid.spacing * y_grid.spacing
        values = np.maximum(values, 0.0)
        diagnostics["clipped_mass"] = clipped
        LOGGER.info("[Radon] clipped negative overshoot, mass %.3e", clipped)
    density = Density2D(x_grid, y_grid, values, measure=sinogram.measure, diagnostics=diagnostics)
    LOGGER.info("[Radon] inverse transform (%s): mass %.6f", method, density.mass())
    return density


# -----------------------------------------------------------------------------
# Conditional factorization
# -----------------------------------------------------------------------------
def conditional_factorize(density: Density2D, threshold: float = 1e-10) -> ConditionalFactorization:
    """
    Split rho(q, p) into the momentum marginal P(p) and the conditional P(q|p).

    Args:
        density: Classical density, values[i, j] = rho(q_i, p_j)
        threshold: Rows with P(p) <= threshold * max P are unsupported

    Returns:
        ConditionalFactorization; unsupported rows of the conditional are NaN

    Raises:
        NegativeProbability: if the density has negative values
        EmptyFiber: if no row is supported
    """
    values = density.values
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if values.min() < -NEGATIVITY_TOLERANCE * max(peak, 1.0):
        raise NegativeProbability(f"conditional factorization needs rho >= 0 (min {values.min():.3e})")
    weight = density.measure.weight
    marginal = trapezoid(values, dx=density.x_grid.spacing, axis=0) * weight
    supported = marginal > threshold * max(float(marginal.max()), 0.0)
    if not np.any(supported):
        raise EmptyFiber("every momentum row has vanishing marginal")
    conditional = np.full_like(values, np.nan)
    conditional[:, supported] = values[:, supported] * weight / marginal[np.newaxis, supported]
    empty = int((~supported).sum())
    if empty:
        LOGGER.info("[Radon] %d of %d momentum rows below threshold; conditional undefined there",
                    empty, supported.size)
    return ConditionalFactorization(
        q_grid=density.x_grid,
        p_grid=density.y_grid,
        marginal=marginal,
        conditional=conditional,
        supported=supported,
        measure=density.measure,
    )


def rotate_rows(sinogram: Sinogram, shift: int) -> np.ndarray:
    """
    Rows of the sinogram of the density rotated by shift * (pi / n_angles).

    Rows that wrap past theta = 0 come back reflected in x' (|x', theta + pi> = |-x', theta>).
    Requires uniform angles and a symmetric offset grid.

    Raises:
        InvalidGrid: if the offset grid is not symmetric about 0
    """
    if not sinogram.offsets.is_symmetric():
        raise InvalidGrid(f"reflecting rows needs offsets symmetric about 0, "
                          f"got [{sinogram.offsets.min:g}, {sinogram.offsets.max:g}]")
    count = sinogram.angles.size
    rows = np.empty_like(sinogram.values)
    for k in range(count):
        source = k - shift
        if source >= 0:
            rows[k] = sinogram.values[source]
        else:
            rows[k] = sinogram.values[source + count][::-1]
    return rows
