"""
Numerics Service
Shared numerical substrate: the regularized principal-value kernel, PV filtering
of projection profiles, FFT ramp filtering, angular quadrature weights and the
eigenvalue floor used by the positivity projections.

Conventions: Fourier transforms use e^{-ikx}; the ramp filter multiplies by |k|.
pv_convolve(f, alpha) tends to 2 pi * ramp_filter(f)(alpha) as epsilon -> 0.
"""
import logging
from typing import Optional, Tuple, Union

import numpy as np
from scipy import fft as sp_fft

from app.config.settings import (
    BOUNDARY_TOLERANCE,
    FFT_PADDING,
    MIN_PROFILE_LENGTH,
)
from app.errors import BoundaryLeak, GridTooCoarse, InvalidGrid
from app.models.grid_models import Grid1D, PVKernel

LOGGER = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def pv_g(kernel: PVKernel, xi: ArrayLike) -> ArrayLike:
    """
    Evaluate g(xi) = 2 xi / (xi^2 + epsilon^2).

    Args:
        kernel: Regularized kernel
        xi: Scalar or array argument

    Returns:
        Kernel values, same shape as xi (odd in xi to the last bit)
    """
    xi = np.asarray(xi, dtype=float)
    value = 2.0 * xi / (xi * xi + kernel.epsilon ** 2)
    return float(value) if value.ndim == 0 else value


def check_boundary(samples: np.ndarray, tolerance: float = BOUNDARY_TOLERANCE, label: str = "profile") -> None:
    """
    Require samples to decay at both ends of the grid.

    Raises:
        BoundaryLeak: if |first| or |last| exceeds tolerance * max|samples|
    """
    samples = np.atleast_2d(samples)
    peak = np.max(np.abs(samples), axis=1)
    edge = np.maximum(np.abs(samples[:, 0]), np.abs(samples[:, -1]))
    leaking = edge > tolerance * peak
    if np.any(leaking):
        row = int(np.argmax(leaking))
        raise BoundaryLeak(
            f"{label} row {row} does not decay at the grid ends: "
            f"|edge|/max = {edge[row] / peak[row]:.3e} > {tolerance:g}"
        )


def derivative(samples: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Centered second-order differences, one-sided at the ends (last axis)."""
    return np.gradient(samples, grid.spacing, axis=-1, edge_order=2)


def pv_weights(grid: Grid1D, kernel: PVKernel, alphas: ArrayLike) -> np.ndarray:
    """
    Product-integration weights of the regularized kernel.

    The derivative is taken piecewise linear between nodes and every cell is
    integrated exactly against g(x - alpha), so the log singularity at
    x = alpha is absorbed by the cell moments:

        M0 = ln((u1^2 + e^2) / (u0^2 + e^2))
        M1 = 2 [(u1 - u0) - e (atan(u1/e) - atan(u0/e))]

    Args:
        grid: Offset grid carrying the derivative samples
        kernel: Regularized kernel
        alphas: Evaluation points

    Returns:
        Matrix W (len(alphas), grid.n) with integral of f' g(x - alpha) = W @ f'
    """
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    eps = kernel.epsilon
    step = grid.spacing
    nodes = grid.points
    u0 = nodes[np.newaxis, :-1] - alphas[:, np.newaxis]
    u1 = nodes[np.newaxis, 1:] - alphas[:, np.newaxis]
    m0 = np.log((u1 * u1 + eps * eps) / (u0 * u0 + eps * eps))
    m1 = 2.0 * ((u1 - u0) - eps * (np.arctan(u1 / eps) - np.arctan(u0 / eps)))
    weights = np.zeros((alphas.size, grid.n))
    weights[:, :-1] += (u1 * m0 - m1) / step
    weights[:, 1:] += (m1 - u0 * m0) / step
    return weights


def pv_convolve(samples: np.ndarray, grid: Grid1D, kernel: PVKernel, alpha: ArrayLike,
                tolerance: float = BOUNDARY_TOLERANCE) -> ArrayLike:
    """
    Regularized PV pairing -integral f'(x) g(x - alpha) dx.

    Args:
        samples: Profile f on the grid
        grid: Offset grid
        kernel: Regularized kernel
        alpha: Scalar or array of evaluation points
        tolerance: Relative boundary-decay tolerance

    Returns:
        Scalar for scalar alpha, else array

    Raises:
        BoundaryLeak: if the profile does not decay at the grid ends
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.n,):
        raise InvalidGrid(f"profile length {samples.shape} does not match grid n={grid.n}")
    if not np.any(samples):
        return 0.0 if np.ndim(alpha) == 0 else np.zeros(np.shape(alpha))
    check_boundary(samples, tolerance)
    result = -(pv_weights(grid, kernel, alpha) @ derivative(samples, grid))
    return float(result[0]) if np.ndim(alpha) == 0 else result.reshape(np.shape(alpha))


def pv_filter(profiles: np.ndarray, grid: Grid1D, kernel: PVKernel,
              tolerance: float = BOUNDARY_TOLERANCE) -> np.ndarray:
    """
    Apply pv_convolve at every grid node to every row of profiles.

    Args:
        profiles: (rows, grid.n) array
        grid: Offset grid
        kernel: Regularized kernel

    Returns:
        (rows, grid.n) filtered profiles
    """
    profiles = np.atleast_2d(np.asarray(profiles, dtype=float))
    live = np.any(profiles != 0.0, axis=1)
    if np.any(live):
        check_boundary(profiles[live], tolerance)
    weights = pv_weights(grid, kernel, grid.points)
    return -(derivative(profiles, grid) @ weights.T)


def ramp_filter(profile: np.ndarray, grid: Grid1D, padding: int = FFT_PADDING,
                apodize: bool = False) -> np.ndarray:
    """
    Inverse Fourier transform of |k| times the transform of the profile.

    Args:
        profile: (..., grid.n) samples; filtering acts on the last axis
        grid: Uniform offset grid
        padding: Zero-padding factor
        apodize: Multiply |k| by cos(pi k / (2 k_Nyquist))

    Returns:
        Filtered samples, same shape as profile

    Raises:
        GridTooCoarse: if the profile has fewer than 8 samples
    """
    profile = np.asarray(profile, dtype=float)
    n = profile.shape[-1]
    if n < MIN_PROFILE_LENGTH:
        raise GridTooCoarse(f"ramp filter needs at least {MIN_PROFILE_LENGTH} samples, got {n}")
    size = sp_fft.next_fast_len(max(padding, 1) * n, real=True)
    k = 2.0 * np.pi * sp_fft.rfftfreq(size, d=grid.spacing)
    response = np.abs(k)
    if apodize:
        response = response * np.cos(0.5 * np.pi * k / k[-1])
    spectrum = sp_fft.rfft(profile, n=size, axis=-1)
    return sp_fft.irfft(spectrum * response, n=size, axis=-1)[..., :n]


def angle_weights(angles: np.ndarray, period: float = np.pi) -> np.ndarray:
    """
    Periodic trapezoid weights for an angle set on [0, period).

    Args:
        angles: Sorted or unsorted angles
        period: Angular period

    Returns:
        Weights summing to period, in the order of angles
    """
    angles = np.asarray(angles, dtype=float)
    if angles.size == 1:
        return np.array([period])
    order = np.argsort(angles)
    ordered = angles[order]
    gaps = np.diff(np.concatenate([ordered, [ordered[0] + period]]))
    weights_sorted = 0.5 * (gaps + np.roll(gaps, 1))
    weights = np.empty_like(weights_sorted)
    weights[order] = weights_sorted
    return weights


def uniform_angles(count: int, period: float = np.pi) -> np.ndarray:
    """count angles uniform in [0, period), endpoint excluded."""
    return np.arange(count) * (period / count)


def resolve_epsilon(grid: Grid1D, epsilon: Optional[float]) -> PVKernel:
    kernel = PVKernel.for_grid(grid, epsilon)
    LOGGER.debug("[Numerics] epsilon=%.3e (offset spacing %.3e)", kernel.epsilon, grid.spacing)
    return kernel


def eigenvalue_floor(matrix: np.ndarray, scale: float = 1.0) -> Tuple[np.ndarray, float]:
    """
    Nearest positive-semidefinite unit-trace matrix by clipping eigenvalues.

    Args:
        matrix: Square matrix; its Hermitian part is used
        scale: Quadrature weight turning matrix entries into operator entries (dx for kernels)

    Returns:
        (projected matrix in the input's units, total negative eigenvalue mass removed)
    """
    hermitian = 0.5 * (matrix + matrix.conj().T) * scale
    eigenvalues, vectors = np.linalg.eigh(hermitian)
    clipped = float(-eigenvalues[eigenvalues < 0].sum())
    eigenvalues = np.maximum(eigenvalues, 0.0)
    total = eigenvalues.sum()
    if total > 0:
        eigenvalues = eigenvalues / total
    projected = (vectors * eigenvalues[np.newaxis, :]) @ vectors.conj().T
    LOGGER.info("[Numerics] eigenvalue floor removed negative mass %.3e", clipped)
    return projected / scale, clipped
