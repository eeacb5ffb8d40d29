"""
Wigner Service
Wigner transforms of density kernels, characteristic functions, phase-space
trace products, rotated-quadrature marginals and tomographic reconstruction of
the Wigner function from quadrature distributions.

Conventions (hbar = 1):
    W(q, p)   = int e^{-ipy} <q + y/2|rho|q - y/2> dy,   int W dq dp / 2 pi = 1
    chi(u, v) = Tr[rho e^{-i(u x + v p)}],              W = int chi e^{i(uq + vp)} du dv / 2 pi
"""
import logging
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import map_coordinates
from scipy.signal import czt, resample

from app.config.settings import FFT_PADDING, INTERPOLATION_ORDER, WIGNER_NORMALIZATION_TOLERANCE
from app.errors import GridMismatch, NyquistViolation
from app.models.field_models import DensityKernel, Measure, Sinogram, WignerField
from app.models.grid_models import Grid1D
from app.services import radon_service

LOGGER = logging.getLogger(__name__)


def _sample_kernel(kernel: DensityKernel, x1: np.ndarray, x2: np.ndarray, order: int) -> np.ndarray:
    """K(x1, x2) at arbitrary points; zero outside the grid."""
    coords = np.stack([kernel.grid.to_index(x1), kernel.grid.to_index(x2)])
    real = map_coordinates(kernel.values.real, coords, order=order, mode="constant", cval=0.0)
    imag = map_coordinates(kernel.values.imag, coords, order=order, mode="constant", cval=0.0)
    return real + 1j * imag


def kernel_band(kernel: DensityKernel, shifts: np.ndarray, order: int = INTERPOLATION_ORDER) -> np.ndarray:
    """
    Rows K(x_i, x_i + b) for every shift b.

    Returns:
        Array (len(shifts), grid.n); exact when b is a multiple of the spacing
    """
    x = kernel.grid.points[np.newaxis, :]
    shifts = np.asarray(shifts, dtype=float)[:, np.newaxis]
    return _sample_kernel(kernel, np.broadcast_to(x, (shifts.shape[0], x.shape[1])), x + shifts, order)


def _refine_kernel(kernel: DensityKernel) -> DensityKernel:
    """Band-limited (FFT) resampling of the kernel onto a grid of half the spacing."""
    n = kernel.grid.n
    values = resample(resample(kernel.values, 2 * n, axis=0), 2 * n, axis=1)[:2 * n - 1, :2 * n - 1]
    fine = Grid1D(min=kernel.grid.min, max=kernel.grid.max, n=2 * n - 1)
    return DensityKernel(fine, values, diagnostics=dict(kernel.diagnostics))


def _fourier_rows(samples: np.ndarray, y: np.ndarray, p_grid: Grid1D) -> np.ndarray:
    """sum_j samples[:, j] e^{-i p_k y_j} dy at every p_k of a uniform grid (chirp-z FFT)."""
    dy = y[1] - y[0]
    ratio = np.exp(-1j * p_grid.spacing * dy)
    start = np.exp(1j * p_grid.min * dy)
    transform = czt(samples, m=p_grid.n, w=ratio, a=start, axis=-1)
    return transform * np.exp(-1j * p_grid.points * y[0])[np.newaxis, :] * dy


def wigner_transform(kernel: DensityKernel, q_grid: Grid1D, p_grid: Grid1D,
                     order: int = INTERPOLATION_ORDER, expect_normalized: bool = True) -> WignerField:
    """
    Wigner function of a density kernel.

    The kernel is sampled along anti-diagonals (q + y/2, q - y/2) with
    y = 2 j dx, so on-grid q hits kernel nodes exactly; off-grid q uses
    interpolation of the given order. That resolves |p| <= pi / (2 dx); wider
    p grids, up to pi / dx, first resample the kernel to dx / 2 by FFT. The y
    integral is a chirp-z FFT onto p_grid.

    Args:
        kernel: Hermitian density kernel
        q_grid: Output position grid
        p_grid: Output momentum grid
        order: Interpolation order for off-grid samples
        expect_normalized: Warn when the result does not integrate to 1

    Returns:
        WignerField; the discarded imaginary max-norm is in diagnostics

    Raises:
        NyquistViolation: if max |p| exceeds pi / dx
    """
    band = np.pi / kernel.grid.spacing
    p_max = max(abs(p_grid.min), abs(p_grid.max))
    if p_max > band * (1.0 + 1e-12):
        raise NyquistViolation(f"p grid reaches {p_max:g} beyond the resolvable band {band:.4f}")
    if p_max > 0.5 * band * (1.0 + 1e-12):
        kernel = _refine_kernel(kernel)

    y_step = 2.0 * kernel.grid.spacing
    count = kernel.grid.n - 1
    y = np.arange(-count, count + 1) * y_step
    q = q_grid.points[:, np.newaxis]
    samples = _sample_kernel(kernel, q + 0.5 * y[np.newaxis, :], q - 0.5 * y[np.newaxis, :], order)
    transform = _fourier_rows(samples, y, p_grid)

    residue = float(np.max(np.abs(transform.imag))) if transform.size else 0.0
    field = WignerField(q_grid, p_grid, transform.real,
                        diagnostics={"imaginary_residue": residue, "y_step": y_step})
    field.diagnostics["normalization_residual"] = abs(field.normalization() - 1.0)
    drifted = expect_normalized and field.diagnostics["normalization_residual"] > WIGNER_NORMALIZATION_TOLERANCE
    log = LOGGER.warning if drifted else LOGGER.info
    log("[Wigner] transform on %dx%d grid, imaginary residue %.2e, normalization %.8f",
        q_grid.n, p_grid.n, residue, field.normalization())
    return field


def characteristic_function(kernel: DensityKernel, u_grid: Grid1D, v_grid: Grid1D,
                            order: int = INTERPOLATION_ORDER) -> np.ndarray:
    """
    chi(u, v) = Tr[rho e^{-i(u x + v p)}] via e^{-iux} e^{-ivp} e^{iuv/2}.

    With e^{-ivp} acting as a shift, chi(u, v) = e^{-iuv/2} sum_i e^{-iu x_i} K(x_i, x_i + v) dx.

    Returns:
        Complex array (u_grid.n, v_grid.n)

    Raises:
        NyquistViolation: if max |u| exceeds pi / dx
    """
    step = kernel.grid.spacing
    u_max = max(abs(u_grid.min), abs(u_grid.max))
    if u_max > np.pi / step * (1.0 + 1e-12):
        raise NyquistViolation(f"u grid reaches {u_max:g} beyond pi/dx = {np.pi / step:.4f}")
    u = u_grid.points
    v = v_grid.points
    rows = kernel_band(kernel, v, order)
    phases = np.exp(-1j * np.outer(u, kernel.grid.points))
    chi = phases @ rows.T * step
    return chi * np.exp(-0.5j * np.outer(u, v))


def wigner_from_characteristic(chi: np.ndarray, u_grid: Grid1D, v_grid: Grid1D,
                               q_grid: Grid1D, p_grid: Grid1D) -> WignerField:
    """Inverse transform W(q, p) = int chi(u, v) e^{i(uq + vp)} du dv / 2 pi (trapezoid)."""
    wu = np.full(u_grid.n, u_grid.spacing)
    wu[[0, -1]] *= 0.5
    wv = np.full(v_grid.n, v_grid.spacing)
    wv[[0, -1]] *= 0.5
    left = np.exp(1j * np.outer(q_grid.points, u_grid.points)) * wu[np.newaxis, :]
    right = np.exp(1j * np.outer(v_grid.points, p_grid.points)) * wv[:, np.newaxis]
    values = left @ chi @ right / (2.0 * np.pi)
    return WignerField(q_grid, p_grid, values.real,
                       diagnostics={"imaginary_residue": float(np.max(np.abs(values.imag)))})


def trace_product(w_a: WignerField, w_b: WignerField) -> float:
    """
    Tr(A B) = int W_A W_B dq dp / 2 pi by the 2D trapezoid rule.

    Raises:
        GridMismatch: if the fields live on different grids
    """
    if w_a.q_grid != w_b.q_grid or w_a.p_grid != w_b.p_grid:
        raise GridMismatch("trace_product needs both Wigner fields on the same (q, p) grid")
    product = w_a.values * w_b.values
    inner = trapezoid(product, dx=w_a.p_grid.spacing, axis=1)
    return float(trapezoid(inner, dx=w_a.q_grid.spacing)) / (2.0 * np.pi)


def position_marginal(w: WignerField) -> np.ndarray:
    """int W dp / 2 pi, the position distribution."""
    return trapezoid(w.values, dx=w.p_grid.spacing, axis=1) / (2.0 * np.pi)


def momentum_distribution(kernel: DensityKernel, p_grid: Grid1D) -> np.ndarray:
    """<p|rho|p> = (1/2 pi) sum_ij e^{-ip(x_i - x_j)} K_ij dx^2."""
    phases = np.exp(-1j * np.outer(p_grid.points, kernel.grid.points))
    values = np.sum((phases @ kernel.values) * phases.conj(), axis=1)
    return values.real * kernel.grid.spacing ** 2 / (2.0 * np.pi)


def quadrature_distribution(w: WignerField, theta: float, offsets: Grid1D,
                            order: int = INTERPOLATION_ORDER) -> np.ndarray:
    """
    rho_theta(x') = int int W delta(x' - q cos - p sin) dq dp / 2 pi.

    Raises:
        SupportClipped: if W reaches outside the offset range
    """
    sinogram = radon_service.forward_radon(w.as_density(), [theta], offsets, order=order)
    return sinogram.values[0]


def quadrature_sinogram(w: WignerField, angles: np.ndarray, offsets: Grid1D,
                        order: int = INTERPOLATION_ORDER) -> Sinogram:
    """Every angle at once; rows are quadrature_distribution at each angle."""
    return radon_service.forward_radon(w.as_density(), angles, offsets, order=order)


def reconstruct_wigner(quadratures: Sinogram, q_grid: Grid1D, p_grid: Grid1D,
                       method: str = "pv", epsilon: Optional[float] = None,
                       padding: int = FFT_PADDING, apodize: bool = False) -> WignerField:
    """
    Wigner function from rotated-quadrature distributions (inverse Radon, -1/pi prefactor).

    Args:
        quadratures: Rows rho_theta(x') over angles in [0, pi)
        q_grid: Output position grid
        p_grid: Output momentum grid
        method: "pv" or "ramp"
        epsilon: PV regularization
        padding: FFT padding for the ramp route
        apodize: Cosine apodization for the ramp route

    Returns:
        WignerField (may be negative)
    """
    data = Sinogram(angles=quadratures.angles, offsets=quadratures.offsets,
                    values=quadratures.values, measure=Measure.PHASE_SPACE)
    density = radon_service.inverse_radon(data, q_grid, p_grid, method=method, epsilon=epsilon,
                                          padding=padding, apodize=apodize)
    field = WignerField(q_grid, p_grid, density.values, diagnostics=dict(density.diagnostics))
    field.diagnostics["normalization_residual"] = abs(field.normalization() - 1.0)
    LOGGER.info("[Wigner] reconstructed from %d angles (%s), normalization %.6f",
                data.angles.size, method, field.normalization())
    return field
