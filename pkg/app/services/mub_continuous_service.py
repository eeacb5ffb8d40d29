"""
Continuous MUB Service
Expansion of the density operator in displacement operators
Z(a, b) = e^{iax} e^{ibp} and reconstruction of <x1|rho|x2> from rotated-quadrature
distributions.

The coefficients c(a, b) = Tr[rho Z^dagger(a, b)] are read off the quadrature
data: along the ray (a, b) = t (cos theta, sin theta) the Weyl symbol is the
Fourier transform of rho_theta, and c(a, b) = e^{iab/2} chi(a, b). The kernel
then follows from K(x, x + b) = (1/2 pi) int c(a, b) e^{iax} da.
"""
import logging
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from app.config.settings import DM_MAX_FREQUENCY, SINGULAR_ANGLE_CUTOFF
from app.errors import ShiftOutOfRange, SingularAngleInData, TooFewAngles
from app.models.field_models import DensityKernel, Sinogram
from app.models.grid_models import Grid1D
from app.services import numerics_service, radon_service, wigner_service
from app.utils.parallel import ordered_map

LOGGER = logging.getLogger(__name__)

T_STEP = 0.02
A_STEP = 0.05
SINGULAR_MODES = ("exclude", "reject")


# -----------------------------------------------------------------------------
# Displacement-operator expansion
# -----------------------------------------------------------------------------
def displacement_coefficient(kernel: DensityKernel, a: float, b: float) -> complex:
    """
    c(a, b) = Tr[rho Z^dagger(a, b)] = sum_i e^{-ia x_i} K(x_i, x_i + b) dx.

    Args:
        kernel: Density kernel
        a: Position-phase parameter
        b: Shift parameter

    Returns:
        Complex coefficient; (0, 0) gives the trace

    Raises:
        ShiftOutOfRange: if |b| exceeds the grid extent
    """
    if abs(b) > kernel.grid.extent:
        raise ShiftOutOfRange(f"shift b={b:g} exceeds the grid extent {kernel.grid.extent:g}")
    band = wigner_service.kernel_band(kernel, np.array([b]))[0]
    phases = np.exp(-1j * a * kernel.grid.points)
    return complex(np.sum(phases * band) * kernel.grid.spacing)


def lattice_displacements(count: int, spacing: float, origin: float = 0.0) -> np.ndarray:
    """
    Z(a_m, b_l) on a periodic count-point grid, a_m = m 2 pi / (count dx), b_l = l dx.

    Returns:
        Array (count, count, count, count) indexed [m, l, i, j]
    """
    x = origin + np.arange(count) * spacing
    step_a = 2.0 * np.pi / (count * spacing)
    operators = np.zeros((count, count, count, count), dtype=complex)
    rows = np.arange(count)
    for m in range(count):
        phases = np.exp(1j * m * step_a * x)
        for shift in range(count):
            # e^{ibp}|x_j> = |x_j - b>, so row i picks column i + l.
            operators[m, shift, rows, (rows + shift) % count] = phases
    return operators


def displacement_gram(count: int, spacing: float, origin: float = 0.0) -> np.ndarray:
    """
    (da db / 2 pi) Tr[Z^dagger(a, b) Z(a', b')] over the lattice; the identity for an orthogonal basis.
    """
    operators = lattice_displacements(count, spacing, origin).reshape(count * count, count, count)
    step_a = 2.0 * np.pi / (count * spacing)
    gram = np.einsum("kij,lij->kl", operators.conj(), operators)
    return gram * (step_a * spacing / (2.0 * np.pi))


# -----------------------------------------------------------------------------
# Density-matrix reconstruction
# -----------------------------------------------------------------------------
def select_angles(angles: np.ndarray, mode: str = "exclude",
                  cutoff: float = SINGULAR_ANGLE_CUTOFF) -> np.ndarray:
    """
    Mask of angles kept for the density-matrix path.

    Raises:
        SingularAngleInData: in reject mode when some |sin(theta)| < cutoff
    """
    if mode not in SINGULAR_MODES:
        raise ValueError(f"unknown singular-angle mode '{mode}', expected one of {SINGULAR_MODES}")
    singular = np.abs(np.sin(angles)) < cutoff
    if np.any(singular):
        if mode == "reject":
            raise SingularAngleInData(
                f"angles {np.round(angles[singular], 6).tolist()} lie within {cutoff:g} of sin(theta) = 0"
            )
        LOGGER.info("[MUB] excluding %d angle(s) near sin(theta) = 0: %s",
                    int(singular.sum()), np.round(angles[singular], 6).tolist())
    return ~singular


def ray_transforms(data: Sinogram, t: np.ndarray, epsilon: float) -> np.ndarray:
    """
    chi_theta(t) = int rho_theta(x') e^{-itx'} dx' e^{-epsilon |t|} for every row.

    Returns:
        Complex array (angles, len(t))
    """
    offsets = data.offsets
    weights = np.full(offsets.n, offsets.spacing)
    weights[[0, -1]] *= 0.5
    phases = np.exp(-1j * np.outer(t, offsets.points)) * weights[np.newaxis, :]
    damping = np.exp(-epsilon * np.abs(t))
    rows = ordered_map(lambda row: (phases @ row) * damping, list(data.values))
    return np.array(rows)


def _polar_table(angles: np.ndarray, transforms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sort rows by angle and pad both ends with chi(theta +- pi, t) = chi(theta, -t)."""
    order = np.argsort(angles)
    angles = angles[order]
    transforms = transforms[order]
    extended_angles = np.concatenate([[angles[-1] - np.pi], angles, [angles[0] + np.pi]])
    extended = np.vstack([transforms[-1][::-1], transforms, transforms[0][::-1]])
    return extended_angles, extended


def displacement_coefficients(data: Sinogram, a: np.ndarray, b: np.ndarray,
                              epsilon: float, max_frequency: float) -> np.ndarray:
    """
    c(a, b) on the Cartesian product of a and b, read off the quadrature data.

    Returns:
        Complex array (len(a), len(b)); zero where sqrt(a^2 + b^2) exceeds the band
    """
    count = int(np.ceil(max_frequency / T_STEP))
    t = np.linspace(-max_frequency, max_frequency, 2 * count + 1)
    transforms = ray_transforms(data, t, epsilon)
    table_angles, table = _polar_table(np.mod(data.angles, np.pi), transforms)

    aa, bb = np.meshgrid(a, b, indexing="ij")
    radius = np.hypot(aa, bb)
    angle = np.arctan2(bb, aa)
    flipped = angle < 0
    angle = np.where(flipped, angle + np.pi, angle)
    radius = np.where(flipped, -radius, radius)
    points = np.stack([angle.ravel(), radius.ravel()], axis=-1)

    real = RegularGridInterpolator((table_angles, t), table.real, bounds_error=False, fill_value=0.0)
    imag = RegularGridInterpolator((table_angles, t), table.imag, bounds_error=False, fill_value=0.0)
    chi = (real(points) + 1j * imag(points)).reshape(aa.shape)
    return np.exp(0.5j * aa * bb) * chi


def reconstruct_density_matrix(data: Sinogram, out_grid: Grid1D, epsilon: Optional[float] = None,
                               max_frequency: float = DM_MAX_FREQUENCY, singular_angles: str = "exclude",
                               positivity: bool = False) -> DensityKernel:
    """
    <x1|rho|x2> from rotated-quadrature distributions.

    The kernel is assembled as sum_a c(a, x2 - x1) e^{ia x1} da / 2 pi; the result is
    symmetrized to Hermitian and renormalized to unit trace, with both corrections
    reported in diagnostics.

    Args:
        data: Quadrature rows over angles in [0, pi)
        out_grid: Output coordinate grid
        epsilon: Damping of the per-angle transforms; defaults to the PV regularization
        max_frequency: Largest |t| used, capped at pi / dx'
        singular_angles: "exclude" drops angles with |sin| < cutoff, "reject" raises
        positivity: Clip negative eigenvalues and renormalize

    Returns:
        DensityKernel on out_grid

    Raises:
        SingularAngleInData: reject mode with an angle near 0 or pi
        BoundaryLeak: rows that do not decay at the offset ends
        TooFewAngles: fewer than 8 usable angles
    """
    keep = select_angles(data.angles, singular_angles)
    if not np.any(keep):
        raise TooFewAngles("no angle left after excluding sin(theta) = 0")
    data = Sinogram(angles=data.angles[keep], offsets=data.offsets, values=data.values[keep],
                    measure=data.measure)
    radon_service.check_angles(data.angles)
    live = np.any(data.values != 0.0, axis=1)
    if np.any(live):
        numerics_service.check_boundary(data.values[live], label="quadrature")

    eps = numerics_service.resolve_epsilon(data.offsets, epsilon).epsilon
    band = min(float(max_frequency), np.pi / data.offsets.spacing)
    a_count = int(np.ceil(band / A_STEP))
    a = np.linspace(-band, band, 2 * a_count + 1)
    shifts = np.arange(-(out_grid.n - 1), out_grid.n) * out_grid.spacing
    coefficients = displacement_coefficients(data, a, shifts, eps, band)

    weights = np.full(a.size, a[1] - a[0])
    weights[[0, -1]] *= 0.5
    phases = np.exp(1j * np.outer(out_grid.points, a)) * weights[np.newaxis, :]
    bands = phases @ coefficients / (2.0 * np.pi)

    rows = np.arange(out_grid.n)[:, np.newaxis]
    columns = np.arange(out_grid.n)[np.newaxis, :]
    raw = bands[rows, columns - rows + out_grid.n - 1]

    scale = float(np.max(np.abs(raw))) or 1.0
    hermitian_residual = float(np.max(np.abs(raw - raw.conj().T))) / scale
    values = 0.5 * (raw + raw.conj().T)
    raw_trace = float(np.real(np.trace(values))) * out_grid.spacing
    values = values / raw_trace

    diagnostics = {
        "hermitian_residual": hermitian_residual,
        "trace_before_renormalization": raw_trace,
        "trace_residual": abs(raw_trace - 1.0),
        "angles_used": int(data.angles.size),
        "angles_excluded": int((~keep).sum()),
        "epsilon": eps,
        "max_frequency": band,
    }
    if positivity:
        values, clipped = numerics_service.eigenvalue_floor(values, scale=out_grid.spacing)
        diagnostics["clipped_eigenvalue_mass"] = clipped
    LOGGER.info("[MUB] density matrix from %d angles: Hermitian residual %.3e, trace %.6f",
                data.angles.size, hermitian_residual, raw_trace)
    return DensityKernel(out_grid, values, diagnostics=diagnostics)



def wigner_consistency(data: Sinogram, grid: Grid1D, method: str = "pv",
                       epsilon: Optional[float] = None) -> float:
    """
    Relative L2 gap between the two routes from the same quadrature data to W(q, p):
    the Wigner transform of reconstruct_density_matrix against reconstruct_wigner.

    Args:
        data: Quadrature rows over angles in [0, pi)
        grid: Kernel grid, also used for both phase-space axes
        method: Inversion method of the direct route
        epsilon: Regularization shared by both routes
    """
    kernel = reconstruct_density_matrix(data, grid, epsilon=epsilon)
    via_kernel = wigner_service.wigner_transform(kernel, grid, grid)
    direct = wigner_service.reconstruct_wigner(data, grid, grid, method=method, epsilon=epsilon)
    gap = float(np.linalg.norm(via_kernel.values - direct.values) / np.linalg.norm(direct.values))
    LOGGER.info("[MUB] density-matrix and inverse-Radon Wigner functions differ by %.4f (relative L2)", gap)
    return gap
