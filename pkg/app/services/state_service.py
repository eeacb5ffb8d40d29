"""
State Service
Ground-truth states and phantoms: density kernels, 2D phantoms, qudit states,
exact and sampled quadrature distributions, and closed-form oracles.

Continuous states are carried as mixtures of Fock-basis vectors
(a = (x + ip)/sqrt(2)); the rotated quadrature amplitude of a vector c is
<x',theta|psi> = sum_n c_n e^{-in theta} psi_n(x'), valid at every angle.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.special import eval_laguerre

from app.errors import SupportClipped, UsageError, WrongKind
from app.models.field_models import (
    Density2D,
    DensityKernel,
    Measure,
    PrimeDim,
    QuadratureDataset,
    QuditState,
)
from app.models.grid_models import Grid1D
from app.models.state_models import Blob, StateKind, StateSpec
from app.services.fractional_service import hermite_functions

LOGGER = logging.getLogger(__name__)


@dataclass
class FockMixture:
    """rho = sum_k weights[k] |v_k><v_k| with v_k = vectors[k] in the Fock basis."""
    weights: np.ndarray
    vectors: np.ndarray
    tail_mass: float = 0.0

    @property
    def nmax(self) -> int:
        return self.vectors.shape[1] - 1


# -----------------------------------------------------------------------------
# Fock-basis decomposition
# -----------------------------------------------------------------------------
def coherent_coefficients(alpha: complex, nmax: int) -> np.ndarray:
    """c_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!) by recurrence."""
    coefficients = np.empty(nmax + 1, dtype=complex)
    coefficients[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, nmax + 1):
        coefficients[n] = coefficients[n - 1] * alpha / np.sqrt(n)
    return coefficients


def _unit(n: int, nmax: int) -> np.ndarray:
    vector = np.zeros(nmax + 1, dtype=complex)
    vector[n] = 1.0
    return vector


def fock_mixture(spec: StateSpec) -> FockMixture:
    """
    Eigen-style decomposition of a continuous-variable spec.

    Raises:
        WrongKind: for phantom and qudit kinds
    """
    if not spec.is_continuous:
        raise WrongKind(f"'{spec.kind.value}' is not a continuous-variable state")
    nmax = spec.nmax
    kind = spec.kind

    if kind is StateKind.VACUUM:
        return FockMixture(np.ones(1), _unit(0, nmax)[np.newaxis, :])
    if kind is StateKind.FOCK:
        return FockMixture(np.ones(1), _unit(spec.n, nmax)[np.newaxis, :])
    if kind is StateKind.COHERENT:
        vector = coherent_coefficients(spec.alpha, nmax)
        kept = float(np.sum(np.abs(vector) ** 2))
        return FockMixture(np.ones(1), (vector / np.sqrt(kept))[np.newaxis, :], tail_mass=1.0 - kept)
    if kind is StateKind.CAT:
        vector = coherent_coefficients(spec.alpha, nmax)
        vector = vector * (1.0 + spec.parity * (-1.0) ** np.arange(nmax + 1))
        return FockMixture(np.ones(1), (vector / np.linalg.norm(vector))[np.newaxis, :])
    if kind is StateKind.THERMAL:
        nbar = spec.nbar
        n = np.arange(nmax + 1)
        weights = (nbar / (nbar + 1.0)) ** n / (nbar + 1.0)
        kept = float(weights.sum())
        return FockMixture(weights / kept, np.eye(nmax + 1, dtype=complex), tail_mass=1.0 - kept)

    parts = [fock_mixture(component.model_copy(update={"nmax": nmax})) for component in spec.components]
    weights = np.concatenate([w * part.weights for w, part in zip(spec.weights, parts)])
    vectors = np.vstack([part.vectors for part in parts])
    tail = float(sum(w * part.tail_mass for w, part in zip(spec.weights, parts)))
    return FockMixture(weights, vectors, tail_mass=tail)


def _wave_functions(mixture: FockMixture, x: np.ndarray, theta: float = 0.0) -> np.ndarray:
    """Rows <x,theta|v_k> for every mixture vector."""
    phases = np.exp(-1j * np.arange(mixture.nmax + 1) * theta)
    basis = hermite_functions(x, mixture.nmax)
    return (mixture.vectors * phases[np.newaxis, :]) @ basis


# -----------------------------------------------------------------------------
# Realization
# -----------------------------------------------------------------------------
def realize_kernel(spec: StateSpec, grid: Grid1D) -> DensityKernel:
    """
    <x1|rho|x2> = sum_k w_k psi_k(x1) conj(psi_k(x2)) on the grid.

    Args:
        spec: Continuous-variable state
        grid: Coordinate grid

    Returns:
        DensityKernel with tail mass and trace in diagnostics

    Raises:
        WrongKind: for phantom and qudit kinds
    """
    mixture = fock_mixture(spec)
    psi = _wave_functions(mixture, grid.points)
    values = (psi.T * mixture.weights[np.newaxis, :]) @ psi.conj()
    values = 0.5 * (values + values.conj().T)
    kernel = DensityKernel(grid, values, diagnostics={"tail_mass": mixture.tail_mass})
    kernel.diagnostics["trace"] = kernel.trace()
    if mixture.tail_mass > 0:
        LOGGER.info("[States] %s truncated at nmax=%d, tail mass %.3e", spec.kind.value, spec.nmax,
                    mixture.tail_mass)
    return kernel


def _blob_values(blob, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    dx = x - blob.x0
    dy = y - blob.y0
    if blob.shape == "gaussian":
        return np.exp(-(dx * dx + dy * dy) / (2.0 * blob.sigma ** 2))
    c, s = np.cos(blob.angle), np.sin(blob.angle)
    u = (dx * c + dy * s) / blob.a
    v = (-dx * s + dy * c) / blob.b
    return (u * u + v * v <= 1.0).astype(float)


def realize_phantom(spec: StateSpec, x_grid: Grid1D, y_grid: Grid1D) -> Density2D:
    """
    Sum of Gaussian / ellipse blobs, each normalized to its weight.

    Raises:
        WrongKind: if spec is not a phantom
        SupportClipped: if a blob reaches outside the grid
    """
    if spec.kind is not StateKind.PHANTOM:
        raise WrongKind(f"'{spec.kind.value}' is not a phantom")
    x = x_grid.points[:, np.newaxis]
    y = y_grid.points[np.newaxis, :]
    values = np.zeros((x_grid.n, y_grid.n))
    for index, blob in enumerate(spec.blobs):
        radius = 6.0 * blob.sigma if blob.shape == "gaussian" else max(blob.a, blob.b)
        if (blob.x0 - radius < x_grid.min or blob.x0 + radius > x_grid.max
                or blob.y0 - radius < y_grid.min or blob.y0 + radius > y_grid.max):
            raise SupportClipped(f"blob {index} at ({blob.x0}, {blob.y0}) reaches outside the grid")
        shape = _blob_values(blob, x, y)
        mass = trapezoid(trapezoid(shape, dx=y_grid.spacing, axis=1), dx=x_grid.spacing)
        if mass <= 0:
            raise SupportClipped(f"blob {index} covers no grid points")
        values += blob.weight * shape / mass
    return Density2D(x_grid, y_grid, values, measure=Measure.PLAIN, classical=True, normalized=True)


def realize_qudit(spec: StateSpec) -> QuditState:
    """
    Qudit ground truth: a normalized pure vector or a seeded Ginibre mixed state.

    Raises:
        WrongKind: for continuous kinds
    """
    if not spec.is_qudit:
        raise WrongKind(f"'{spec.kind.value}' is not a qudit state")
    dim = PrimeDim(spec.d)
    if spec.kind is StateKind.QUDIT_PURE:
        imag = spec.vector_im or [0.0] * spec.d
        vector = np.array(spec.vector_re) + 1j * np.array(imag)
        vector = vector / np.linalg.norm(vector)
        matrix = np.outer(vector, vector.conj())
    else:
        rng = np.random.default_rng(spec.seed)
        ginibre = rng.standard_normal((spec.d, spec.d)) + 1j * rng.standard_normal((spec.d, spec.d))
        matrix = ginibre @ ginibre.conj().T
        matrix = matrix / np.trace(matrix).real
    matrix = 0.5 * (matrix + matrix.conj().T)
    state = QuditState(dim, matrix, diagnostics={"source": spec.kind.value})
    state.check_physical()
    return state


# -----------------------------------------------------------------------------
# Quadrature distributions
# -----------------------------------------------------------------------------
def quadrature_density(spec: StateSpec, theta: float, xprime: np.ndarray) -> np.ndarray:
    """rho_theta(x') = sum_k w_k |sum_n c_kn e^{-in theta} psi_n(x')|^2."""
    mixture = fock_mixture(spec)
    psi = _wave_functions(mixture, np.asarray(xprime, dtype=float), theta)
    return mixture.weights @ (np.abs(psi) ** 2)


def exact_quadratures(spec: StateSpec, angles: Sequence[float], offsets: Grid1D) -> QuadratureDataset:
    """Exact rotated-quadrature distributions on the offset grid."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    mixture = fock_mixture(spec)
    basis = hermite_functions(offsets.points, mixture.nmax)
    levels = np.arange(mixture.nmax + 1)
    rows = []
    for theta in angles:
        psi = (mixture.vectors * np.exp(-1j * levels * theta)[np.newaxis, :]) @ basis
        rows.append(mixture.weights @ (np.abs(psi) ** 2))
    return QuadratureDataset(angles=angles, offsets=offsets, values=np.array(rows), provenance="exact")


def draw_quadrature_samples(spec: StateSpec, theta: float, shots: int, rng: np.random.Generator,
                            offsets: Grid1D, refine: int = 8) -> np.ndarray:
    """
    Inverse-CDF draws of X_theta on a grid `refine` times finer than the offsets.
    """
    if shots < 1:
        raise UsageError(f"shots must be >= 1, got {shots}")
    half = 0.5 * offsets.spacing
    fine = Grid1D(min=offsets.min - half, max=offsets.max + half, n=refine * offsets.n + 1)
    density = quadrature_density(spec, theta, fine.points)
    cdf = cumulative_trapezoid(density, dx=fine.spacing, initial=0.0)
    cdf = cdf / cdf[-1]
    return np.interp(rng.random(shots), cdf, fine.points)


def sample_quadratures(spec: StateSpec, angles: Sequence[float], shots: int, seed: int,
                       offsets: Grid1D) -> QuadratureDataset:
    """
    Simulated homodyne data: per angle, `shots` draws histogrammed onto the offsets.

    One numpy Generator (PCG64 via default_rng(seed)) is consumed angle by angle
    in the given order, so identical (spec, angles, shots, seed, offsets) give
    identical output.

    Args:
        spec: Continuous-variable state
        angles: Angles in [0, pi)
        shots: Draws per angle (>= 1)
        seed: Generator seed
        offsets: Histogram bin centres

    Returns:
        QuadratureDataset with provenance sampled(shots)
    """
    if shots < 1:
        raise UsageError(f"shots must be >= 1, got {shots}")
    rng = np.random.default_rng(seed)
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    edges = np.concatenate([offsets.points - 0.5 * offsets.spacing, [offsets.max + 0.5 * offsets.spacing]])
    rows = []
    for theta in angles:
        draws = draw_quadrature_samples(spec, theta, shots, rng, offsets)
        counts, _ = np.histogram(draws, bins=edges)
        rows.append(counts / (shots * offsets.spacing))
    LOGGER.info("[States] sampled %d shots at %d angles (seed %d)", shots, angles.size, seed)
    return QuadratureDataset(angles=angles, offsets=offsets, values=np.array(rows),
                             provenance="sampled", shots=shots)


# -----------------------------------------------------------------------------
# Closed-form oracles
# -----------------------------------------------------------------------------
def quadrature_mean(spec: StateSpec, theta: float) -> float:
    """<X_theta> = sqrt(2) Re(alpha e^{-i theta}) for coherent states, 0 for vacuum."""
    if spec.kind is StateKind.VACUUM:
        return 0.0
    if spec.kind is StateKind.COHERENT:
        return float(np.sqrt(2.0) * np.real(spec.alpha * np.exp(-1j * theta)))
    raise WrongKind(f"no closed-form quadrature mean for '{spec.kind.value}'")


def quadrature_oracle(spec: StateSpec, theta: float, xprime: np.ndarray) -> np.ndarray:
    """
    Analytic rho_theta(x') for vacuum, coherent, Fock, thermal and their mixtures.

    Raises:
        WrongKind: for kinds without a closed form
    """
    x = np.asarray(xprime, dtype=float)
    kind = spec.kind
    if kind in (StateKind.VACUUM, StateKind.COHERENT):
        mean = quadrature_mean(spec, theta)
        return np.exp(-(x - mean) ** 2) / np.sqrt(np.pi)
    if kind is StateKind.FOCK:
        return hermite_functions(x, spec.n)[spec.n] ** 2
    if kind is StateKind.THERMAL:
        variance2 = 2.0 * spec.nbar + 1.0
        return np.exp(-x * x / variance2) / np.sqrt(np.pi * variance2)
    if kind is StateKind.MIXED:
        return sum(w * quadrature_oracle(c, theta, x) for w, c in zip(spec.weights, spec.components))
    raise WrongKind(f"no closed-form quadrature density for '{kind.value}'")


def wigner_oracle(spec: StateSpec, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """
    Analytic W(q, p) for vacuum, coherent, Fock, thermal and their mixtures.

    Raises:
        WrongKind: for kinds without a closed form
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    kind = spec.kind
    if kind is StateKind.VACUUM:
        return 2.0 * np.exp(-(q * q + p * p))
    if kind is StateKind.COHERENT:
        q0 = np.sqrt(2.0) * spec.alpha.real
        p0 = np.sqrt(2.0) * spec.alpha.imag
        return 2.0 * np.exp(-((q - q0) ** 2 + (p - p0) ** 2))
    if kind is StateKind.FOCK:
        r2 = q * q + p * p
        return 2.0 * (-1.0) ** spec.n * eval_laguerre(spec.n, 2.0 * r2) * np.exp(-r2)
    if kind is StateKind.THERMAL:
        variance2 = 2.0 * spec.nbar + 1.0
        return 2.0 / variance2 * np.exp(-(q * q + p * p) / variance2)
    if kind is StateKind.MIXED:
        return sum(w * wigner_oracle(c, q, p) for w, c in zip(spec.weights, spec.components))
    raise WrongKind(f"no closed-form Wigner function for '{kind.value}'")


def reference_states() -> List[Tuple[str, StateSpec]]:
    """Named continuous-variable states used by the verification suite."""
    vacuum = StateSpec(kind="vacuum")
    fock1 = StateSpec(kind="fock", n=1)
    return [
        ("vacuum", vacuum),
        ("fock1", fock1),
        ("fock2", StateSpec(kind="fock", n=2)),
        ("coherent", StateSpec(kind="coherent", alpha_re=1.0, alpha_im=0.5)),
        ("thermal", StateSpec(kind="thermal", nbar=0.5)),
        ("cat", StateSpec(kind="cat", alpha_re=1.5, parity=1)),
        ("mixed", StateSpec(kind="mixed", weights=[0.5, 0.5], components=[vacuum, fock1])),
    ]


def default_phantom() -> StateSpec:
    """Two smooth Gaussian blobs, off-centre and of unequal weight."""
    return StateSpec(kind="phantom", blobs=[
        Blob(shape="gaussian", x0=-1.5, y0=0.0, sigma=0.6, weight=0.6),
        Blob(shape="gaussian", x0=1.5, y0=1.0, sigma=0.7, weight=0.4),
    ])
