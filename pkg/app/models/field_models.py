"""
Sampled field models.
Array-carrying containers for densities, sinograms, kernels, Wigner fields and
qudit states. Each type checks its structural invariants on construction;
numerical invariants that only hold for exact inputs are exposed as residuals.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
import sympy
from scipy.integrate import trapezoid

from app.config.settings import (
    DENSITY_NORMALIZATION_TOLERANCE,
    HERMITIAN_TOLERANCE,
    MAX_PRIME,
    PSD_TOLERANCE,
    QUDIT_EIGEN_TOLERANCE,
    QUDIT_TRACE_TOLERANCE,
    ROW_NORMALIZATION_TOLERANCE,
    SAMPLED_ROW_TOLERANCE,
    TRACE_TOLERANCE,
)
from app.errors import InvalidGrid, NegativeProbability, NotNormalized, NotPrime
from app.models.grid_models import Grid1D


class Measure(str, Enum):
    """Integration measure a 2D density is normalized under."""
    PLAIN = "PlainDxDy"
    PHASE_SPACE = "DqDpOver2Pi"

    @property
    def weight(self) -> float:
        """Factor multiplying dx dy in the normalization integral."""
        return 1.0 if self is Measure.PLAIN else 1.0 / (2.0 * np.pi)

    @property
    def inversion_prefactor(self) -> float:
        """Magnitude of the inverse-Radon prefactor: 1/(2 pi^2) or 1/pi."""
        return 1.0 / (2.0 * np.pi ** 2) if self is Measure.PLAIN else 1.0 / np.pi


# -----------------------------------------------------------------------------
# Classical / phase-space densities
# -----------------------------------------------------------------------------
@dataclass
class Density2D:
    """
    values[i, j] = rho(x_i, y_j).

    classical=True enforces rho >= 0; normalized=True enforces unit mass under
    the declared measure (within DENSITY_NORMALIZATION_TOLERANCE) at construction.
    Reconstructions leave normalized off and report their mass instead.
    """
    x_grid: Grid1D
    y_grid: Grid1D
    values: np.ndarray
    measure: Measure = Measure.PLAIN
    classical: bool = False
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    normalized: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x_grid.n, self.y_grid.n):
            raise InvalidGrid(
                f"density shape {self.values.shape} does not match grids "
                f"({self.x_grid.n}, {self.y_grid.n})"
            )
        if self.classical:
            scale = max(float(np.max(np.abs(self.values))), 1.0)
            if float(self.values.min()) < -PSD_TOLERANCE * scale:
                raise NegativeProbability(
                    f"classical density has negative values (min {self.values.min():.3e})"
                )
        if self.normalized:
            self.check_normalized()

    def mass(self) -> float:
        """Integral under the declared measure."""
        inner = trapezoid(self.values, dx=self.y_grid.spacing, axis=1)
        return float(trapezoid(inner, dx=self.x_grid.spacing)) * self.measure.weight

    def check_normalized(self, tolerance: float = DENSITY_NORMALIZATION_TOLERANCE) -> None:
        mass = self.mass()
        if abs(mass - 1.0) > tolerance:
            raise NotNormalized(f"density integrates to {mass:.8f}, expected 1 within {tolerance:g}")


@dataclass
class ConditionalFactorization:
    """rho(q, p) = P(q|p) P(p) / measure weight on the supported p rows."""
    q_grid: Grid1D
    p_grid: Grid1D
    marginal: np.ndarray
    conditional: np.ndarray
    supported: np.ndarray
    measure: Measure = Measure.PLAIN

    def reassemble(self) -> np.ndarray:
        product = self.conditional * self.marginal[np.newaxis, :] / self.measure.weight
        return np.where(self.supported[np.newaxis, :], product, np.nan)


@dataclass
class Sinogram:
    """values[k, j] = rho_theta_k(x'_j); each row is a 1D probability density."""
    angles: np.ndarray
    offsets: Grid1D
    values: np.ndarray
    measure: Measure = Measure.PLAIN
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.angles = np.atleast_1d(np.asarray(self.angles, dtype=float))
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape != (self.angles.size, self.offsets.n):
            raise InvalidGrid(
                f"sinogram shape {self.values.shape} does not match "
                f"{self.angles.size} angles x {self.offsets.n} offsets"
            )

    def row_masses(self) -> np.ndarray:
        return trapezoid(self.values, dx=self.offsets.spacing, axis=1)

    def row_tolerance(self) -> float:
        return ROW_NORMALIZATION_TOLERANCE

    def check_rows(self, tolerance: Optional[float] = None) -> None:
        tolerance = self.row_tolerance() if tolerance is None else tolerance
        deviation = np.abs(self.row_masses() - 1.0)
        if deviation.size and float(deviation.max()) > tolerance:
            worst = int(np.argmax(deviation))
            raise NotNormalized(
                f"row at theta={self.angles[worst]:.6f} integrates to "
                f"{self.row_masses()[worst]:.8f}, expected 1 within {tolerance:g}"
            )


@dataclass
class QuadratureDataset(Sinogram):
    """Rotated-quadrature distributions with provenance: exact or sampled(N)."""
    provenance: str = "exact"
    shots: Optional[int] = None

    def __post_init__(self):
        super().__post_init__()
        self.measure = Measure.PHASE_SPACE
        if self.provenance not in ("exact", "sampled"):
            raise ValueError(f"unknown provenance '{self.provenance}'")

    @property
    def provenance_tag(self) -> str:
        return "exact" if self.provenance == "exact" else f"sampled({self.shots})"

    def row_tolerance(self) -> float:
        if self.provenance == "exact":
            return SAMPLED_ROW_TOLERANCE
        # Histogram frequencies sum to one up to bins falling off the grid.
        return max(SAMPLED_ROW_TOLERANCE, 5.0 / np.sqrt(max(self.shots or 1, 1)))


# -----------------------------------------------------------------------------
# Continuous quantum states
# -----------------------------------------------------------------------------
@dataclass
class DensityKernel:
    """values[i, j] = <x_i| rho |x_j>."""
    grid: Grid1D
    values: np.ndarray
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise InvalidGrid(f"kernel shape {self.values.shape} does not match grid n={self.grid.n}")

    def trace(self) -> float:
        return float(np.real(np.trace(self.values))) * self.grid.spacing

    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.values - self.values.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        hermitian = 0.5 * (self.values + self.values.conj().T)
        return np.linalg.eigvalsh(hermitian * self.grid.spacing)

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.values)).copy()

    def check_valid(self, trace_tolerance: float = TRACE_TOLERANCE) -> None:
        """Hermitian, unit trace and positive semidefinite."""
        scale = max(float(np.max(np.abs(self.values))), 1.0)
        if self.hermitian_residual() > HERMITIAN_TOLERANCE * scale:
            raise NotNormalized(f"kernel is not Hermitian (residual {self.hermitian_residual():.3e})")
        if abs(self.trace() - 1.0) > trace_tolerance:
            raise NotNormalized(f"kernel trace {self.trace():.10f}, expected 1 within {trace_tolerance:g}")
        lowest = float(self.eigenvalues().min())
        if lowest < -PSD_TOLERANCE:
            raise NegativeProbability(f"kernel has eigenvalue {lowest:.3e} below -{PSD_TOLERANCE:g}")


@dataclass
class WignerField:
    """values[i, j] = W(q_i, p_j), normalized under dq dp / 2 pi."""
    q_grid: Grid1D
    p_grid: Grid1D
    values: np.ndarray
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.q_grid.n, self.p_grid.n):
            raise InvalidGrid(
                f"Wigner shape {self.values.shape} does not match grids "
                f"({self.q_grid.n}, {self.p_grid.n})"
            )

    @property
    def measure(self) -> Measure:
        return Measure.PHASE_SPACE

    def normalization(self) -> float:
        return self.as_density().mass()

    def as_density(self) -> Density2D:
        return Density2D(self.q_grid, self.p_grid, self.values, measure=Measure.PHASE_SPACE)


@dataclass
class OscillatorBasis:
    """values[n, i] = psi_n(x_i) for n = 0..nmax."""
    nmax: int
    grid: Grid1D
    values: np.ndarray

    def gram(self) -> np.ndarray:
        return self.values @ self.values.T * self.grid.spacing

    def orthonormality_residual(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.nmax + 1))))

    def adequate(self) -> bool:
        """Grid reaches past the classical turning point and resolves the top momentum."""
        turning = np.sqrt(2.0 * self.nmax + 1.0)
        half_width = min(-self.grid.min, self.grid.max)
        return bool(half_width >= turning + 4.0 and np.pi / self.grid.spacing >= turning + 4.0)


# -----------------------------------------------------------------------------
# Qudits
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class PrimeDim:
    d: int

    def __post_init__(self):
        if isinstance(self.d, bool) or int(self.d) != self.d:
            raise NotPrime(f"dimension must be an integer, got {self.d!r}")
        if self.d < 2 or not sympy.isprime(self.d):
            raise NotPrime(f"dimension {self.d} is not prime")
        if self.d > MAX_PRIME:
            raise NotPrime(f"dimension {self.d} exceeds the supported maximum {MAX_PRIME}")

    @property
    def omega(self) -> complex:
        return complex(np.exp(2j * np.pi / self.d))


@dataclass
class QuditState:
    """Hermitian unit-trace d x d matrix; positivity is checked separately."""
    dim: PrimeDim
    matrix: np.ndarray
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.dim.d
        if self.matrix.shape != (d, d):
            raise InvalidGrid(f"qudit matrix shape {self.matrix.shape}, expected ({d}, {d})")
        if self.hermitian_residual() > HERMITIAN_TOLERANCE:
            raise NotNormalized(f"qudit matrix is not Hermitian (residual {self.hermitian_residual():.3e})")
        if self.trace_residual() > QUDIT_TRACE_TOLERANCE:
            raise NotNormalized(f"qudit trace residual {self.trace_residual():.3e}")

    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def trace_residual(self) -> float:
        return float(abs(np.trace(self.matrix) - 1.0))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def is_physical(self, tolerance: float = QUDIT_EIGEN_TOLERANCE) -> bool:
        return bool(self.eigenvalues().min() >= -tolerance)

    def check_physical(self, tolerance: float = QUDIT_EIGEN_TOLERANCE) -> None:
        lowest = float(self.eigenvalues().min())
        if lowest < -tolerance:
            raise NegativeProbability(f"qudit state has eigenvalue {lowest:.3e}")


@dataclass
class MubFamily:
    """bases[b, c] is the vector |c;b>; bases[d] is the computational basis."""
    dim: PrimeDim
    bases: np.ndarray

    @property
    def d(self) -> int:
        return self.dim.d

    def basis(self, b: int) -> np.ndarray:
        return self.bases[b]

    def projector(self, b: int, c: int) -> np.ndarray:
        vector = self.bases[b, c]
        return np.outer(vector, vector.conj())
