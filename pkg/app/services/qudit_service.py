"""
Qudit Service
Prime-dimension qudit tomography: Schwinger clock/shift operators, modular
inverses, the d + 1 mutually unbiased bases and the affine reconstruction

    rho = sum_{b,c} |c;b> p[b][c] <c;b| + sum_n |n> p_comp[n] <n| - I
"""
import logging
from typing import Optional, Tuple

import numpy as np

from app.config.settings import PROBABILITY_ROW_TOLERANCE
from app.errors import NegativeProbability, NotInvertible, RowNotNormalized, UsageError
from app.models.field_models import MubFamily, PrimeDim, QuditState
from app.services import numerics_service

LOGGER = logging.getLogger(__name__)


def mod_inverse(m: int, dim: PrimeDim) -> int:
    """
    m^{-1} mod d.

    Raises:
        NotInvertible: if m = 0 mod d
    """
    if m % dim.d == 0:
        raise NotInvertible(f"{m} has no inverse modulo {dim.d}")
    return pow(m, -1, dim.d)


def schwinger_ops(dim: PrimeDim) -> Tuple[np.ndarray, np.ndarray]:
    """
    Shift X|n> = |n+1 mod d> and clock Z|n> = omega^n |n>.

    Returns:
        (X, Z), both unitary with ZX = omega XZ
    """
    d = dim.d
    shift = np.zeros((d, d), dtype=complex)
    shift[(np.arange(d) + 1) % d, np.arange(d)] = 1.0
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    if d == 2:
        clock = np.diag([1.0 + 0j, -1.0 + 0j])
    return shift, clock


def power_identity_check(dim: PrimeDim, m: int, b: int, tolerance: float = 1e-12) -> bool:
    """X^m Z^l = omega^{-m(m-1)b/2} (X Z^b)^m with l = m b mod d."""
    shift, clock = schwinger_ops(dim)
    l = (m * b) % dim.d
    left = np.linalg.matrix_power(shift, m) @ np.linalg.matrix_power(clock, l)
    step = shift @ np.linalg.matrix_power(clock, b % dim.d)
    # m(m-1)/2 is an integer, so the phase is well defined for every prime.
    phase = np.exp(-2j * np.pi * ((b * (m * (m - 1) // 2)) % dim.d) / dim.d)
    right = phase * np.linalg.matrix_power(step, m)
    return bool(np.max(np.abs(left - right)) <= tolerance)


def mub_vector(dim: PrimeDim, b: int, c: int) -> np.ndarray:
    """
    |c;b> = d^{-1/2} sum_n omega^{(b/2) n(n-1) - cn} |n>.

    For d = 2 the half-integer exponent uses omega^{1/2} = i, giving
    |c;b> = 2^{-1/2} sum_n i^{bn} (-1)^{cn} |n>.
    """
    d = dim.d
    n = np.arange(d)
    if d == 2:
        return np.array([1j ** (b * k) * (-1.0) ** (c * k) for k in n]) / np.sqrt(2.0)
    triangle = n * (n - 1) // 2
    exponent = (b * triangle - c * n) % d
    return np.exp(2j * np.pi * exponent / d) / np.sqrt(d)


def mub_family(dim: PrimeDim) -> MubFamily:
    """The d bases |c;b>, b = 0..d-1, followed by the computational basis."""
    d = dim.d
    bases = np.empty((d + 1, d, d), dtype=complex)
    for b in range(d):
        for c in range(d):
            bases[b, c] = mub_vector(dim, b, c)
    bases[d] = np.eye(d, dtype=complex)
    return MubFamily(dim, bases)


def mub_eigenvalue(dim: PrimeDim, b: int, c: int) -> complex:
    """Eigenvalue of X Z^b on |c;b>: omega^c, times omega^{-b/2} for d = 2."""
    if dim.d == 2:
        return (-1.0) ** c * (-1j) ** (b % 4)
    return dim.omega ** c


def eigen_relation_residual(fam: MubFamily, m: int = 1) -> float:
    """max |(X Z^b)^m |c;b> - lambda^m |c;b>| over all b, c."""
    shift, clock = schwinger_ops(fam.dim)
    worst = 0.0
    for b in range(fam.d):
        step = np.linalg.matrix_power(shift @ np.linalg.matrix_power(clock, b), m)
        for c in range(fam.d):
            vector = fam.bases[b, c]
            residual = step @ vector - mub_eigenvalue(fam.dim, b, c) ** m * vector
            worst = max(worst, float(np.max(np.abs(residual))))
    return worst


def orthonormality_residual(fam: MubFamily) -> float:
    worst = 0.0
    identity = np.eye(fam.d)
    for basis in fam.bases:
        gram = basis.conj() @ basis.T
        worst = max(worst, float(np.max(np.abs(gram - identity))))
    return worst


def flatness_residual(fam: MubFamily) -> float:
    """max | |<c;b|c';b'>|^2 - 1/d | over distinct bases, computational included."""
    worst = 0.0
    for first in range(fam.d + 1):
        for second in range(first + 1, fam.d + 1):
            overlaps = np.abs(fam.bases[first].conj() @ fam.bases[second].T) ** 2
            worst = max(worst, float(np.max(np.abs(overlaps - 1.0 / fam.d))))
    return worst


def operator_basis(dim: PrimeDim) -> np.ndarray:
    """The d^2 operators (X Z^b)^m for m = 1..d-1 and Z^l for l = 0..d-1."""
    shift, clock = schwinger_ops(dim)
    operators = []
    for b in range(dim.d):
        step = shift @ np.linalg.matrix_power(clock, b)
        for m in range(1, dim.d):
            operators.append(np.linalg.matrix_power(step, m))
    for l in range(dim.d):
        operators.append(np.linalg.matrix_power(clock, l))
    return np.array(operators)


def operator_gram_rank(dim: PrimeDim) -> int:
    """Rank of Tr[A_i^dagger A_j] over the operator basis."""
    operators = operator_basis(dim).reshape(dim.d * dim.d, -1)
    gram = operators.conj() @ operators.T
    return int(np.linalg.matrix_rank(gram))


def measurement_probabilities(rho: QuditState, fam: MubFamily) -> np.ndarray:
    """
    p[b][c] = <c;b|rho|c;b>; row d is the computational basis.

    Returns:
        Real array (d + 1, d)
    """
    amplitudes = np.einsum("bci,ij,bcj->bc", fam.bases.conj(), rho.matrix, fam.bases)
    return np.clip(amplitudes.real, 0.0, None)


def check_probabilities(probs: np.ndarray, fam: MubFamily,
                        tolerance: float = PROBABILITY_ROW_TOLERANCE) -> np.ndarray:
    """
    Raises:
        RowNotNormalized: shape mismatch or a row not summing to 1
        NegativeProbability: a negative entry
    """
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (fam.d + 1, fam.d):
        raise RowNotNormalized(f"probability table shape {probs.shape}, expected ({fam.d + 1}, {fam.d})")
    if np.any(probs < 0):
        row, column = np.argwhere(probs < 0)[0]
        raise NegativeProbability(f"negative probability {probs[row, column]:.3e} at basis {row}, outcome {column}")
    deviation = np.abs(probs.sum(axis=1) - 1.0)
    if float(deviation.max()) > tolerance:
        row = int(np.argmax(deviation))
        raise RowNotNormalized(f"basis {row} probabilities sum to {probs[row].sum():.12f}")
    return probs


def reconstruct_qudit(probs: np.ndarray, fam: MubFamily, positivity: bool = False) -> QuditState:
    """
    Affine MUB reconstruction from the (d + 1) x d probability table.

    Args:
        probs: Rows b = 0..d-1 for the MUBs, row d for the computational basis
        fam: Basis family the probabilities were measured in
        positivity: Clip negative eigenvalues and renormalize

    Returns:
        QuditState (possibly non-positive for noisy input unless positivity is set)

    Raises:
        RowNotNormalized: a row does not sum to 1
        NegativeProbability: a negative entry
    """
    probs = check_probabilities(probs, fam)
    d = fam.d
    matrix = np.einsum("bc,bci,bcj->ij", probs, fam.bases, fam.bases.conj())
    matrix = matrix - np.eye(d)
    matrix = 0.5 * (matrix + matrix.conj().T)
    # Rows sum to 1 within tolerance; restore the unit trace exactly.
    matrix = matrix + (1.0 - np.trace(matrix).real) / d * np.eye(d)
    diagnostics = {"lowest_eigenvalue": float(np.linalg.eigvalsh(matrix).min())}
    if positivity:
        matrix, clipped = numerics_service.eigenvalue_floor(matrix)
        matrix = 0.5 * (matrix + matrix.conj().T)
        diagnostics["clipped_eigenvalue_mass"] = clipped
    return QuditState(fam.dim, matrix, diagnostics=diagnostics)


def sample_measurements(rho: QuditState, fam: MubFamily, shots_per_basis: int, seed: int) -> np.ndarray:
    """
    Empirical frequencies from multinomial draws in every basis.

    A single numpy Generator (default_rng(seed), PCG64) draws bases in the order
    b = 0..d-1 then the computational basis, so (rho, shots, seed) fixes the output.

    Raises:
        UsageError: if shots_per_basis < 1
    """
    if shots_per_basis < 1:
        raise UsageError(f"shots per basis must be >= 1, got {shots_per_basis}")
    rng = np.random.default_rng(seed)
    exact = measurement_probabilities(rho, fam)
    exact = exact / exact.sum(axis=1, keepdims=True)
    counts = np.array([rng.multinomial(shots_per_basis, row) for row in exact])
    LOGGER.info("[Qudit] sampled %d shots per basis (d=%d, seed %d)", shots_per_basis, fam.d, seed)
    return counts / shots_per_basis


def trace_norm_error(estimate: QuditState, truth: QuditState) -> float:
    """Sum of singular values of the difference."""
    return float(np.linalg.svd(estimate.matrix - truth.matrix, compute_uv=False).sum())


def basis_state(fam: MubFamily, b: int, c: int) -> QuditState:
    vector = fam.bases[b, c]
    return QuditState(fam.dim, np.outer(vector, vector.conj()), diagnostics={"source": f"|{c};{b}>"})


def maximally_mixed(dim: PrimeDim) -> QuditState:
    return QuditState(dim, np.eye(dim.d, dtype=complex) / dim.d, diagnostics={"source": "mixed"})


def random_pure(dim: PrimeDim, rng: np.random.Generator) -> QuditState:
    vector = rng.standard_normal(dim.d) + 1j * rng.standard_normal(dim.d)
    vector = vector / np.linalg.norm(vector)
    matrix = np.outer(vector, vector.conj())
    return QuditState(dim, 0.5 * (matrix + matrix.conj().T))


def random_mixed(dim: PrimeDim, rng: np.random.Generator, rank: Optional[int] = None) -> QuditState:
    """Ginibre-distributed mixed state G G^dagger / Tr."""
    rank = dim.d if rank is None else rank
    ginibre = rng.standard_normal((dim.d, rank)) + 1j * rng.standard_normal((dim.d, rank))
    matrix = ginibre @ ginibre.conj().T
    matrix = matrix / np.trace(matrix).real
    return QuditState(dim, 0.5 * (matrix + matrix.conj().T))
