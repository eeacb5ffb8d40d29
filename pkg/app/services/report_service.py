"""
Report Service
Compares a reconstruction artifact with its ground truth.

The truth is the nearest upstream artifact of the same kind in the sidecar
chain; failing that, the nearest upstream state spec is realized on the
estimate's grid.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from app.errors import GridMismatch, UsageError, WrongKind
from app.models.run_models import ArtifactMetadata, ReportResult
from app.repositories import artifact_repository
from app.services import qudit_service, state_service, wigner_service

LOGGER = logging.getLogger(__name__)

COMPARABLE_KINDS = ("density", "wigner", "kernel", "qudit_state")


def relative_l2(estimate: np.ndarray, truth: np.ndarray) -> float:
    """||estimate - truth||_2 / ||truth||_2 over all samples."""
    if estimate.shape != truth.shape:
        raise GridMismatch(f"cannot compare arrays of shape {estimate.shape} and {truth.shape}")
    return float(np.linalg.norm(estimate - truth) / np.linalg.norm(truth))


def max_norm_error(estimate: np.ndarray, truth: np.ndarray) -> float:
    """max |estimate - truth| relative to max |truth|."""
    if estimate.shape != truth.shape:
        raise GridMismatch(f"cannot compare arrays of shape {estimate.shape} and {truth.shape}")
    return float(np.max(np.abs(estimate - truth)) / np.max(np.abs(truth)))


def find_truth(path: str) -> Tuple[str, ArtifactMetadata]:
    """
    Nearest upstream artifact of the estimate's kind, else the nearest state spec.

    Raises:
        UsageError: if the chain holds neither
    """
    chain = list(artifact_repository.walk_chain(path))
    _, estimate_meta = chain[0]
    if estimate_meta.kind not in COMPARABLE_KINDS:
        raise UsageError(f"report compares {', '.join(COMPARABLE_KINDS)} artifacts, not '{estimate_meta.kind}'")
    for upstream, meta in chain[1:]:
        if meta.kind == estimate_meta.kind:
            return upstream, meta
    for upstream, meta in chain[1:]:
        if meta.kind == "state":
            return upstream, meta
    raise UsageError(f"no ground truth found upstream of {path}")


def _truth_wigner(spec, estimate):
    try:
        q = estimate.q_grid.points[:, np.newaxis]
        p = estimate.p_grid.points[np.newaxis, :]
        return state_service.wigner_oracle(spec, q, p)
    except WrongKind:
        kernel = state_service.realize_kernel(spec, estimate.q_grid)
        return wigner_service.wigner_transform(kernel, estimate.q_grid, estimate.p_grid).values


def build_report(path: str, truth_path: Optional[str] = None) -> ReportResult:
    """
    Args:
        path: Sidecar of the reconstruction
        truth_path: Explicit ground-truth sidecar; found from the chain when omitted

    Returns:
        ReportResult with relative L2, max-norm and the kind-specific residuals
    """
    meta = artifact_repository.read_metadata(path)
    if truth_path is None:
        truth_path, truth_meta = find_truth(path)
    else:
        truth_meta = artifact_repository.read_metadata(truth_path)
    from_state = truth_meta.kind == "state"
    spec = artifact_repository.read_state(truth_path) if from_state else None
    kind = meta.kind
    result = {"kind": kind, "estimate": artifact_repository.sidecar_path(path),
              "truth": artifact_repository.sidecar_path(truth_path)}

    if kind == "density":
        estimate = artifact_repository.read_density(path)
        truth = (state_service.realize_phantom(spec, estimate.x_grid, estimate.y_grid) if from_state
                 else artifact_repository.read_density(truth_path))
        truth_values = truth.values
        result["normalization"] = estimate.mass()
        values = estimate.values
    elif kind == "wigner":
        estimate = artifact_repository.read_wigner(path)
        truth_values = _truth_wigner(spec, estimate) if from_state else artifact_repository.read_wigner(truth_path).values
        result["normalization"] = estimate.normalization()
        values = estimate.values
    elif kind == "kernel":
        estimate = artifact_repository.read_kernel(path)
        truth_values = (state_service.realize_kernel(spec, estimate.grid) if from_state
                        else artifact_repository.read_kernel(truth_path)).values
        scale = float(np.max(np.abs(estimate.values))) or 1.0
        result["trace_residual"] = abs(estimate.trace() - 1.0)
        result["hermitian_residual"] = estimate.hermitian_residual() / scale
        values = estimate.values
    elif kind == "qudit_state":
        estimate = artifact_repository.read_qudit_state(path)
        truth = state_service.realize_qudit(spec) if from_state else artifact_repository.read_qudit_state(truth_path)
        truth_values = truth.matrix
        result["trace_norm_error"] = qudit_service.trace_norm_error(estimate, truth)
        result["trace_residual"] = estimate.trace_residual()
        result["hermitian_residual"] = estimate.hermitian_residual()
        values = estimate.matrix
    else:
        raise UsageError(f"report compares {', '.join(COMPARABLE_KINDS)} artifacts, not '{kind}'")

    result["relative_l2"] = relative_l2(values, truth_values)
    result["max_norm"] = max_norm_error(values, truth_values)
    report = ReportResult(**result)
    LOGGER.info("[Report] %s vs %s: relative L2 %.4e, max-norm %.4e", report.estimate, report.truth,
                report.relative_l2, report.max_norm)
    return report
