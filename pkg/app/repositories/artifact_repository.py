"""
Artifact Repository
Reads and writes pipeline artifacts: CSV data files, JSON sidecars and PGM images.

Every artifact is addressed by its sidecar path <stem>.json. Sidecars record the
upstream sidecar in "source" (relative to their own directory), so a chain of
artifacts can be walked back to its ground truth without extra arguments.
See Artifact_Schema_Description in app.models.artifact_schema for the formats.
"""
import csv
import json
import logging
import os
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.config.settings import FLOAT_FORMAT, PGM_BITS
from app.errors import UsageError
from app.models.field_models import (
    Density2D,
    DensityKernel,
    Measure,
    MubFamily,
    PrimeDim,
    QuadratureDataset,
    QuditState,
    Sinogram,
    WignerField,
)
from app.models.run_models import ArtifactMetadata
from app.models.state_models import StateSpec

LOGGER = logging.getLogger(__name__)


# -----------------------------------------------------------------------------
# Paths and sidecars
# -----------------------------------------------------------------------------
def stem_of(path: str) -> str:
    return path[:-len(".json")] if path.endswith(".json") else path


def sidecar_path(stem: str) -> str:
    return stem_of(stem) + ".json"


def _relative_source(stem: str, source: Optional[str]) -> Optional[str]:
    if source is None:
        return None
    base = os.path.dirname(os.path.abspath(sidecar_path(stem)))
    return os.path.relpath(os.path.abspath(source), base)


def write_metadata(stem: str, meta: ArtifactMetadata) -> str:
    path = sidecar_path(stem)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(meta.model_dump(mode="json", exclude_none=True), f, indent=2, sort_keys=True)
        f.write("\n")
    LOGGER.info("[Artifacts] wrote %s (%s)", path, meta.kind)
    return path


def read_metadata(path: str) -> ArtifactMetadata:
    """
    Raises:
        UsageError: if the sidecar does not exist or is not valid JSON
    """
    path = sidecar_path(path)
    if not os.path.exists(path):
        raise UsageError(f"artifact sidecar not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise UsageError(f"{path} is not valid JSON: {e}") from e
    return ArtifactMetadata.model_validate(document)


def source_path(path: str, meta: ArtifactMetadata) -> Optional[str]:
    """Absolute path of the upstream sidecar, if any."""
    if not meta.source:
        return None
    return os.path.normpath(os.path.join(os.path.dirname(os.path.abspath(sidecar_path(path))), meta.source))


def walk_chain(path: str) -> Iterator[Tuple[str, ArtifactMetadata]]:
    """The artifact itself, then each upstream artifact in turn."""
    seen = set()
    current: Optional[str] = sidecar_path(path)
    while current is not None and current not in seen:
        seen.add(current)
        meta = read_metadata(current)
        yield current, meta
        current = source_path(current, meta)


def _data_path(stem: str, name: str) -> str:
    directory = os.path.dirname(sidecar_path(stem))
    if directory:
        os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, name)


# -----------------------------------------------------------------------------
# CSV helpers
# -----------------------------------------------------------------------------
def _format(value: float) -> str:
    return FLOAT_FORMAT % value


def _write_table(path: str, header: Sequence[str], columns: List[np.ndarray], integer_columns: int = 0) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([str(int(v)) for v in row[:integer_columns]]
                            + [_format(v) for v in row[integer_columns:]])


def _read_table(path: str, header: Sequence[str]) -> np.ndarray:
    if not os.path.exists(path):
        raise UsageError(f"artifact data file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline().strip().split(",")
    if first != list(header):
        raise UsageError(f"{path}: expected header {','.join(header)}, found {','.join(first)}")
    return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1, dtype=float))


def _write_grid_values(path: str, header: Sequence[str], x: np.ndarray, y: np.ndarray,
                       values: np.ndarray) -> None:
    xx, yy = np.meshgrid(x, y, indexing="ij")
    _write_table(path, header, [xx.ravel(), yy.ravel(), np.asarray(values, dtype=float).ravel()])


def _read_grid_values(path: str, header: Sequence[str], shape: Tuple[int, int]) -> np.ndarray:
    table = _read_table(path, header)
    if table.shape[0] != shape[0] * shape[1]:
        raise UsageError(f"{path}: {table.shape[0]} rows, expected {shape[0] * shape[1]}")
    return table[:, 2].reshape(shape)


# -----------------------------------------------------------------------------
# Writers
# -----------------------------------------------------------------------------
def write_state(stem: str, spec: StateSpec, command: str) -> str:
    meta = ArtifactMetadata(kind="state", command=command, state=spec.model_dump(mode="json"))
    return write_metadata(stem, meta)


def write_density(stem: str, density: Density2D, command: str, source: Optional[str] = None,
                  pgm: bool = False) -> str:
    name = os.path.basename(stem_of(stem)) + ".csv"
    _write_grid_values(_data_path(stem, name), ("x", "y", "value"),
                       density.x_grid.points, density.y_grid.points, density.values)
    files = {"values": name}
    if pgm:
        files.update(write_pgm(stem, density.values))
    meta = ArtifactMetadata(kind="density", command=command, files=files, x_grid=density.x_grid,
                            y_grid=density.y_grid, measure=density.measure.value, classical=density.classical,
                            source=_relative_source(stem, source), diagnostics=density.diagnostics)
    return write_metadata(stem, meta)


def write_wigner(stem: str, field: WignerField, command: str, source: Optional[str] = None,
                 pgm: bool = False) -> str:
    name = os.path.basename(stem_of(stem)) + ".csv"
    _write_grid_values(_data_path(stem, name), ("q", "p", "value"),
                       field.q_grid.points, field.p_grid.points, field.values)
    files = {"values": name}
    if pgm:
        files.update(write_pgm(stem, field.values))
    meta = ArtifactMetadata(kind="wigner", command=command, files=files, x_grid=field.q_grid,
                            y_grid=field.p_grid, measure=Measure.PHASE_SPACE.value,
                            source=_relative_source(stem, source), diagnostics=field.diagnostics)
    return write_metadata(stem, meta)


def write_sinogram(stem: str, sinogram: Sinogram, command: str, source: Optional[str] = None) -> str:
    name = os.path.basename(stem_of(stem)) + ".csv"
    _write_grid_values(_data_path(stem, name), ("theta", "xprime", "value"),
                       sinogram.angles, sinogram.offsets.points, sinogram.values)
    kind = "quadratures" if isinstance(sinogram, QuadratureDataset) else "sinogram"
    meta = ArtifactMetadata(kind=kind, command=command, files={"values": name}, y_grid=sinogram.offsets,
                            measure=sinogram.measure.value, source=_relative_source(stem, source),
                            diagnostics=sinogram.diagnostics)
    if isinstance(sinogram, QuadratureDataset):
        meta.provenance = sinogram.provenance
        meta.shots = sinogram.shots
    return write_metadata(stem, meta)


def _write_complex_matrix(stem: str, header: Sequence[str], axis: np.ndarray,
                          values: np.ndarray, integer: bool = False) -> dict:
    base = os.path.basename(stem_of(stem))
    files = {"real": base + "_real.csv", "imag": base + "_imag.csv"}
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    count = 2 if integer else 0
    for part, name in (("real", files["real"]), ("imag", files["imag"])):
        data = values.real if part == "real" else values.imag
        _write_table(_data_path(stem, name), header, [xx.ravel(), yy.ravel(), data.ravel()], count)
    return files


def write_kernel(stem: str, kernel: DensityKernel, command: str, source: Optional[str] = None) -> str:
    files = _write_complex_matrix(stem, ("x1", "x2", "value"), kernel.grid.points, kernel.values)
    meta = ArtifactMetadata(kind="kernel", command=command, files=files, x_grid=kernel.grid,
                            source=_relative_source(stem, source), diagnostics=kernel.diagnostics)
    return write_metadata(stem, meta)


def write_qudit_state(stem: str, state: QuditState, command: str, source: Optional[str] = None,
                      provenance: Optional[str] = None) -> str:
    files = _write_complex_matrix(stem, ("row", "col", "value"), np.arange(state.dim.d), state.matrix,
                                  integer=True)
    meta = ArtifactMetadata(kind="qudit_state", command=command, files=files, d=state.dim.d,
                            provenance=provenance, source=_relative_source(stem, source),
                            diagnostics=state.diagnostics)
    return write_metadata(stem, meta)


def write_probabilities(stem: str, probs: np.ndarray, d: int, command: str, source: Optional[str] = None,
                        provenance: str = "exact", shots: Optional[int] = None) -> str:
    name = os.path.basename(stem_of(stem)) + ".csv"
    basis, outcome = np.meshgrid(np.arange(d + 1), np.arange(d), indexing="ij")
    _write_table(_data_path(stem, name), ("basis", "outcome", "prob"),
                 [basis.ravel(), outcome.ravel(), np.asarray(probs, dtype=float).ravel()], 2)
    meta = ArtifactMetadata(kind="qudit_probs", command=command, files={"values": name}, d=d,
                            provenance=provenance, shots=shots, source=_relative_source(stem, source))
    return write_metadata(stem, meta)


def write_mub_family(stem: str, fam: MubFamily, command: str, diagnostics: Optional[dict] = None) -> str:
    name = os.path.basename(stem_of(stem)) + ".csv"
    d = fam.d
    basis, outcome, component = np.meshgrid(np.arange(d + 1), np.arange(d), np.arange(d), indexing="ij")
    _write_table(_data_path(stem, name), ("basis", "outcome", "n", "real", "imag"),
                 [basis.ravel(), outcome.ravel(), component.ravel(), fam.bases.real.ravel(), fam.bases.imag.ravel()],
                 3)
    meta = ArtifactMetadata(kind="mub_family", command=command, files={"values": name}, d=d,
                            diagnostics=diagnostics or {})
    return write_metadata(stem, meta)


def write_pgm(stem: str, values: np.ndarray, bits: int = PGM_BITS) -> dict:
    """
    Binary PGM (P5) of a 2D field, rows along the second axis, plus a JSON scale sidecar.

    Returns:
        {"pgm": name, "pgm_scale": name}
    """
    base = os.path.basename(stem_of(stem))
    maxval = (1 << bits) - 1
    values = np.asarray(values, dtype=float)
    low, high = float(values.min()), float(values.max())
    span = high - low if high > low else 1.0
    levels = np.rint((values.T[::-1] - low) / span * maxval)
    pixels = levels.astype(">u2" if bits > 8 else "u1")
    height, width = pixels.shape
    with open(_data_path(stem, base + ".pgm"), "wb") as f:
        f.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        f.write(pixels.tobytes())
    with open(_data_path(stem, base + ".pgm.json"), "w", encoding="utf-8") as f:
        json.dump({"min": low, "max": high, "bits": bits}, f, indent=2, sort_keys=True)
        f.write("\n")
    return {"pgm": base + ".pgm", "pgm_scale": base + ".pgm.json"}


# -----------------------------------------------------------------------------
# Readers
# -----------------------------------------------------------------------------
def _require(meta: ArtifactMetadata, path: str, *kinds: str) -> None:
    if meta.kind not in kinds:
        raise UsageError(f"{path} holds a '{meta.kind}' artifact, expected {' or '.join(kinds)}")


def read_state(path: str) -> StateSpec:
    meta = read_metadata(path)
    _require(meta, path, "state")
    return StateSpec.model_validate(meta.state)


def read_density(path: str) -> Density2D:
    meta = read_metadata(path)
    _require(meta, path, "density")
    values = _read_grid_values(_data_path(path, meta.files["values"]), ("x", "y", "value"),
                                  (meta.x_grid.n, meta.y_grid.n))
    return Density2D(meta.x_grid, meta.y_grid, values, measure=Measure(meta.measure),
                     classical=meta.classical, diagnostics=dict(meta.diagnostics))


def read_wigner(path: str) -> WignerField:
    meta = read_metadata(path)
    _require(meta, path, "wigner")
    values = _read_grid_values(_data_path(path, meta.files["values"]), ("q", "p", "value"),
                                  (meta.x_grid.n, meta.y_grid.n))
    return WignerField(meta.x_grid, meta.y_grid, values, diagnostics=dict(meta.diagnostics))


def read_sinogram(path: str) -> Sinogram:
    """Sinogram or QuadratureDataset, by the sidecar's kind."""
    meta = read_metadata(path)
    _require(meta, path, "sinogram", "quadratures")
    offsets = meta.y_grid
    table = _read_table(_data_path(path, meta.files["values"]), ("theta", "xprime", "value"))
    if table.shape[0] % offsets.n:
        raise UsageError(f"{path}: {table.shape[0]} rows is not a multiple of {offsets.n} offsets")
    count = table.shape[0] // offsets.n
    angles = table[:, 0].reshape(count, offsets.n)[:, 0]
    values = table[:, 2].reshape(count, offsets.n)
    if meta.kind == "quadratures":
        return QuadratureDataset(angles=angles, offsets=offsets, values=values,
                                 diagnostics=dict(meta.diagnostics),
                                 provenance=meta.provenance or "exact", shots=meta.shots)
    return Sinogram(angles=angles, offsets=offsets, values=values, measure=Measure(meta.measure),
                    diagnostics=dict(meta.diagnostics))


def _read_complex_matrix(path: str, meta: ArtifactMetadata, header: Sequence[str], size: int) -> np.ndarray:
    real = _read_table(_data_path(path, meta.files["real"]), header)[:, 2]
    imag = _read_table(_data_path(path, meta.files["imag"]), header)[:, 2]
    if real.size != size * size or imag.size != size * size:
        raise UsageError(f"{path}: matrix files do not hold {size}x{size} entries")
    return (real + 1j * imag).reshape(size, size)


def read_kernel(path: str) -> DensityKernel:
    meta = read_metadata(path)
    _require(meta, path, "kernel")
    values = _read_complex_matrix(path, meta, ("x1", "x2", "value"), meta.x_grid.n)
    return DensityKernel(meta.x_grid, values, diagnostics=dict(meta.diagnostics))


def read_qudit_state(path: str) -> QuditState:
    meta = read_metadata(path)
    _require(meta, path, "qudit_state")
    values = _read_complex_matrix(path, meta, ("row", "col", "value"), meta.d)
    return QuditState(PrimeDim(meta.d), values, diagnostics=dict(meta.diagnostics))


def read_probabilities(path: str) -> Tuple[np.ndarray, int]:
    meta = read_metadata(path)
    _require(meta, path, "qudit_probs")
    table = _read_table(_data_path(path, meta.files["values"]), ("basis", "outcome", "prob"))
    d = meta.d
    if table.shape[0] != (d + 1) * d:
        raise UsageError(f"{path}: {table.shape[0]} rows, expected {(d + 1) * d}")
    return table[:, 2].reshape(d + 1, d), d
