"""
Run and Artifact Models
Validated command configuration, artifact sidecar metadata, and the result
shapes of the report and verify subcommands.
"""
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.config.settings import DEFAULT_ANGLES, GRID_MAX, GRID_MIN, GRID_N, INTERPOLATION_ORDER
from app.models.grid_models import Grid1D

ArtifactKind = Literal[
    "state",
    "density",
    "sinogram",
    "quadratures",
    "kernel",
    "wigner",
    "qudit_probs",
    "qudit_state",
    "mub_family",
]


class RunConfig(BaseModel):
    """One CLI invocation after argument parsing."""
    subcommand: str
    input: Optional[str] = None  # upstream sidecar; read from stdin when absent
    out: Optional[str] = None  # output stem
    grid_min: float = GRID_MIN
    grid_max: float = GRID_MAX
    grid_n: int = Field(default=GRID_N, ge=2)
    angles: int = Field(default=DEFAULT_ANGLES, ge=1)
    offsets: Optional[int] = Field(default=None, ge=2)
    epsilon: Optional[float] = Field(default=None, gt=0.0)
    method: Literal["pv", "ramp"] = "pv"
    shots: Optional[int] = Field(default=None, ge=1)  # None means exact
    seed: int = 0
    d: Optional[int] = None
    module: str = "all"
    apodize: bool = False
    clip: bool = False
    positivity: bool = False
    pgm: bool = False
    order: int = Field(default=INTERPOLATION_ORDER, ge=0, le=5)
    singular_angles: Literal["exclude", "reject"] = "exclude"
    # state selection (phantom, qudit-sim)
    kind: Optional[str] = None
    spec: Optional[str] = None  # StateSpec JSON document
    n: Optional[int] = None
    alpha_re: float = 0.0
    alpha_im: float = 0.0
    nbar: Optional[float] = None
    parity: int = 1
    state: str = "e0"  # qudit: e<k>, mixed or random:<seed>

    @model_validator(mode="after")
    def _check_grid(self) -> "RunConfig":
        if not self.grid_max > self.grid_min:
            raise ValueError(f"--grid-max ({self.grid_max}) must exceed --grid-min ({self.grid_min})")
        return self

    @property
    def grid(self) -> Grid1D:
        return Grid1D(min=self.grid_min, max=self.grid_max, n=self.grid_n)

    @property
    def offset_grid(self) -> Grid1D:
        """Offsets span the coordinate grid's extent; count defaults to grid_n."""
        return Grid1D(min=self.grid_min, max=self.grid_max, n=self.offsets or self.grid_n)


class ArtifactMetadata(BaseModel):
    """JSON sidecar written next to every artifact's data files."""
    kind: ArtifactKind
    command: str
    files: Dict[str, str] = Field(default_factory=dict)
    x_grid: Optional[Grid1D] = None
    y_grid: Optional[Grid1D] = None
    measure: Optional[str] = None
    classical: bool = False
    provenance: Optional[str] = None
    shots: Optional[int] = None
    d: Optional[int] = None
    source: Optional[str] = None  # upstream sidecar, relative to this one
    state: Optional[Dict[str, Any]] = None  # StateSpec document for kind == "state"
    diagnostics: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("diagnostics")
    @classmethod
    def _plain_values(cls, value: Dict[str, Any]) -> Dict[str, Any]:
        return {key: _plain(item) for key, item in value.items()}


def _plain(value: Any) -> Any:
    """numpy scalars and arrays to JSON-native values."""
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


class ReportResult(BaseModel):
    """Reconstruction versus ground truth."""
    kind: ArtifactKind
    estimate: str
    truth: str
    relative_l2: float
    max_norm: float
    trace_residual: Optional[float] = None
    hermitian_residual: Optional[float] = None
    trace_norm_error: Optional[float] = None
    normalization: Optional[float] = None


class CheckResult(BaseModel):
    module: str
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""


class VerifyResult(BaseModel):
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]
