"""
State specification models.
Ground-truth states and phantoms described as JSON documents; see
State_Spec_Schema_Description in app.models.artifact_schema for the format.
"""
from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from app.config.settings import OSCILLATOR_NMAX


class StateKind(str, Enum):
    VACUUM = "vacuum"
    FOCK = "fock"
    COHERENT = "coherent"
    THERMAL = "thermal"
    CAT = "cat"
    MIXED = "mixed"
    PHANTOM = "phantom"
    QUDIT_PURE = "qudit_pure"
    QUDIT_RANDOM_MIXED = "qudit_random_mixed"


CONTINUOUS_KINDS = {
    StateKind.VACUUM,
    StateKind.FOCK,
    StateKind.COHERENT,
    StateKind.THERMAL,
    StateKind.CAT,
    StateKind.MIXED,
}
QUDIT_KINDS = {StateKind.QUDIT_PURE, StateKind.QUDIT_RANDOM_MIXED}


class Blob(BaseModel):
    """One phantom component: an isotropic Gaussian or a filled ellipse."""
    shape: Literal["gaussian", "ellipse"] = "gaussian"
    x0: float = 0.0
    y0: float = 0.0
    sigma: float = Field(default=1.0, gt=0.0)
    a: float = Field(default=1.0, gt=0.0)  # ellipse semi-axes
    b: float = Field(default=1.0, gt=0.0)
    angle: float = 0.0
    weight: float = Field(default=1.0, ge=0.0)

    def reach(self) -> float:
        """Distance from the origin beyond which the blob is negligible."""
        radius = 6.0 * self.sigma if self.shape == "gaussian" else max(self.a, self.b)
        return (self.x0 ** 2 + self.y0 ** 2) ** 0.5 + radius


class StateSpec(BaseModel):
    """Discriminated by kind; only the fields relevant to the kind are read."""
    kind: StateKind
    n: Optional[int] = Field(default=None, ge=0)
    alpha_re: float = 0.0
    alpha_im: float = 0.0
    nbar: Optional[float] = Field(default=None, ge=0.0)
    parity: Literal[1, -1] = 1
    weights: List[float] = Field(default_factory=list)
    components: List["StateSpec"] = Field(default_factory=list)
    blobs: List[Blob] = Field(default_factory=list)
    d: Optional[int] = None
    vector_re: List[float] = Field(default_factory=list)
    vector_im: List[float] = Field(default_factory=list)
    seed: Optional[int] = None
    nmax: int = Field(default=OSCILLATOR_NMAX, ge=1)

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_re, self.alpha_im)

    @property
    def is_continuous(self) -> bool:
        return self.kind in CONTINUOUS_KINDS

    @property
    def is_qudit(self) -> bool:
        return self.kind in QUDIT_KINDS

    @model_validator(mode="after")
    def _check_kind_fields(self) -> "StateSpec":
        kind = self.kind
        if kind is StateKind.FOCK:
            if self.n is None:
                raise ValueError("fock state needs 'n'")
            if self.n > self.nmax:
                raise ValueError(f"fock n={self.n} exceeds nmax={self.nmax}")
        elif kind is StateKind.THERMAL and self.nbar is None:
            raise ValueError("thermal state needs 'nbar'")
        elif kind is StateKind.CAT and self.alpha == 0 and self.parity == -1:
            raise ValueError("odd cat state needs alpha != 0")
        elif kind is StateKind.MIXED:
            if not self.components or len(self.weights) != len(self.components):
                raise ValueError("mixed state needs one weight per component")
            if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
                raise ValueError(f"mixture weights must be >= 0 and sum to 1, got {self.weights}")
            if not all(c.is_continuous for c in self.components):
                raise ValueError("mixture components must be continuous-variable states")
        elif kind is StateKind.PHANTOM:
            if not self.blobs:
                raise ValueError("phantom needs at least one blob")
            total = sum(b.weight for b in self.blobs)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"blob weights must sum to 1, got {total}")
        elif kind is StateKind.QUDIT_PURE:
            if self.d is None or len(self.vector_re) != self.d:
                raise ValueError("qudit_pure needs 'd' and a length-d 'vector_re'")
            if self.vector_im and len(self.vector_im) != self.d:
                raise ValueError("'vector_im' must have length d")
            norm = sum(x * x for x in self.vector_re) + sum(x * x for x in self.vector_im)
            if norm == 0:
                raise ValueError("qudit_pure vector is zero")
        elif kind is StateKind.QUDIT_RANDOM_MIXED:
            if self.d is None or self.seed is None:
                raise ValueError("qudit_random_mixed needs 'd' and 'seed'")
        return self


StateSpec.model_rebuild()
