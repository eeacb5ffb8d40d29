"""
Grid and kernel parameter models.
Uniform 1D sampling grids and the epsilon-regularized principal-value kernel.
"""
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config.settings import EPSILON_FACTOR, GRID_MAX, GRID_MIN, GRID_N
from app.errors import InvalidGrid


class Grid1D(BaseModel):
    """Uniform grid: point(i) = min + i * spacing, i = 0..n-1."""
    model_config = ConfigDict(frozen=True)

    min: float
    max: float
    n: int

    @model_validator(mode="after")
    def _check_extent(self) -> "Grid1D":
        if self.n < 2:
            raise InvalidGrid(f"grid needs n >= 2 points, got n={self.n}")
        if not self.max > self.min:
            raise InvalidGrid(f"grid needs max > min, got [{self.min}, {self.max}]")
        return self

    @classmethod
    def default(cls) -> "Grid1D":
        return cls(min=GRID_MIN, max=GRID_MAX, n=GRID_N)

    @classmethod
    def symmetric(cls, half_width: float, n: int) -> "Grid1D":
        return cls(min=-half_width, max=half_width, n=n)

    @classmethod
    def from_points(cls, points: np.ndarray, rtol: float = 1e-9) -> "Grid1D":
        """Recover a grid from sampled coordinates, rejecting non-uniform input."""
        points = np.asarray(points, dtype=float)
        if points.size < 2:
            raise InvalidGrid("need at least two coordinates to define a grid")
        grid = cls(min=float(points[0]), max=float(points[-1]), n=int(points.size))
        if not np.allclose(points, grid.points, rtol=0.0, atol=rtol * (grid.max - grid.min)):
            raise InvalidGrid("coordinates are not uniformly spaced")
        return grid

    @property
    def spacing(self) -> float:
        return (self.max - self.min) / (self.n - 1)

    @property
    def extent(self) -> float:
        return self.max - self.min

    @property
    def points(self) -> np.ndarray:
        return self.min + np.arange(self.n) * self.spacing

    def to_index(self, values: np.ndarray) -> np.ndarray:
        """Fractional index coordinates of arbitrary values."""
        return (np.asarray(values, dtype=float) - self.min) / self.spacing

    def is_symmetric(self) -> bool:
        return bool(np.isclose(self.min, -self.max, rtol=0.0, atol=1e-12 * self.extent))


class PVKernel(BaseModel):
    """Regularized principal-value kernel g(xi) = 2 xi / (xi^2 + epsilon^2)."""
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(gt=0.0)

    @classmethod
    def for_grid(cls, grid: Grid1D, epsilon: Optional[float] = None) -> "PVKernel":
        """Default epsilon is EPSILON_FACTOR offset spacings."""
        if epsilon is None:
            epsilon = EPSILON_FACTOR * grid.spacing
        return cls(epsilon=epsilon)
