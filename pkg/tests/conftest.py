import math

import numpy as np
import pytest

from app.models.field_models import Density2D
from app.models.grid_models import Grid1D
from app.models.state_models import StateSpec


@pytest.fixture
def grid():
    return Grid1D.symmetric(8.0, 129)


@pytest.fixture
def fine_grid():
    return Grid1D.default()


@pytest.fixture
def vacuum():
    return StateSpec(kind="vacuum")


@pytest.fixture
def gaussian_density(grid):
    x = grid.points[:, np.newaxis]
    y = grid.points[np.newaxis, :]
    values = np.exp(-(x * x + y * y) / 2.0) / (2.0 * math.pi)
    return Density2D(grid, grid, values, classical=True)


@pytest.fixture
def artifact_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path
