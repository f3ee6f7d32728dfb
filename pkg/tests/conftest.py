from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from lfdeblur.core.config import ModelConfig
from lfdeblur.core.lightfield import LightField
from lfdeblur.utils.image_utils import save_light_field


def make_shifted_copies(base: np.ndarray, U: int, V: int, d: int) -> np.ndarray:
    """Light field whose view (u, v) is `base` rolled by v·d along x and u·d along y."""
    return np.stack([
        np.stack([np.roll(base, (v * d, u * d), axis=(0, 1)) for v in range(V)])
        for u in range(U)
    ])


def is_shifted_copies(data: np.ndarray, d: int) -> bool:
    """True if every view equals the (0, 0) view rolled by (v·d, u·d)."""
    U, V = data.shape[:2]
    return all(
        np.array_equal(data[u, v], np.roll(data[0, 0], (v * d, u * d), axis=(0, 1)))
        for u in range(U)
        for v in range(V)
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def random_lf(rng) -> Callable[..., LightField]:
    """Factory for random image-valued light fields."""
    def make(U: int = 3, V: int = 3, X: int = 8, Y: int = 8, C: int = 3) -> LightField:
        return LightField(rng.random((U, V, X, Y, C)))
    return make


@pytest.fixture
def shifted_lf(rng) -> Callable[..., LightField]:
    """Factory for shifted-copies light fields with integer disparity d."""
    def make(U: int = 3, V: int = 3, X: int = 12, Y: int = 12, d: int = 1) -> LightField:
        return LightField(make_shifted_copies(rng.random((X, Y, 3)), U, V, d))
    return make


@pytest.fixture
def write_lf(tmp_path) -> Callable[[LightField, str], Path]:
    """Save a light field as a view directory under tmp_path and return its path."""
    def write(lf: LightField, name: str = "scene") -> Path:
        return save_light_field(lf, tmp_path / name)
    return write


@pytest.fixture
def tiny_config() -> ModelConfig:
    return ModelConfig(angular_u=2, angular_v=2, channels=4, num_blocks=1)
