from pathlib import Path

import numpy as np
import pytest

from rriqa.color import ColorImage, ColorSpace, load_image
from rriqa.mggd import MggdParams, normalized_params

DATA_DIR = Path(__file__).parent / "data"

NATURAL_NAMES = ["natural_face.png", "natural_fur.png", "natural_table.png"]


def random_spd(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((3, 3))
    return scale * (a @ a.T + 0.3 * np.eye(3))


def random_params(rng: np.random.Generator,
                  beta_range=(0.3, 2.0),
                  scale_range=(0.2, 2.0)) -> MggdParams:
    beta = rng.uniform(*beta_range)
    sigma = random_spd(rng)
    sigma /= np.linalg.det(sigma) ** (1.0 / 3.0)
    return MggdParams(beta=beta, sigma=sigma, scale=rng.uniform(*scale_range))


def make_params(beta: float, full_sigma) -> MggdParams:
    return normalized_params(beta, np.asarray(full_sigma, dtype=float))


@pytest.fixture(scope="session")
def natural_images() -> list[ColorImage]:
    return [load_image(DATA_DIR / name) for name in NATURAL_NAMES]


@pytest.fixture(scope="session")
def natural_image(natural_images) -> ColorImage:
    return natural_images[0]


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240801)
