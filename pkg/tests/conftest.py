import numpy as np
import pytest

from wmx.harness import synthetic_corpus
from wmx.image import Image


@pytest.fixture(scope="session")
def small_corpus():
    """Six structured 128px images; enough texture for every method."""
    return synthetic_corpus(count=6, size=128, seed=3)


@pytest.fixture(scope="session")
def acceptance_corpus():
    """The bundled 20-image 256px corpus the acceptance criteria run on."""
    return synthetic_corpus(count=20, size=256, seed=0)


@pytest.fixture()
def cover():
    rng = np.random.default_rng(11)
    return Image(np.rint(rng.uniform(0.0, 255.0, (128, 128, 3))))


@pytest.fixture()
def flat_cover():
    return Image(np.full((64, 64, 3), 100.0))
