import hypothesis
import numpy as np
import pytest

from masklink import LinkConfig, synthetic_image

# channel/codec paths are too slow for hypothesis' default deadline
hypothesis.settings.register_profile("default", deadline=None, max_examples=60)
hypothesis.settings.register_profile("thorough", deadline=None, max_examples=400)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def photo():
    """One 224x224 synthetic photograph shared across tests."""
    return synthetic_image(seed=11)


@pytest.fixture(scope="session")
def photo_small():
    """64x64 variant for tests where full-size codec passes are too slow."""
    return synthetic_image(64, 64, seed=12)


@pytest.fixture(scope="session")
def small_link():
    """64x64 link with 8px patches: 64 patches, fast full round trips."""
    return LinkConfig(height=64, width=64, patch_size=8, latent_dim=16)


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)
