import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", deadline=None, max_examples=25)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def natural_image_32():
    """32x32 block-averaged crop of a real photograph, values in [0, 1]."""
    from skimage import data

    cam = data.camera().astype(float) / 255.0
    return cam.reshape(32, 16, 32, 16).mean(axis=(1, 3))


@pytest.fixture(scope="session")
def natural_image_16(natural_image_32):
    return natural_image_32.reshape(16, 2, 16, 2).mean(axis=(1, 3))


def fd_gradient(f, x, step=1e-5):
    """Central finite differences, written independently of the package."""
    g = np.zeros(x.size)
    for j in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[j] += step
        xm[j] -= step
        g[j] = (f(xp) - f(xm)) / (2 * step)
    return g
