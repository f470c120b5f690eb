import numpy as np
import pytest
from hypothesis import given, strategies as st

from multilook.errors import BadShapeError
from multilook.metrics import psnr, ssim


class TestPsnr:
    def test_identical_images_inf(self):
        a = np.random.default_rng(0).uniform(0, 1, (8, 8))
        assert psnr(a, a) == float("inf")

    def test_uniform_difference(self):
        a = np.full((4, 4), 0.5)
        b = np.full((4, 4), 0.6)
        assert psnr(a, b) == pytest.approx(20.0)

    def test_matches_formula_oracle(self):
        rng = np.random.default_rng(1)
        a, b = rng.uniform(0, 1, (2, 12, 12))
        direct = 10 * np.log10(1.0 / np.mean((a - b) ** 2))
        assert psnr(a, b) == pytest.approx(direct, abs=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(BadShapeError):
            psnr(np.zeros((2, 2)), np.zeros((3, 3)))

    @given(st.integers(0, 2**31 - 1))
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.uniform(0, 1, (2, 6, 6))
        assert psnr(a, b) == pytest.approx(psnr(b, a))


def ssim_loop_oracle(a, b, size=11, sigma=1.5, k1=0.01, k2=0.03):
    """Independent sliding-window implementation with explicit loops."""
    r = np.arange(size) - (size - 1) / 2
    w1 = np.exp(-(r**2) / (2 * sigma**2))
    w = np.outer(w1, w1)
    w /= w.sum()
    c1, c2 = k1**2, k2**2
    H, W = a.shape
    vals = []
    for i in range(H - size + 1):
        for j in range(W - size + 1):
            pa = a[i : i + size, j : j + size]
            pb = b[i : i + size, j : j + size]
            mu_a = (w * pa).sum()
            mu_b = (w * pb).sum()
            va = (w * pa * pa).sum() - mu_a**2
            vb = (w * pb * pb).sum() - mu_b**2
            cov = (w * pa * pb).sum() - mu_a * mu_b
            vals.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a**2 + mu_b**2 + c1) * (va + vb + c2))
            )
    return float(np.mean(vals))


class TestSsim:
    def test_identical_images(self):
        a = np.random.default_rng(2).uniform(0, 1, (16, 16))
        assert ssim(a, a) == pytest.approx(1.0)

    def test_inverted_structure_below_one(self):
        a = np.random.default_rng(3).uniform(0, 1, (16, 16))
        assert ssim(a, 1.0 - a) < 1.0

    def test_matches_sliding_window_oracle(self):
        rng = np.random.default_rng(4)
        a, b = rng.uniform(0, 1, (2, 15, 18))
        assert ssim(a, b) == pytest.approx(ssim_loop_oracle(a, b), abs=1e-8)

    def test_minimum_size_enforced(self):
        with pytest.raises(BadShapeError):
            ssim(np.zeros((10, 10)), np.zeros((10, 10)))

    def test_range(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            a, b = rng.uniform(0, 1, (2, 12, 12))
            assert -1.0 <= ssim(a, b) <= 1.0
