"""Bagged projection: average decoder fits over nested patch partitions.

A projection call partitions the target image into non-overlapping patches
at K scales, fits one independent decoder per patch, reassembles each scale
into a full-image estimate, and averages the K estimates.  Because each
patch fit only ever sees its own patch, a pixel's estimate at scale k
depends exclusively on the patch containing it, which is what makes the K
estimates weakly dependent and worth averaging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import DecoderConfig, fit_decoder
from .errors import BadShapeError, NonFiniteError
from .rng import RngSpec, STREAM_DIP


@dataclass(frozen=True)
class BagSpec:
    """Patch sizes and per-scale decoder iteration budgets."""

    patch_sizes: tuple[tuple[int, int], ...]
    fit_iters: tuple[int, ...]
    lr: float = 1e-3

    def __post_init__(self):
        if len(self.patch_sizes) != len(self.fit_iters) or not self.patch_sizes:
            raise BadShapeError("patch_sizes and fit_iters must be equal-length and non-empty")
        for h, w in self.patch_sizes:
            if h % 8 or w % 8 or h <= 0 or w <= 0:
                raise BadShapeError(f"patch size {h}x{w} must be positive and divisible by 8")
        if any(i < 1 for i in self.fit_iters):
            raise BadShapeError("fit_iters must be positive")

    @property
    def K(self) -> int:
        return len(self.patch_sizes)

    def validate_for(self, height: int, width: int) -> None:
        for h, w in self.patch_sizes:
            if height % h or width % w:
                raise BadShapeError(f"patch {h}x{w} does not tile a {height}x{width} image")

    @classmethod
    def default_for(cls, height: int, width: int, base_iters: int = 50) -> "BagSpec":
        """Three dyadic scales ending at the full image, iteration ratio 2:3:4."""
        full = min(height, width)
        sizes = [s for s in (full // 4, full // 2, full) if s >= 8 and height % s == 0 and width % s == 0]
        if not sizes:
            raise BadShapeError(f"no admissible patch scale for a {height}x{width} image")
        iters = tuple(base_iters * r for r in range(2, 2 + len(sizes)))
        return cls(tuple((s, s) for s in sizes), iters)


def partition(image: np.ndarray, h: int, w: int) -> np.ndarray:
    """Split an (H, W) image into an (H/h, W/w, h, w) grid of patches."""
    image = np.asarray(image)
    H, W = image.shape
    if h <= 0 or w <= 0 or H % h or W % w:
        raise BadShapeError(f"patch {h}x{w} does not divide image {H}x{W}")
    return image.reshape(H // h, h, W // w, w).swapaxes(1, 2)


def reassemble(grid: np.ndarray) -> np.ndarray:
    """Inverse of :func:`partition`."""
    grid = np.asarray(grid)
    if grid.ndim != 4:
        raise BadShapeError("patch grid must be 4-d")
    R, C, h, w = grid.shape
    return grid.swapaxes(1, 2).reshape(R * h, C * w)


@dataclass
class BaggedResult:
    estimate: np.ndarray
    per_scale: list[np.ndarray]
    per_scale_mse: list[float]
    bagged_mse: float


def bagged_project(
    noisy: np.ndarray,
    spec: BagSpec,
    decoder_cfg: DecoderConfig,
    rng: RngSpec,
    outer_iteration: int = 0,
) -> BaggedResult:
    """Project a noisy image onto the decoder range at every scale and average.

    The fit for patch (r, c) of scale k uses the random stream
    (DIP, outer_iteration, k, r, c), so results do not depend on scheduling
    order and perturbing one patch of the input cannot touch any other
    patch's estimate.
    """
    noisy = np.asarray(noisy, float)
    H, W = noisy.shape
    spec.validate_for(H, W)
    per_scale = []
    for k, ((h, w), iters) in enumerate(zip(spec.patch_sizes, spec.fit_iters)):
        grid = partition(noisy, h, w)
        out = np.empty_like(grid)
        cfg = decoder_cfg.for_patch(h, w)
        for r in range(grid.shape[0]):
            for c in range(grid.shape[1]):
                gen = rng.child(STREAM_DIP, outer_iteration, k, r, c).generator()
                try:
                    out[r, c] = fit_decoder(grid[r, c], cfg, iters, lr=spec.lr, rng=gen).output
                except NonFiniteError as exc:
                    raise NonFiniteError(f"scale {k} patch ({r}, {c}): {exc}") from exc
        per_scale.append(reassemble(out))
    estimate = np.mean(per_scale, axis=0)
    per_scale_mse = [float(np.mean((xk - noisy) ** 2)) for xk in per_scale]
    bagged_mse = float(np.mean((estimate - noisy) ** 2))
    # Convexity of squared error: the average estimate can never do worse
    # than the average of the individual errors.
    assert bagged_mse <= np.mean(per_scale_mse) + 1e-12
    return BaggedResult(estimate, per_scale, per_scale_mse, bagged_mse)
