"""Forward model: sensing matrices, multilook speckle generation, initialization.

Each look observes the same static scene through a fixed sensing matrix A,

    y_l = A X w_l + z_l,       X = diag(x),

where w_l is fully-developed (multiplicative) speckle and z_l additive
sensor noise.  In complex mode both noises are circular complex Gaussians
whose real and imaginary parts each have variance sigma^2, so that the
stacked vector [Re y; Im y] has covariance exactly equal to the block
covariance used by the likelihood module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadShapeError
from .rng import RngSpec, STREAM_LOOK

ENSEMBLES = ("gaussian-real", "gaussian-complex", "haar-rows", "haar-rows-real")


@dataclass(frozen=True)
class SceneImage:
    """Real-valued image with pixels in [0, 1], stored row-major as (H, W)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, float)
        if p.ndim != 2 or p.size == 0:
            raise BadShapeError(f"scene must be a non-empty 2-d array, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise BadShapeError("scene contains non-finite pixels")
        if p.min() < 0.0 or p.max() > 1.0:
            raise BadShapeError(f"pixels must lie in [0, 1], got range [{p.min()}, {p.max()}]")
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def n(self) -> int:
        return self.pixels.size

    def flat(self) -> np.ndarray:
        return self.pixels.reshape(-1)


@dataclass(frozen=True)
class SensingMatrix:
    """m x n complex sensing matrix with its generating ensemble tag."""

    matrix: np.ndarray
    ensemble: str = "unspecified"

    def __post_init__(self):
        A = np.asarray(self.matrix)
        if A.ndim != 2:
            raise BadShapeError("sensing matrix must be 2-d")
        object.__setattr__(self, "matrix", np.ascontiguousarray(A, dtype=complex))

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def re(self) -> np.ndarray:
        return self.matrix.real

    @property
    def im(self) -> np.ndarray:
        return self.matrix.imag

    def is_real(self) -> bool:
        return not np.any(self.matrix.imag)


@dataclass(frozen=True)
class LookSet:
    """L measurement vectors plus the noise levels that generated them."""

    looks: np.ndarray  # (L, m), complex128
    sigma_w: float
    sigma_z: float
    real_valued: bool = False

    def __post_init__(self):
        Y = np.asarray(self.looks)
        if Y.ndim != 2 or Y.shape[0] < 1:
            raise BadShapeError("looks must be a (L, m) array with L >= 1")
        if not np.all(np.isfinite(Y.real)) or not np.all(np.isfinite(Y.imag)):
            raise BadShapeError("looks contain non-finite entries")
        if self.sigma_w < 0 or self.sigma_z < 0:
            raise BadShapeError("noise levels must be non-negative")
        object.__setattr__(self, "looks", np.ascontiguousarray(Y, dtype=complex))

    @property
    def L(self) -> int:
        return self.looks.shape[0]

    @property
    def m(self) -> int:
        return self.looks.shape[1]


def _haar_unitary_rows(m: int, n: int, rng: np.random.Generator, real: bool) -> np.ndarray:
    """First m rows of a Haar-distributed n x n unitary (or orthogonal) matrix."""
    if real:
        Z = rng.standard_normal((n, n))
    else:
        Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    # Phase correction makes the QR map measure preserving.
    Q = Q * (d / np.abs(d))
    return Q[:m]


def make_sensing(m: int, n: int, ensemble: str, rng: RngSpec) -> SensingMatrix:
    """Draw an m x n sensing matrix from one of the supported ensembles.

    gaussian-real / gaussian-complex have iid standard-normal entries (per
    part); haar-rows / haar-rows-real take the first m rows of a Haar
    unitary / orthogonal matrix, so the rows are exactly orthonormal.
    """
    if not (1 <= m <= n):
        raise BadShapeError(f"need 1 <= m <= n, got m={m}, n={n}")
    if ensemble not in ENSEMBLES:
        raise BadShapeError(f"unknown ensemble {ensemble!r}, expected one of {ENSEMBLES}")
    gen = rng.generator()
    if ensemble == "gaussian-real":
        A = gen.standard_normal((m, n)).astype(complex)
    elif ensemble == "gaussian-complex":
        A = gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))
    else:
        A = _haar_unitary_rows(m, n, gen, real=ensemble.endswith("-real"))
    return SensingMatrix(A, ensemble)


def generate_looks(
    x,
    A: SensingMatrix,
    L: int,
    sigma_w: float,
    sigma_z: float,
    real_valued: bool,
    rng: RngSpec,
) -> LookSet:
    """Simulate L independent looks y_l = A X w_l + z_l of a scene.

    Complex mode draws w and z circular complex Gaussian with real and
    imaginary parts each N(0, sigma^2); real mode draws plain N(0, sigma^2)
    vectors and requires a real sensing matrix.  Look l uses the child
    streams (LOOK, l, 0) for w and (LOOK, l, 1) for z, so looks are
    mutually independent and individually reproducible.
    """
    xf = x.flat() if isinstance(x, SceneImage) else np.asarray(x, float).reshape(-1)
    if A.n != xf.size:
        raise BadShapeError(f"sensing matrix has n={A.n} but scene has {xf.size} pixels")
    if L < 1:
        raise BadShapeError("need at least one look")
    if real_valued and not A.is_real():
        raise BadShapeError("real-valued looks require a real sensing matrix")
    looks = np.empty((L, A.m), dtype=complex)
    for ell in range(L):
        gw = rng.child(STREAM_LOOK, ell, 0).generator()
        gz = rng.child(STREAM_LOOK, ell, 1).generator()
        if real_valued:
            w = gw.standard_normal(A.n) * sigma_w
            z = gz.standard_normal(A.m) * sigma_z
        else:
            w = (gw.standard_normal(A.n) + 1j * gw.standard_normal(A.n)) * sigma_w
            z = (gz.standard_normal(A.m) + 1j * gz.standard_normal(A.m)) * sigma_z
        looks[ell] = A.matrix @ (xf * w) + z
    return LookSet(looks, float(sigma_w), float(sigma_z), real_valued)


def stack_real(y: np.ndarray) -> np.ndarray:
    """Stack a complex vector as [Re y; Im y]."""
    y = np.asarray(y)
    return np.concatenate([y.real, y.imag])


def init_estimate(A: SensingMatrix, looks: LookSet, height: int, width: int) -> SceneImage:
    """Initialization x0 = clip((1/L) sum_l |conj(A)^T y_l|, 0, 1)."""
    if A.m != looks.m:
        raise BadShapeError(f"sensing matrix has m={A.m} but looks have m={looks.m}")
    if height * width != A.n:
        raise BadShapeError(f"scene shape {height}x{width} does not match n={A.n}")
    back = np.abs(looks.looks @ A.matrix.conj())  # (L, n); row l is |conj(A)^T y_l|
    x0 = np.clip(back.mean(axis=0), 0.0, 1.0)
    return SceneImage(x0.reshape(height, width))
