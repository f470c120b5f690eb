"""Untrained convolutional decoder used as the image-model projector.

The generator maps a fixed random latent tensor through three upsampling
blocks (bilinear x2 upsample -> conv -> ReLU) and an output block
(conv -> sigmoid) to a single-channel patch in (0, 1).  Nothing is ever
pre-trained: projecting a noisy patch means fitting the weights to that
patch with Adam from a fresh random initialization.

Forward and reverse passes are written directly in numpy (im2col
convolutions, dense interpolation operators), which keeps the whole fit in
double precision and bit-reproducible for a given random stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BadShapeError, NonFiniteError


@dataclass(frozen=True)
class DecoderConfig:
    """Architecture of the 4-block decoder for one output patch.

    ``channels[i]`` is the channel count of the tensor entering block i, so
    the latent input has ``channels[0]`` channels and the output block maps
    ``channels[3]`` channels to a single grayscale channel.  The latent
    spatial size is (out_h/8, out_w/8) because of the three x2 upsamplings.
    """

    out_h: int
    out_w: int
    channels: tuple[int, int, int, int] = (128, 128, 128, 128)
    kernel_size: int = 3
    dtype: str = "float64"

    def __post_init__(self):
        if self.out_h % 8 or self.out_w % 8 or self.out_h <= 0 or self.out_w <= 0:
            raise BadShapeError(f"patch size {self.out_h}x{self.out_w} must be divisible by 8")
        if len(self.channels) != 4 or any(c < 1 for c in self.channels):
            raise BadShapeError("channels must be four positive counts")
        if self.kernel_size not in (1, 3):
            raise BadShapeError("kernel size must be 1 or 3")
        if self.dtype not in ("float32", "float64"):
            raise BadShapeError("dtype must be float32 or float64")

    @property
    def in_channels(self) -> int:
        return self.channels[0]

    @property
    def latent_shape(self) -> tuple[int, int, int]:
        return (self.channels[0], self.out_h // 8, self.out_w // 8)

    def conv_shapes(self) -> list[tuple[int, int]]:
        """(in_channels, out_channels) of the four convolutions."""
        c = self.channels
        return [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], 1)]

    def for_patch(self, out_h: int, out_w: int) -> "DecoderConfig":
        return replace(self, out_h=out_h, out_w=out_w)


@dataclass
class DecoderParams:
    """Kernels (C_out, C_in, k, k) and biases (C_out,) of the four convolutions."""

    kernels: list[np.ndarray]
    biases: list[np.ndarray]

    def tensors(self) -> list[np.ndarray]:
        return list(self.kernels) + list(self.biases)

    def param_count(self) -> int:
        return sum(t.size for t in self.tensors())


def param_count(config: DecoderConfig) -> int:
    """Analytic parameter count k implied by the configuration."""
    k = config.kernel_size
    return sum(co * ci * k * k + co for ci, co in config.conv_shapes())


def init_params(config: DecoderConfig, rng: np.random.Generator) -> DecoderParams:
    """He-style uniform init: kernels ~ U(+-sqrt(6/fan_in)), biases zero."""
    dt = np.dtype(config.dtype)
    k = config.kernel_size
    kernels, biases = [], []
    for ci, co in config.conv_shapes():
        bound = np.sqrt(6.0 / (ci * k * k))
        kernels.append(rng.uniform(-bound, bound, size=(co, ci, k, k)).astype(dt))
        biases.append(np.zeros(co, dtype=dt))
    return DecoderParams(kernels, biases)


def make_latent(config: DecoderConfig, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(config.latent_shape).astype(np.dtype(config.dtype))


_INTERP_CACHE: dict[int, np.ndarray] = {}


def _interp_matrix(n_in: int) -> np.ndarray:
    """Dense (2n x n) bilinear x2 interpolation operator along one axis.

    Output sample centers cover the input extent uniformly (no corner
    alignment); edges clamp, so constants are reproduced exactly.
    """
    P = _INTERP_CACHE.get(n_in)
    if P is None:
        n_out = 2 * n_in
        src = (np.arange(n_out) + 0.5) / 2.0 - 0.5
        i0f = np.floor(src)
        t = src - i0f
        i0 = np.clip(i0f.astype(int), 0, n_in - 1)
        i1 = np.clip(i0f.astype(int) + 1, 0, n_in - 1)
        P = np.zeros((n_out, n_in))
        P[np.arange(n_out), i0] += 1.0 - t
        P[np.arange(n_out), i1] += t
        _INTERP_CACHE[n_in] = P
    return P


def bilinear_upsample2x(x: np.ndarray) -> np.ndarray:
    """Double the spatial size of a (C, H, W) tensor by bilinear interpolation."""
    Ph = _interp_matrix(x.shape[1]).astype(x.dtype)
    Pw = _interp_matrix(x.shape[2]).astype(x.dtype)
    return np.einsum("oh,chw,pw->cop", Ph, x, Pw, optimize=True)


def _bilinear_backward(grad: np.ndarray, in_h: int, in_w: int) -> np.ndarray:
    Ph = _interp_matrix(in_h).astype(grad.dtype)
    Pw = _interp_matrix(in_w).astype(grad.dtype)
    return np.einsum("oh,cop,pw->chw", Ph, grad, Pw, optimize=True)


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """(C, H, W) -> (C*k*k, H*W) patch matrix for a stride-1 same convolution."""
    C, H, W = x.shape
    if k == 1:
        return x.reshape(C, H * W)
    pad = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((C, k, k, H, W), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xp[:, i : i + H, j : j + W]
    return cols.reshape(C * k * k, H * W)


def _col2im(dcols: np.ndarray, C: int, H: int, W: int, k: int) -> np.ndarray:
    if k == 1:
        return dcols.reshape(C, H, W)
    pad = (k - 1) // 2
    dxp = np.zeros((C, H + 2 * pad, W + 2 * pad), dtype=dcols.dtype)
    d = dcols.reshape(C, k, k, H, W)
    for i in range(k):
        for j in range(k):
            dxp[:, i : i + H, j : j + W] += d[:, i, j]
    return dxp[:, pad : pad + H, pad : pad + W]


def _conv_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray):
    co, ci, k, _ = kernel.shape
    C, H, W = x.shape
    if C != ci:
        raise BadShapeError(f"conv expects {ci} input channels, got {C}")
    cols = _im2col(x, k)
    out = kernel.reshape(co, ci * k * k) @ cols + bias[:, None]
    return out.reshape(co, H, W), cols


def _conv_backward(dout: np.ndarray, cols: np.ndarray, kernel: np.ndarray, x_shape):
    co, ci, k, _ = kernel.shape
    C, H, W = x_shape
    dflat = dout.reshape(co, H * W)
    dkernel = (dflat @ cols.T).reshape(co, ci, k, k)
    dbias = dflat.sum(axis=1)
    dcols = kernel.reshape(co, ci * k * k).T @ dflat
    dx = _col2im(dcols, C, H, W, k)
    return dx, dkernel, dbias


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_trace(params: DecoderParams, u: np.ndarray, config: DecoderConfig):
    """Run the forward pass keeping everything the reverse pass needs."""
    if u.shape != config.latent_shape:
        raise BadShapeError(f"latent has shape {u.shape}, expected {config.latent_shape}")
    h = u
    trace = []
    for i in range(3):
        up = bilinear_upsample2x(h)
        z, cols = _conv_forward(up, params.kernels[i], params.biases[i])
        trace.append((h.shape, up.shape, cols, z))
        h = np.maximum(z, 0.0)
    z3, cols3 = _conv_forward(h, params.kernels[3], params.biases[3])
    out = _sigmoid(z3)
    return out, (trace, cols3, h.shape, out)


def decoder_forward(params: DecoderParams, u: np.ndarray, config: DecoderConfig) -> np.ndarray:
    """Decode the latent tensor to an (out_h, out_w) patch with values in (0, 1)."""
    out, _ = _forward_trace(params, u, config)
    return out[0]


def decoder_loss_grads(
    params: DecoderParams, u: np.ndarray, target: np.ndarray, config: DecoderConfig
):
    """Mean-squared-error loss against a target patch, with exact parameter gradients."""
    target = np.asarray(target, dtype=np.dtype(config.dtype))
    if target.shape != (config.out_h, config.out_w):
        raise BadShapeError(f"target has shape {target.shape}, expected {(config.out_h, config.out_w)}")
    out, (trace, cols3, h3_shape, full) = _forward_trace(params, u, config)
    diff = out[0] - target
    loss = float(np.mean(diff**2))
    dkernels = [None] * 4
    dbiases = [None] * 4
    dout = (2.0 / diff.size) * diff[None, :, :]
    dz3 = dout * full * (1.0 - full)
    dh, dkernels[3], dbiases[3] = _conv_backward(dz3, cols3, params.kernels[3], h3_shape)
    for i in (2, 1, 0):
        h_shape, up_shape, cols, z = trace[i]
        dz = dh * (z > 0)  # ReLU subgradient at 0 is taken as 0
        dup, dkernels[i], dbiases[i] = _conv_backward(dz, cols, params.kernels[i], up_shape)
        dh = _bilinear_backward(dup, h_shape[1], h_shape[2])
    return loss, DecoderParams(dkernels, dbiases)


@dataclass
class AdamState:
    """Adam moments for one list of tensors."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    @classmethod
    def for_params(cls, params: DecoderParams, lr: float = 1e-3) -> "AdamState":
        zeros = [np.zeros_like(t) for t in params.tensors()]
        return cls(m=zeros, v=[np.zeros_like(t) for t in params.tensors()], lr=lr)

    def update(self, params: DecoderParams, grads: DecoderParams) -> None:
        """Apply one bias-corrected Adam step in place."""
        self.step += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.step
        c2 = 1.0 - b2**self.step
        for i, (t, g) in enumerate(zip(params.tensors(), grads.tensors())):
            if self.weight_decay:
                g = g + self.weight_decay * t
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            t -= self.lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps)


@dataclass
class FitResult:
    params: DecoderParams
    output: np.ndarray
    losses: list[float] = field(default_factory=list)


def fit_decoder(
    target: np.ndarray,
    config: DecoderConfig,
    iters: int,
    lr: float = 1e-3,
    rng: np.random.Generator | None = None,
) -> FitResult:
    """Fit a freshly initialized decoder to a target patch with Adam.

    The latent tensor is drawn first and stays fixed for the whole fit; the
    weights are then initialized and optimized for ``iters`` steps.  Raises
    NonFiniteError (with the iteration index) if the loss leaves the finite
    range.
    """
    if iters < 1:
        raise BadShapeError("iters must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    u = make_latent(config, rng)
    params = init_params(config, rng)
    adam = AdamState.for_params(params, lr=lr)
    losses = []
    for it in range(iters):
        loss, grads = decoder_loss_grads(params, u, target, config)
        if not np.isfinite(loss):
            raise NonFiniteError(f"decoder fit diverged at iteration {it}")
        losses.append(loss)
        adam.update(params, grads)
    output = decoder_forward(params, u, config)
    return FitResult(params, output, losses)
