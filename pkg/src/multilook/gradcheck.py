"""Self-contained gradient verification against central finite differences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import DecoderConfig, decoder_loss_grads, init_params, make_latent
from .likelihood import (
    build_column_cache,
    build_covariance,
    grad_nll_fast,
    grad_nll_full,
    grad_nll_real,
    nll_complex,
    nll_real,
)
from .measurement import generate_looks, make_sensing
from .rng import RngSpec, STREAM_HARNESS, STREAM_SCENE, STREAM_SENSING


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.value < self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (tolerance {self.tolerance:.1e})"


def fd_gradient(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of a vector."""
    g = np.zeros_like(x, dtype=float)
    for j in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        g[j] = (f(xp) - f(xm)) / (2.0 * step)
    return g


def _rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def check_complex_gradients(n: int = 12, m: int = 6, L: int = 2, seed: int = 0):
    rng = RngSpec(seed)
    A = make_sensing(m, n, "gaussian-complex", rng.child(STREAM_SENSING))
    x = rng.child(STREAM_SCENE).generator().uniform(0.3, 1.0, n)
    looks = generate_looks(x, A, L, 1.0, 0.0, False, rng)
    state = build_covariance(x, A, looks.sigma_w, looks.sigma_z)
    cache = build_column_cache(A)
    g_full = grad_nll_full(x, looks, state, cache)
    g_fast = grad_nll_fast(x, looks, state, A)
    g_fd = fd_gradient(lambda v: nll_complex(v, looks, A), x)
    return [
        CheckResult("complex gradient (full form) vs finite differences", _rel_l2(g_full, g_fd), 1e-6),
        CheckResult("complex gradient (fast form) vs finite differences", _rel_l2(g_fast, g_fd), 1e-6),
        CheckResult("fast form vs full form (max abs)", float(np.abs(g_fast - g_full).max()), 1e-10),
    ]


def check_real_gradient(n: int = 16, m: int = 8, L: int = 4, seed: int = 0):
    rng = RngSpec(seed)
    A = make_sensing(m, n, "gaussian-real", rng.child(STREAM_SENSING))
    x = rng.child(STREAM_SCENE).generator().uniform(0.3, 1.0, n)
    looks = generate_looks(x, A, L, 1.0, 0.0, True, rng)
    g = grad_nll_real(x, looks, A)
    g_fd = fd_gradient(lambda v: nll_real(v, looks, A), x)
    return [CheckResult("real gradient vs finite differences", _rel_l2(g, g_fd), 1e-6)]


def check_decoder_gradients(seed: int = 0, step: float = 1e-4):
    from .decoder import _forward_trace

    cfg = DecoderConfig(out_h=8, out_w=8, channels=(4, 4, 4, 4), kernel_size=3)
    for attempt in range(64):
        gen = RngSpec(seed, (STREAM_HARNESS, attempt)).generator()
        u = make_latent(cfg, gen)
        params = init_params(cfg, gen)
        # central differences need all ReLU pre-activations away from zero
        _, (trace, _, _, _) = _forward_trace(params, u, cfg)
        if min(np.abs(z).min() for _, _, _, z in trace) > 10 * step:
            break
    target = gen.uniform(0.0, 1.0, (8, 8))
    _, grads = decoder_loss_grads(params, u, target, cfg)
    worst = 0.0
    for t_idx, tensor in enumerate(params.tensors()):
        g = grads.tensors()[t_idx]
        flat = tensor.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            lp, _ = decoder_loss_grads(params, u, target, cfg)
            flat[j] = orig - step
            lm, _ = decoder_loss_grads(params, u, target, cfg)
            flat[j] = orig
            fd = (lp - lm) / (2.0 * step)
            denom = max(abs(fd), abs(gflat[j]), 1e-8)
            worst = max(worst, abs(fd - gflat[j]) / denom)
    return [CheckResult("decoder gradients vs finite differences (worst rel)", worst, 1e-4)]


def run_all(seed: int = 0):
    results = []
    results += check_complex_gradients(seed=seed)
    results += check_real_gradient(seed=seed)
    results += check_decoder_gradients(seed=seed)
    return results
