"""Outer reconstruction loop: likelihood descent with bagged decoder projection.

Each iteration refreshes the covariance inverse (exactly on the first
iteration or after a large move, otherwise with warm-started Newton-Schulz
steps), takes one gradient step on the complex negative log-likelihood,
clamps to [0, 1], and projects through the bagged decoder.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .bagging import BagSpec, bagged_project
from .decoder import DecoderConfig
from .errors import BadShapeError, DivergedError
from .likelihood import (
    CovarianceState,
    grad_nll_fast,
    nll_complex,
    refresh_inverse,
)
from .measurement import LookSet, SceneImage, SensingMatrix, init_estimate
from . import metrics
from .rng import RngSpec


def default_step_size(L: int) -> float:
    """Likelihood step size: 0.001 up to 8 looks, 0.01 beyond."""
    return 0.001 if L <= 8 else 0.01


@dataclass(frozen=True)
class PgdConfig:
    height: int
    width: int
    iterations: int
    bag: BagSpec
    decoder: DecoderConfig
    seed: int = 0
    step_size: float | None = None  # None resolves via default_step_size(L)
    delta_x: float = 0.12
    ns_steps: int = 1
    force_exact: bool = False
    ground_truth: np.ndarray | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise BadShapeError("iterations must be >= 1")
        if self.step_size is not None and self.step_size < 0:
            raise BadShapeError("step_size must be non-negative")
        if self.delta_x <= 0:
            raise BadShapeError("delta_x must be positive")
        if self.ns_steps < 1:
            raise BadShapeError("ns_steps must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    inverse_mode: str
    nll: float
    dx_inf: float
    psnr: float | None
    ssim: float | None
    seconds: float


Trajectory = list[IterationRecord]


def pgd_step(
    x_prev: np.ndarray,
    state: CovarianceState | None,
    looks: LookSet,
    A: SensingMatrix,
    cfg: PgdConfig,
    t: int,
) -> tuple[np.ndarray, CovarianceState, IterationRecord]:
    """One loop body: refresh inverse, gradient step, clamp, project."""
    t0 = time.perf_counter()
    mu = cfg.step_size if cfg.step_size is not None else default_step_size(looks.L)
    if state is None or t == 1:
        dx_inf = float("inf")
    else:
        dx_inf = float(np.abs(x_prev - state.x).max())
    delta_gate = float("inf") if cfg.force_exact else dx_inf
    try:
        state = refresh_inverse(
            state, x_prev, A, looks.sigma_w, looks.sigma_z, delta_gate, cfg.delta_x, cfg.ns_steps
        )
    except DivergedError:
        # One forced exact rebuild; a failure here propagates.
        state = refresh_inverse(
            state, x_prev, A, looks.sigma_w, looks.sigma_z, float("inf"), cfg.delta_x, cfg.ns_steps
        )
    grad = grad_nll_fast(x_prev, looks, state, A)
    x_grad = np.clip(x_prev - mu * grad, 0.0, 1.0)
    projected = bagged_project(
        x_grad.reshape(cfg.height, cfg.width),
        cfg.bag,
        cfg.decoder,
        RngSpec(cfg.seed),
        outer_iteration=t,
    )
    x_next = projected.estimate.reshape(-1)
    nll = nll_complex(x_next, looks, A)
    psnr = ssim = None
    if cfg.ground_truth is not None:
        truth = np.asarray(cfg.ground_truth, float).reshape(cfg.height, cfg.width)
        est = x_next.reshape(cfg.height, cfg.width)
        psnr = metrics.psnr(est, truth)
        if min(cfg.height, cfg.width) >= 11:
            ssim = metrics.ssim(est, truth)
    record = IterationRecord(
        iteration=t,
        inverse_mode=state.inverse_mode,
        nll=nll,
        dx_inf=dx_inf,
        psnr=psnr,
        ssim=ssim,
        seconds=time.perf_counter() - t0,
    )
    return x_next, state, record


def pgd_run(
    looks: LookSet,
    A: SensingMatrix,
    cfg: PgdConfig,
    on_iteration=None,
) -> tuple[SceneImage, Trajectory]:
    """Run the full reconstruction; returns the final image and trajectory.

    ``on_iteration(t, image)`` is called after every iteration when given
    (used for checkpointing).
    """
    if cfg.height * cfg.width != A.n:
        raise BadShapeError(f"config shape {cfg.height}x{cfg.width} does not match n={A.n}")
    x = init_estimate(A, looks, cfg.height, cfg.width).flat()
    state: CovarianceState | None = None
    trajectory: Trajectory = []
    for t in range(1, cfg.iterations + 1):
        x, state, record = pgd_step(x, state, looks, A, cfg, t)
        trajectory.append(record)
        if on_iteration is not None:
            on_iteration(t, x.reshape(cfg.height, cfg.width))
    return SceneImage(x.reshape(cfg.height, cfg.width)), trajectory
