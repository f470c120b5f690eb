"""Desk-scale empirical checks of the error-scaling behaviour and matrix facts.

The real-valued measurement model is paired with a linear 1-Lipschitz
generator whose parameter count k is exact and whose maximum-likelihood
estimate is tractable, so the dependence of the reconstruction error on the
number of looks L and measurements m can be swept cleanly.  The module also
hosts numeric spot checks of two matrix facts the analysis leans on (an
eigenvalue bound for inverse differences and the singular-value band of
Gaussian matrices) plus the large-L covariance heuristic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadShapeError, SingularMatrixError
from .likelihood import build_covariance, grad_nll_real, nll_real
from .linalg import block_embed
from .measurement import LookSet, SensingMatrix, generate_looks, make_sensing
from .rng import RngSpec, STREAM_HARNESS, STREAM_SCENE, STREAM_SENSING


@dataclass(frozen=True)
class LipschitzGenerator:
    """x = offset + S theta with S a block-constant isometric embedding.

    Column j of S takes the value sqrt(k/n) on its n/k coordinates and 0
    elsewhere, so S^T S = I_k and the map is exactly 1-Lipschitz.  The
    parameter box keeps every output coordinate inside [x_min, x_max].
    """

    n: int
    k: int
    offset: float = 0.625
    x_min: float = 0.25
    x_max: float = 1.0

    def __post_init__(self):
        if self.k < 1 or self.n < 1 or self.n % self.k:
            raise BadShapeError(f"k={self.k} must divide n={self.n}")
        if not (0 < self.x_min <= self.x_max):
            raise BadShapeError("need 0 < x_min <= x_max")
        if not (self.x_min <= self.offset <= self.x_max):
            raise BadShapeError("offset must lie in [x_min, x_max]")

    @property
    def block(self) -> int:
        return self.n // self.k

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(self.block)

    @property
    def r_theta(self) -> float:
        """Radius of the nominal parameter ball, x_max sqrt(n/k)."""
        return self.x_max * np.sqrt(self.n / self.k)

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, float)
        if theta.shape != (self.k,):
            raise BadShapeError(f"theta must have shape ({self.k},)")
        return self.offset + self.scale * np.repeat(theta, self.block)

    def pullback(self, grad_x: np.ndarray) -> np.ndarray:
        """Chain rule: gradient over theta is S^T times the gradient over x."""
        return self.scale * np.add.reduceat(np.asarray(grad_x, float), np.arange(0, self.n, self.block))

    def theta_box(self) -> tuple[float, float]:
        lo = (self.x_min - self.offset) / self.scale
        hi = (self.x_max - self.offset) / self.scale
        return lo, hi

    def random_theta(self, rng: np.random.Generator) -> np.ndarray:
        lo, hi = self.theta_box()
        return rng.uniform(lo, hi, self.k)


@dataclass(frozen=True)
class MleOptions:
    iterations: int = 300
    restarts: int = 5
    init_step: float = 1e-3
    min_step: float = 1e-9
    grow: float = 1.05


def mle_solve_real(
    looks: LookSet,
    A: SensingMatrix,
    gen: LipschitzGenerator,
    opt: MleOptions = MleOptions(),
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Constrained MLE over the generator range by projected gradient descent.

    Multi-start: the first start is theta = 0 (the offset image), further
    starts are uniform in the parameter box.  Steps that increase the
    objective are rejected and the step size halved; accepted steps let it
    grow again.  Returns (theta_hat, x_hat) of the best start.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    lo, hi = gen.theta_box()

    def objective(theta):
        x = gen(theta)
        try:
            return nll_real(x, looks, A), gen.pullback(grad_nll_real(x, looks, A))
        except SingularMatrixError:
            return np.inf, np.zeros_like(theta)

    best = None
    for start in range(max(1, opt.restarts)):
        theta = np.zeros(gen.k) if start == 0 else rng.uniform(lo, hi, gen.k)
        step = opt.init_step
        f, g = objective(theta)
        if not np.isfinite(f):
            theta = np.clip(theta + rng.normal(0, 0.01, gen.k), lo, hi)
            f, g = objective(theta)
        for _ in range(opt.iterations):
            trial = np.clip(theta - step * g, lo, hi)
            f_trial, g_trial = objective(trial)
            if f_trial <= f:
                theta, f, g = trial, f_trial, g_trial
                step *= opt.grow
            else:
                step *= 0.5
                if step < opt.min_step:
                    break
        if best is None or f < best[0]:
            best = (f, theta)
    theta_hat = best[1]
    return theta_hat, gen(theta_hat)


@dataclass(frozen=True)
class SweepConfig:
    n_grid: tuple[int, ...] = (256,)
    m_grid: tuple[int, ...] = (128,)
    k_grid: tuple[int, ...] = (8,)
    L_grid: tuple[int, ...] = (1, 4, 16, 64)
    trials: int = 5
    seed: int = 0
    sigma_w: float = 1.0
    x_min: float = 0.25
    x_max: float = 1.0
    offset: float = 0.625
    mle: MleOptions = field(default_factory=MleOptions)


@dataclass
class SweepCell:
    n: int
    m: int
    k: int
    L: int
    median_mse: float
    q25: float
    q75: float
    failures: int
    slope: float | None = None  # log-log slope of (MSE - plateau) vs L for the cell's group


def _trial_mse(cfg: SweepConfig, n, m, k, L, trial) -> float:
    root = RngSpec(cfg.seed)
    gen = LipschitzGenerator(n, k, cfg.offset, cfg.x_min, cfg.x_max)
    g_scene = root.child(STREAM_SCENE, n, k, trial).generator()
    theta_o = gen.random_theta(g_scene)
    x_o = gen(theta_o)
    A = make_sensing(m, n, "gaussian-real", root.child(STREAM_SENSING, n, m, trial))
    # Look streams depend only on (n, trial): larger-L cells extend the same
    # noise sequence, which couples cells of one group without biasing them.
    looks = generate_looks(
        x_o, A, L, cfg.sigma_w, 0.0, True, root.child(STREAM_HARNESS, n, trial)
    )
    opt_rng = root.child(STREAM_HARNESS, n, m, k, L, trial, 1).generator()
    _, x_hat = mle_solve_real(looks, A, gen, cfg.mle, opt_rng)
    return float(np.mean((x_hat - x_o) ** 2))


def sweep_mse(cfg: SweepConfig) -> list[SweepCell]:
    """Monte-Carlo sweep of the constrained-MLE reconstruction error.

    Produces one cell per (n, m, k, L) grid point with median and quartiles
    over the trials.  Within each (n, m, k) group the log-log slope of
    median MSE versus L is fitted after subtracting the empirical plateau
    (the median MSE at the largest L in the group).
    """
    cells: list[SweepCell] = []
    for n in cfg.n_grid:
        for m in cfg.m_grid:
            if m > n:
                continue
            for k in cfg.k_grid:
                if n % k:
                    continue
                group = []
                for L in sorted(cfg.L_grid):
                    mses, failures = [], 0
                    for trial in range(cfg.trials):
                        try:
                            mses.append(_trial_mse(cfg, n, m, k, L, trial))
                        except SingularMatrixError:
                            failures += 1
                    if mses:
                        q25, med, q75 = np.percentile(mses, [25, 50, 75])
                    else:
                        q25 = med = q75 = float("nan")
                    group.append(SweepCell(n, m, k, L, float(med), float(q25), float(q75), failures))
                _fit_group_slope(group)
                cells.extend(group)
    return cells


def _fit_group_slope(group: list[SweepCell]) -> None:
    if len(group) < 3:
        return
    plateau = group[-1].median_mse
    pts = [(c.L, c.median_mse - plateau) for c in group[:-1] if c.median_mse > plateau]
    if len(pts) < 2:
        return
    logL = np.log([p[0] for p in pts])
    logE = np.log([p[1] for p in pts])
    slope = float(np.polyfit(logL, logE, 1)[0])
    for c in group:
        c.slope = slope


@dataclass
class LemmaReport:
    eigenvalue_bound_passes: int
    eigenvalue_bound_trials: int
    singular_band_passes: int
    singular_band_trials: int
    covariance_rel_error: float

    def summary(self) -> str:
        lines = [
            "matrix fact checks",
            f"  inverse-difference eigenvalue bound: {self.eigenvalue_bound_passes}/{self.eigenvalue_bound_trials} trials within bound",
            f"  Gaussian singular-value band (t=3):  {self.singular_band_passes}/{self.singular_band_trials} trials inside band",
            f"  large-L look covariance vs model:    relative Frobenius error {self.covariance_rel_error:.4f}",
        ]
        return "\n".join(lines)


def eigenvalue_bound_holds(B: np.ndarray, C: np.ndarray, slack: float = 1e-9) -> bool:
    """|lambda(B^-1 - C^-1)| <= sigma_max(B - C) / (sigma_min(B) sigma_min(C))."""
    lam = np.linalg.eigvalsh(np.linalg.inv(B) - np.linalg.inv(C))
    sb = np.linalg.svd(B, compute_uv=False)
    sc = np.linalg.svd(C, compute_uv=False)
    sd = np.linalg.svd(B - C, compute_uv=False)
    bound = sd[0] / (sb[-1] * sc[-1])
    return bool(np.max(np.abs(lam)) <= bound + slack)


def _random_symmetric_invertible(n: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        G = rng.standard_normal((n, n))
        S = (G + G.T) / 2.0
        if np.linalg.svd(S, compute_uv=False)[-1] > 1e-8:
            return S


def lemma_checks(
    trials: int = 200,
    rng: RngSpec = RngSpec(0),
    sv_trials: int = 100,
    cov_looks: int = 10_000,
) -> LemmaReport:
    """Numeric spot checks of the supporting matrix facts."""
    if trials < 1:
        raise BadShapeError("trials must be >= 1")
    gen = rng.child(STREAM_HARNESS, 1).generator()
    eig_pass = 0
    for _ in range(trials):
        B = _random_symmetric_invertible(8, gen)
        C = _random_symmetric_invertible(8, gen)
        eig_pass += eigenvalue_bound_holds(B, C)

    m, n, t = 64, 128, 3.0
    band_lo, band_hi = np.sqrt(n) - np.sqrt(m) - t, np.sqrt(n) + np.sqrt(m) + t
    sv_pass = 0
    for trial in range(sv_trials):
        A = make_sensing(m, n, "gaussian-real", rng.child(STREAM_HARNESS, 2, trial))
        s = np.linalg.svd(A.re, compute_uv=False)
        sv_pass += bool(band_lo <= s[-1] and s[0] <= band_hi)

    mc, nc = 8, 16
    gx = rng.child(STREAM_HARNESS, 3).generator()
    x = gx.uniform(0.25, 1.0, nc)
    A = make_sensing(mc, nc, "gaussian-complex", rng.child(STREAM_HARNESS, 4))
    looks = generate_looks(x, A, cov_looks, 1.0, 0.0, False, rng.child(STREAM_HARNESS, 5))
    Yt = np.concatenate([looks.looks.real, looks.looks.imag], axis=1)
    emp = Yt.T @ Yt / looks.L
    model = block_embed(build_covariance(x, A, 1.0, 0.0, compute_inverse=False).B)
    rel = float(np.linalg.norm(emp - model) / np.linalg.norm(model))

    return LemmaReport(eig_pass, trials, sv_pass, sv_trials, rel)
