"""Multilook negative log-likelihoods, gradients, and inverse maintenance.

The complex-mode objective for looks y_1..y_L is

    f(x) = log det B(x) + (1/L) sum_l  yt_l^T B(x)^{-1} yt_l,

with yt_l = [Re y_l; Im y_l] and B(x) the symmetric 2m x 2m embedding of
the Hermitian covariance W(x) = sigma_z^2 I_m + sigma_w^2 A X^2 A^H.  All
heavy work happens on the m x m complex representative W; identities

    log det B = 2 log det W,      yt^T B^{-1} yt = Re(y^H W^{-1} y)

keep the two views consistent (both are exercised against dense oracles in
the tests).  The real-mode objective replaces W by the real covariance
C(x) = sigma_z^2 I_m + sigma_w^2 A X^2 A^T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import BadShapeError, DivergedError, SingularMatrixError
from .linalg import BlockHermitian, block_embed, exact_inverse_block
from .measurement import LookSet, SceneImage, SensingMatrix, stack_real


@dataclass(frozen=True)
class CovarianceState:
    """Covariance B(x) and its (exact or refined) inverse at a snapshot x."""

    x: np.ndarray
    B: BlockHermitian
    Binv: BlockHermitian
    inverse_mode: str  # "exact" | "ns-approx"
    ns_steps_used: int = 0


@dataclass(frozen=True)
class ColumnCache:
    """Stacked real forms of the sensing-matrix columns.

    a_plus[:, j]  = [Re a_j; Im a_j]
    a_minus[:, j] = [-Im a_j; Re a_j]
    """

    a_plus: np.ndarray
    a_minus: np.ndarray


def build_column_cache(A: SensingMatrix) -> ColumnCache:
    re, im = A.matrix.real, A.matrix.imag
    return ColumnCache(
        a_plus=np.concatenate([re, im], axis=0),
        a_minus=np.concatenate([-im, re], axis=0),
    )


def _x_flat(x) -> np.ndarray:
    return x.flat() if isinstance(x, SceneImage) else np.asarray(x, float).reshape(-1)


def covariance_complex(x, A: SensingMatrix, sigma_w: float, sigma_z: float) -> np.ndarray:
    """Hermitian representative W(x) = sigma_z^2 I + sigma_w^2 A X^2 A^H."""
    xf = _x_flat(x)
    if xf.size != A.n:
        raise BadShapeError(f"x has {xf.size} entries but A has n={A.n}")
    if sigma_w <= 0:
        raise BadShapeError("sigma_w must be positive")
    W = (sigma_w**2) * ((A.matrix * xf**2) @ A.matrix.conj().T)
    W[np.diag_indices_from(W)] += sigma_z**2
    return W


def build_covariance(
    x, A: SensingMatrix, sigma_w: float, sigma_z: float, compute_inverse: bool = True
) -> CovarianceState:
    """Assemble B(x) as a BlockHermitian, with an exact inverse by default."""
    W = covariance_complex(x, A, sigma_w, sigma_z)
    B = BlockHermitian.from_complex(W)
    if compute_inverse:
        Binv = exact_inverse_block(B)
        return CovarianceState(_x_flat(x).copy(), B, Binv, "exact")
    return CovarianceState(_x_flat(x).copy(), B, B, "none")


def _chol_logdet(W: np.ndarray):
    """Cholesky factor and log det of a Hermitian positive definite matrix."""
    try:
        cf = sla.cho_factor(W, lower=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularMatrixError(f"covariance is not positive definite: {exc}") from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(cf[0]).real)))
    return cf, logdet


def nll_complex(x, looks: LookSet, A: SensingMatrix) -> float:
    """Exact complex-mode negative log-likelihood (up to its usual constant)."""
    W = covariance_complex(x, A, looks.sigma_w, looks.sigma_z)
    cf, logdet_W = _chol_logdet(W)
    solved = sla.cho_solve(cf, looks.looks.T)  # (m, L)
    quad = np.einsum("lm,ml->l", looks.looks.conj(), solved).real
    return 2.0 * logdet_W + float(quad.mean())


def grad_nll_full(x, looks: LookSet, state: CovarianceState, cache: ColumnCache) -> np.ndarray:
    """Gradient evaluated verbatim from the 2m-dimensional stacked formula.

    d f / d x_j = 2 x_j s_w^2 (ap_j^T Binv ap_j + am_j^T Binv am_j)
                  - (2 x_j s_w^2 / L) sum_l [(ap_j^T Binv yt_l)^2 + (am_j^T Binv yt_l)^2]

    with ap/am the stacked column forms and Binv the inverse supplied by the
    caller (exact or Newton-Schulz refined).
    """
    xf = _x_flat(x)
    if cache.a_plus.shape[1] != xf.size:
        raise BadShapeError("column cache does not match x")
    if looks.m * 2 != cache.a_plus.shape[0]:
        raise BadShapeError("column cache does not match looks")
    Binv = block_embed(state.Binv)
    sw2 = looks.sigma_w**2
    Pp = Binv @ cache.a_plus
    Pm = Binv @ cache.a_minus
    diag_term = np.einsum("ij,ij->j", cache.a_plus, Pp) + np.einsum("ij,ij->j", cache.a_minus, Pm)
    Yt = np.concatenate([looks.looks.real, looks.looks.imag], axis=1)  # (L, 2m)
    Q = Yt @ Binv.T  # row l is (Binv yt_l)^T
    Sp = Q @ cache.a_plus  # (L, n): entry (l, j) = ap_j^T Binv yt_l
    Sm = Q @ cache.a_minus
    look_term = (Sp**2 + Sm**2).mean(axis=0)
    return 2.0 * xf * sw2 * diag_term - 2.0 * xf * sw2 * look_term


def grad_nll_fast(x, looks: LookSet, state: CovarianceState, A: SensingMatrix) -> np.ndarray:
    """Simplified gradient using the complex representative of the inverse.

    d f / d x_j = 4 x_j s_w^2 Re(conj(a_j)^T M a_j)
                  - (2 x_j s_w^2 / L) sum_l |conj(a_j)^T M y_l|^2,

    with M = Winv the supplied inverse.  Identical to grad_nll_full for the
    same inverse.
    """
    xf = _x_flat(x)
    if A.n != xf.size or A.m != looks.m:
        raise BadShapeError("shapes of x, A, looks do not agree")
    M = state.Binv.as_complex()
    sw2 = looks.sigma_w**2
    MA = M @ A.matrix  # (m, n)
    diag_term = np.einsum("ij,ij->j", A.matrix.conj(), MA).real
    V = looks.looks @ M.T  # row l is (M y_l)^T
    S = V @ A.matrix.conj()  # (L, n): entry (l, j) = conj(a_j)^T (M y_l)
    look_term = (np.abs(S) ** 2).mean(axis=0)
    return 4.0 * xf * sw2 * diag_term - 2.0 * xf * sw2 * look_term


def covariance_real(x, A: SensingMatrix, sigma_w: float, sigma_z: float) -> np.ndarray:
    xf = _x_flat(x)
    if xf.size != A.n:
        raise BadShapeError(f"x has {xf.size} entries but A has n={A.n}")
    Ar = A.matrix.real
    C = (sigma_w**2) * ((Ar * xf**2) @ Ar.T)
    C[np.diag_indices_from(C)] += sigma_z**2
    return C


def nll_real(x, looks: LookSet, A: SensingMatrix) -> float:
    """Real-mode negative log-likelihood for real looks and real A."""
    if not looks.real_valued or not A.is_real():
        raise BadShapeError("nll_real requires a real-valued LookSet and SensingMatrix")
    C = covariance_real(x, A, looks.sigma_w, looks.sigma_z)
    cf, logdet = _chol_logdet(C)
    Y = looks.looks.real
    solved = sla.cho_solve(cf, Y.T)
    quad = np.einsum("lm,ml->l", Y, solved)
    return logdet + float(quad.mean())


def grad_nll_real(x, looks: LookSet, A: SensingMatrix) -> np.ndarray:
    """Gradient of the real-mode likelihood.

    d f / d x_j = 2 x_j s_w^2 [a_j^T C^{-1} a_j - (1/L) sum_l (a_j^T C^{-1} y_l)^2]
    """
    if not looks.real_valued or not A.is_real():
        raise BadShapeError("grad_nll_real requires a real-valued LookSet and SensingMatrix")
    xf = _x_flat(x)
    Ar = A.matrix.real
    C = covariance_real(x, A, looks.sigma_w, looks.sigma_z)
    cf, _ = _chol_logdet(C)
    Z = sla.cho_solve(cf, Ar)  # C^{-1} A, (m, n)
    diag_term = np.einsum("ij,ij->j", Ar, Z)
    Y = looks.looks.real
    T = sla.cho_solve(cf, Y.T)  # (m, L), column l is C^{-1} y_l
    S = T.T @ Ar  # (L, n): entry (l, j) = a_j^T C^{-1} y_l
    look_term = (S**2).mean(axis=0)
    return 2.0 * xf * (looks.sigma_w**2) * (diag_term - look_term)


def refresh_inverse(
    state: CovarianceState | None,
    x_new,
    A: SensingMatrix,
    sigma_w: float,
    sigma_z: float,
    delta_inf: float,
    delta_x: float,
    ns_steps: int = 1,
) -> CovarianceState:
    """Rebuild B(x_new) and maintain its inverse.

    The inverse is recomputed exactly when there is no previous state or the
    iterate moved by more than ``delta_x`` in the infinity norm; otherwise
    ``ns_steps`` Newton-Schulz refinements warm-started at the previous
    inverse are applied.  Raises DivergedError when a refinement step lets
    the residual ||I - M B||_F grow, signalling the caller to fall back to
    the exact path.
    """
    W = covariance_complex(x_new, A, sigma_w, sigma_z)
    B = BlockHermitian.from_complex(W)
    xf = _x_flat(x_new).copy()
    if state is None or state.inverse_mode == "none" or delta_inf > delta_x:
        return CovarianceState(xf, B, exact_inverse_block(B), "exact")
    M = state.Binv.as_complex()
    eye = np.eye(B.m, dtype=complex)
    R = eye - W @ M
    r_prev = float(np.linalg.norm(R))
    for step in range(ns_steps):
        M = M + M @ R
        R = eye - W @ M
        r = float(np.linalg.norm(R))
        if not np.isfinite(r) or r > r_prev:
            raise DivergedError(
                f"Newton-Schulz residual grew from {r_prev:.3e} to {r:.3e} at step {step + 1}"
            )
        r_prev = r
    return CovarianceState(xf, B, BlockHermitian.from_complex(M), "ns-approx", ns_steps)
