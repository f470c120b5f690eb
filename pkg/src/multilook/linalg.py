"""Dense kernels for Hermitian matrices kept in split real/imaginary form.

A complex Hermitian matrix W = U + iV is stored as the pair (U, V) with U
symmetric and V antisymmetric, so that its real embedding

    [[U, -V],
     [V,  U]]

is a symmetric 2m x 2m matrix.  Products and inverses of such matrices stay
in the family, which lets the expensive operations run on m x m complex
matrices instead of 2m x 2m real ones (half the multiplication cost).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import BadShapeError, ConvergenceError, SingularMatrixError

# Relative tolerance for the structural invariants of BlockHermitian.
_STRUCTURE_RTOL = 1e-10

# A condition-number estimate above this raises SingularMatrixError.
COND_LIMIT = 1e14


@dataclass(frozen=True)
class BlockHermitian:
    """Hermitian matrix U + iV stored as its real and imaginary parts."""

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        U, V = np.asarray(self.U, float), np.asarray(self.V, float)
        if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape != V.shape:
            raise BadShapeError(f"U and V must be equal square matrices, got {U.shape} and {V.shape}")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)

    @property
    def m(self) -> int:
        return self.U.shape[0]

    def as_complex(self) -> np.ndarray:
        return self.U + 1j * self.V

    @classmethod
    def from_complex(cls, W: np.ndarray) -> "BlockHermitian":
        W = np.asarray(W)
        return cls(np.ascontiguousarray(W.real), np.ascontiguousarray(W.imag))

    def validate(self) -> None:
        """Check U symmetric and V antisymmetric to relative tolerance 1e-10."""
        scale = max(np.abs(self.U).max(), np.abs(self.V).max(), 1.0)
        if np.abs(self.U - self.U.T).max() > _STRUCTURE_RTOL * scale:
            raise BadShapeError("U part is not symmetric within tolerance")
        if np.abs(self.V + self.V.T).max() > _STRUCTURE_RTOL * scale:
            raise BadShapeError("V part is not antisymmetric within tolerance")


def block_embed(h: BlockHermitian) -> np.ndarray:
    """Real symmetric 2m x 2m embedding [[U, -V], [V, U]]."""
    return np.block([[h.U, -h.V], [h.V, h.U]])


def _lu_factor_checked(W: np.ndarray, cond_limit: float = COND_LIMIT):
    """LU-factor a complex matrix, raising SingularMatrixError on bad conditioning."""
    anorm = np.linalg.norm(W, 1)
    try:
        lu, piv = sla.lu_factor(W)
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularMatrixError(str(exc)) from exc
    rcond, info = lapack.zgecon(lu, anorm)
    if info != 0:
        raise SingularMatrixError(f"condition estimate failed (info={info})")
    if rcond == 0 or not np.isfinite(rcond) or 1.0 / rcond > cond_limit:
        est = np.inf if rcond == 0 else 1.0 / rcond
        raise SingularMatrixError(f"condition estimate {est:.3e} exceeds limit {cond_limit:.1e}")
    return lu, piv


def exact_inverse_block(h: BlockHermitian, cond_limit: float = COND_LIMIT) -> BlockHermitian:
    """Exact inverse of U + iV via an m x m complex factorization.

    Raises SingularMatrixError when the 1-norm condition estimate of U + iV
    exceeds ``cond_limit``.
    """
    W = h.as_complex()
    lu, piv = _lu_factor_checked(W, cond_limit)
    Winv = sla.lu_solve((lu, piv), np.eye(h.m, dtype=complex))
    return BlockHermitian.from_complex(Winv)


def newton_schulz_step(M, B):
    """One Newton-Schulz refinement M + M(I - B M) of an approximate inverse.

    Accepts either plain square ndarrays (dense path) or a pair of
    BlockHermitian operands, in which case the update runs on the m x m
    complex representatives, preserving the block structure exactly and
    halving the multiplication cost relative to the dense 2m x 2m form.
    """
    if isinstance(M, BlockHermitian) and isinstance(B, BlockHermitian):
        Wm, Wb = M.as_complex(), B.as_complex()
        R = np.eye(M.m, dtype=complex) - Wb @ Wm
        return BlockHermitian.from_complex(Wm + Wm @ R)
    M = np.asarray(M)
    B = np.asarray(B)
    if M.shape != B.shape or M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise BadShapeError(f"operands must be equal square matrices, got {M.shape} and {B.shape}")
    return M + M @ (np.eye(M.shape[0], dtype=np.result_type(M, B)) - B @ M)


def newton_schulz_converge(B, M0, tol: float = 1e-10, max_steps: int = 60):
    """Iterate Newton-Schulz from M0 until ||I - M B||_F < tol.

    Returns ``(M, residuals, converged)`` where ``residuals`` holds the
    Frobenius residual before each step and after the last.  Iteration stops
    early (converged=False) when the residual grows or turns non-finite,
    which is the divergence signal of the warm-start heuristic.
    """
    block = isinstance(B, BlockHermitian)
    Wb = B.as_complex() if block else np.asarray(B)
    M = M0.as_complex() if isinstance(M0, BlockHermitian) else np.asarray(M0)
    eye = np.eye(Wb.shape[0], dtype=Wb.dtype if np.iscomplexobj(Wb) else float)
    if np.iscomplexobj(Wb) and not np.iscomplexobj(M):
        M = M.astype(complex)
    R = eye - Wb @ M
    residuals = [float(np.linalg.norm(R))]
    converged = residuals[0] < tol
    for _ in range(max_steps):
        if converged:
            break
        M = M + M @ R
        R = eye - Wb @ M
        r = float(np.linalg.norm(R))
        residuals.append(r)
        if r < tol:
            converged = True
        elif not np.isfinite(r) or r >= residuals[-2]:
            break
    if block:
        M = BlockHermitian.from_complex(M)
    return M, residuals, converged


def spectral_bounds(M: np.ndarray) -> tuple[float, float]:
    """Extreme singular values (sigma_min, sigma_max) of a dense matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise BadShapeError("spectral_bounds expects a 2-d matrix")
    try:
        s = np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"singular value iteration failed: {exc}") from exc
    return float(s[-1]), float(s[0])
