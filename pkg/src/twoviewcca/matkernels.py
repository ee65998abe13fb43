"""Dense kernels for the small (k+p)-sized matrices of the randomized solver.

Matrices are plain float64 ``numpy`` arrays. Every kernel copies or
allocates its output, so results can be shared freely between threads.
"""

import warnings

import numpy as np
import scipy.linalg as sla

RANK_TOL = 1e-10


class KernelError(ValueError):
    """A dense kernel received input it cannot factor."""


class RankDeficiencyWarning(RuntimeWarning):
    pass


def as_dense(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    return M


def orthonormalize(M, tol=RANK_TOL):
    """Orthonormal basis for the numerical column space of `M`.

    Householder QR with column pivoting; trailing columns whose |R_ii| is
    below ``tol * max|R_ii|`` are dropped, so the result may have fewer
    columns than `M`.
    """
    M = as_dense(M)
    n, k = M.shape
    if n < 1 or k < 1:
        raise KernelError("empty input")
    if not np.all(np.isfinite(M)):
        raise KernelError("non-finite input")
    if not np.any(M):
        raise KernelError("rank zero input")
    Q, R, _ = sla.qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    r = int(np.count_nonzero(diag >= tol * diag[0]))
    if r == 0:
        raise KernelError("rank zero input")
    if r < k:
        warnings.warn(f"orthonormalize: dropped {k - r} of {k} columns "
                      "below the rank threshold", RankDeficiencyWarning,
                      stacklevel=2)
    return np.ascontiguousarray(Q[:, :r])


def cholesky(S, sym_tol=1e-10):
    """Lower Cholesky factor of a symmetric positive definite matrix."""
    S = as_dense(S)
    if S.shape[0] != S.shape[1]:
        raise KernelError(f"cholesky needs a square matrix, got {S.shape}")
    scale = max(np.max(np.abs(S), initial=0.0), np.finfo(float).tiny)
    if np.max(np.abs(S - S.T), initial=0.0) > sym_tol * scale:
        raise KernelError("cholesky input is not symmetric")
    try:
        L = sla.cholesky(S, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise KernelError(
            "not positive definite; increase regularization") from exc
    if not np.all(np.diag(L) > 0):
        raise KernelError("not positive definite; increase regularization")
    return L


def _check_triangular(L, name):
    L = as_dense(L)
    if L.shape[0] != L.shape[1]:
        raise KernelError(f"{name} must be square, got {L.shape}")
    if np.any(np.diag(L) == 0):
        raise KernelError("singular triangular factor")
    return L


def solve_lower(L, B, trans=False):
    """Solve ``L X = B`` (or ``L^T X = B`` when `trans`) for lower-triangular L."""
    L = _check_triangular(L, "L")
    return sla.solve_triangular(L, B, lower=True, trans="T" if trans else "N")


def whiten_cross(F, La, Lb):
    """Return ``La^{-T} F Lb^{-1}`` via two triangular solves."""
    F = as_dense(F)
    La = _check_triangular(La, "La")
    Lb = _check_triangular(Lb, "Lb")
    if F.shape != (La.shape[0], Lb.shape[0]):
        raise KernelError(
            f"shape mismatch: F {F.shape}, La {La.shape}, Lb {Lb.shape}")
    # La^{-T} F
    G = sla.solve_triangular(La, F, lower=True, trans="T")
    # (La^{-T} F) Lb^{-1} = (Lb^{-T} G^T)^T
    return sla.solve_triangular(Lb, G.T, lower=True, trans="T").T


def whiten_cross_chol(F, La, Lb):
    """Return ``La^{-1} F Lb^{-T}`` for lower Cholesky factors.

    With ``Ca = La La^T`` this is the cross matrix expressed in bases that
    are orthonormal in the Ca and Cb metrics; equal to
    ``whiten_cross(F, La^T, Lb^T)`` read with upper-triangular factors.
    """
    F = as_dense(F)
    La = _check_triangular(La, "La")
    Lb = _check_triangular(Lb, "Lb")
    if F.shape != (La.shape[0], Lb.shape[0]):
        raise KernelError(
            f"shape mismatch: F {F.shape}, La {La.shape}, Lb {Lb.shape}")
    G = sla.solve_triangular(La, F, lower=True)
    return sla.solve_triangular(Lb, G.T, lower=True).T


def svd_truncated(F, k):
    """Top-`k` singular triplets of a small dense matrix.

    Returns ``(U, sigma, V)`` with `sigma` descending and ``F V ~ U diag(sigma)``.
    """
    F = as_dense(F)
    m, n = F.shape
    if k < 0 or k > min(m, n):
        raise KernelError(f"k={k} exceeds min(m, n)={min(m, n)}")
    if not np.all(np.isfinite(F)):
        raise KernelError("non-finite input")
    U, s, Vt = sla.svd(F, full_matrices=False, lapack_driver="gesvd")
    return U[:, :k].copy(), s[:k].copy(), Vt[:k].T.copy()
