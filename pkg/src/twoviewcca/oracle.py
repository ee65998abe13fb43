"""Exact dense CCA for small problems; the reference the solvers are tested against."""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .rcca import CcaModel

MAX_ROWS = 10000
MAX_DIM = 500


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class DenseTwoView:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        B = np.asarray(self.B, dtype=np.float64)
        if A.ndim != 2 or B.ndim != 2 or A.shape[0] != B.shape[0]:
            raise OracleError(f"incompatible views: {A.shape} and {B.shape}")
        if A.shape[0] > MAX_ROWS or max(A.shape[1], B.shape[1]) > MAX_DIM:
            raise OracleError(f"oracle is limited to n <= {MAX_ROWS}, d <= {MAX_DIM}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @classmethod
    def from_dataset(cls, ds):
        return cls(*ds.to_dense())

    @property
    def n(self):
        return self.A.shape[0]

    def views(self, centered):
        if not centered:
            return self.A, self.B
        return self.A - self.A.mean(axis=0), self.B - self.B.mean(axis=0)


def _inv_sqrt(M):
    w, V = sla.eigh(M)
    if w[0] <= 0:
        raise OracleError(
            f"regularized Gram is not positive definite (min eigenvalue {w[0]:.3e})")
    return (V / np.sqrt(w)) @ V.T


def exact_cca(dv, lambda_a, lambda_b, k, centered=False):
    """Regularized CCA via symmetric inverse square roots and a dense SVD."""
    A, B = dv.views(centered)
    if not 1 <= k <= min(A.shape[1], B.shape[1]):
        raise OracleError(f"k={k} must be in [1, min(d_a, d_b)]")
    Wa = _inv_sqrt(A.T @ A + lambda_a * np.eye(A.shape[1]))
    Wb = _inv_sqrt(B.T @ B + lambda_b * np.eye(B.shape[1]))
    U, s, Vt = sla.svd(Wa @ (A.T @ B) @ Wb, full_matrices=False)
    scale = math.sqrt(dv.n)
    return CcaModel(scale * Wa @ U[:, :k], scale * Wb @ Vt[:k].T, s[:k].copy(),
                    float(lambda_a), float(lambda_b), dv.n, 0,
                    {"solver": "oracle", "k": k, "centered": centered})


def exact_cross_spectrum(dv, centered=False):
    """All singular values of ``(1/n) A^T B``, descending."""
    A, B = dv.views(centered)
    return sla.svd(A.T @ B / dv.n, compute_uv=False)


def dense_objective(dv, X_a, X_b, centered=False):
    A, B = dv.views(centered)
    return float(np.trace((A @ X_a).T @ (B @ X_b))) / dv.n
