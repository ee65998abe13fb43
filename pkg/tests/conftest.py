import numpy as np
import pytest

from twoviewcca.synthetic import power_law
from twoviewcca.twoview import TwoViewDataset


def random_views(rng, n, d_a, d_b, density=1.0, shift=0.0):
    A = rng.standard_normal((n, d_a)) + shift
    B = rng.standard_normal((n, d_b)) - shift
    if density < 1:
        A *= rng.random((n, d_a)) < density
        B *= rng.random((n, d_b)) < density
    return A, B


def dense_center(X):
    return X - X.mean(axis=0)


def whitening_residual(X, M, n):
    return np.max(np.abs(X.T @ M @ X / n - np.eye(X.shape[1])))


def model_residuals(A, B, model, centered):
    """Dense, independent recomputation of the model invariants."""
    if centered:
        A, B = dense_center(A), dense_center(B)
    n = A.shape[0]
    Ma = A.T @ A + model.lambda_a * np.eye(A.shape[1])
    Mb = B.T @ B + model.lambda_b * np.eye(B.shape[1])
    cross = (A @ model.X_a).T @ (B @ model.X_b) / n
    diag = np.diag(cross)
    off = np.max(np.abs(cross - np.diag(diag)), initial=0.0)
    return (whitening_residual(model.X_a, Ma, n), whitening_residual(model.X_b, Mb, n),
            off / np.max(np.abs(diag)), diag)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def bundled_views():
    return power_law(n=2000, da=40, db=40, rank=20, decay=1, noise=1, seed=0)


@pytest.fixture
def bundled(bundled_views):
    return TwoViewDataset(*bundled_views)
