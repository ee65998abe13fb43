"""Feasibility diagnostics for fitted models."""

import numpy as np

from .twoview import DimensionError, objective, pass_final


def check_dims(ds, model):
    if model.X_a.shape[0] != ds.d_a or model.X_b.shape[0] != ds.d_b:
        raise DimensionError(
            f"model dims (d_a={model.X_a.shape[0]}, d_b={model.X_b.shape[0]}, "
            f"k={model.k}) do not match dataset (n={ds.n}, d_a={ds.d_a}, d_b={ds.d_b})")


def residuals(ds, model, centered=False):
    """One pass; whitening and cross-covariance residuals of `model` on `ds`.

    feasibility_residual_a = max|(X_a^T A^T A X_a + lambda_a X_a^T X_a)/n - I|
    cross_offdiag_residual = max off-diagonal |X_a^T A^T B X_b / n|, divided by
    the largest diagonal magnitude when that is nonzero.
    """
    check_dims(ds, model)
    X_a, X_b = model.X_a, model.X_b
    C_a, C_b, F = pass_final(ds, X_a, X_b, centered)
    n, k = ds.n, model.k
    eye = np.eye(k)
    W_a = (C_a + model.lambda_a * (X_a.T @ X_a)) / n
    W_b = (C_b + model.lambda_b * (X_b.T @ X_b)) / n
    cross = F / n
    diag = np.diag(cross)
    off = np.abs(cross - np.diag(diag))
    top = float(np.max(np.abs(diag), initial=0.0))
    off_max = float(np.max(off, initial=0.0))
    return {
        "feasibility_residual_a": float(np.max(np.abs(W_a - eye), initial=0.0)),
        "feasibility_residual_b": float(np.max(np.abs(W_b - eye), initial=0.0)),
        "cross_offdiag_residual": off_max / top if top > 0 else off_max,
        "cross_diagonal": diag,
    }


def evaluate(ds, model, centered=False):
    """Objective plus residuals; exactly two data passes."""
    check_dims(ds, model)
    obj = objective(ds, model.X_a, model.X_b, centered)
    out = residuals(ds, model, centered)
    out["objective"] = obj
    return out
