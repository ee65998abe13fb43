"""Horst iteration for two-view CCA, Gauss-Seidel order.

Each sweep updates X_a from the current X_b and then X_b from the new X_a.
A half-step approximately solves the ridge least-squares problem
``(X^T X + lam I) Xt = cross image`` with a few CG iterations, whitens the
result in the ridge metric, and rotates it to best align with the cross
image.

CG is started from the Galerkin solution in the span of the previous
iterate, ``X_old (X_old^T G) / n``, which costs no data pass because the
image ``(X^T X + lam I) X_old`` is kept from the previous whitening. At a
CCA fixed point that start is already exact, so the exact solution is a
fixed point of the inexact iteration.

Pass cost per sweep: 2 cross passes + 2 * inner_steps CG passes + 2
whitening passes. The objective is read off the last cross image at no
extra cost.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import matkernels as mk
from .rcca import (DEFAULT_NU, CcaModel, SolverError,
                   _check_correlations, _expand, resolve_regularizers)
from .twoview import DimensionError, pass_crossprod, pass_gram_apply


@dataclass(frozen=True)
class HorstConfig:
    k: int
    nu: float = DEFAULT_NU
    lambda_a: float | None = None
    lambda_b: float | None = None
    max_sweeps: int = 300
    inner_steps: int = 3
    tol: float = 1e-6
    seed: int = 0
    init: object = "random"  # "random" or a CcaModel to warm start from
    centered: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.inner_steps < 1:
            raise ValueError(f"inner_steps must be >= 1, got {self.inner_steps}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if (self.lambda_a is None) != (self.lambda_b is None):
            raise ValueError("lambda_a and lambda_b must be given together")
        if not (self.init == "random" or isinstance(self.init, CcaModel)):
            raise ValueError("init must be 'random' or a CcaModel")

    def as_dict(self):
        return {"k": self.k, "nu": self.nu, "lambda_a": self.lambda_a,
                "lambda_b": self.lambda_b, "max_sweeps": self.max_sweeps,
                "inner_steps": self.inner_steps, "tol": self.tol, "seed": self.seed,
                "init": "random" if self.init == "random" else "warm",
                "centered": self.centered}


@dataclass(frozen=True)
class HorstTrace:
    objectives: tuple = ()
    passes: tuple = ()

    def __len__(self):
        return len(self.objectives)

    def passes_to_reach(self, target):
        """Cumulative passes at the first sweep whose objective >= target."""
        for obj, p in zip(self.objectives, self.passes):
            if obj >= target:
                return p
        return None


def metric_whiten(ds, view, Xt, lam, centered=False, return_image=False):
    """Rescale `Xt` so that ``X^T (G + lam I) X = n I`` (G the view's Gram).

    One data pass. With `return_image`, also returns ``(G + lam I) X``.
    """
    Xt = mk.as_dense(Xt)
    GX = pass_gram_apply(ds, view, Xt, lam, centered)
    C = Xt.T @ GX
    C = 0.5 * (C + C.T)
    try:
        L = mk.cholesky(C)
    except mk.KernelError as exc:
        raise SolverError("rank-deficient block; reduce k or raise λ") from exc
    scale = math.sqrt(ds.n)
    X = scale * mk.solve_lower(L, Xt.T).T
    if not return_image:
        return X
    return X, scale * mk.solve_lower(L, GX.T).T


def approx_ls(ds, view, RHS, lam, inner_steps, centered=False, x0=None, image0=None):
    """`inner_steps` CG iterations on ``(G + lam I) X = RHS``, column by column.

    Each iteration is one data pass. Starts from zero unless `x0` (with its
    image ``image0 = (G + lam I) x0``) is supplied. Stops early only if every
    residual is exactly zero.
    """
    RHS = mk.as_dense(RHS)
    if RHS.shape[0] != ds.dim(view):
        raise DimensionError(f"RHS has {RHS.shape[0]} rows, view {view} has "
                             f"{ds.dim(view)} features")
    if x0 is None:
        X = np.zeros_like(RHS)
        R = RHS.copy()
    else:
        X = np.array(x0, dtype=np.float64)
        R = RHS - image0
    P = R.copy()
    rs = np.sum(R * R, axis=0)
    for _ in range(inner_steps):
        if not np.any(rs):
            break
        MP = pass_gram_apply(ds, view, P, lam, centered)
        pmp = np.sum(P * MP, axis=0)
        ok = pmp > 0
        alpha = np.divide(rs, pmp, out=np.zeros_like(rs), where=ok)
        X += P * alpha
        R -= MP * alpha
        rs_new = np.sum(R * R, axis=0)
        beta = np.divide(rs_new, rs, out=np.zeros_like(rs), where=rs > 0)
        P = R + P * beta
        rs = rs_new
    return X


def _align(X, image, G):
    # Orthogonal rotation maximizing Tr(X^T G); keeps X whitened.
    U, _, Vt = sla.svd(X.T @ G)
    R = U @ Vt
    return X @ R, image @ R


def _half_step(ds, view, G, X_old, image_old, lam, cfg):
    if X_old is None:
        Xt = approx_ls(ds, view, G, lam, cfg.inner_steps, cfg.centered)
    else:
        S = (X_old.T @ G) / ds.n
        Xt = approx_ls(ds, view, G, lam, cfg.inner_steps, cfg.centered,
                       x0=X_old @ S, image0=image_old @ S)
    X, image = metric_whiten(ds, view, Xt, lam, cfg.centered, return_image=True)
    X, image = _align(X, image, G)
    if X_old is not None and np.sum(X_old * G) > np.sum(X * G):
        return X_old, image_old
    return X, image


def horst_iterate(ds, cfg):
    """Run Horst sweeps on `ds`; returns ``(CcaModel, HorstTrace)``.

    The returned model is rotated so its cross-covariance is diagonal with
    correlations in descending order.
    """
    k = cfg.k
    lam_a, lam_b = resolve_regularizers(ds.stats, cfg.nu, cfg.lambda_a, cfg.lambda_b,
                                        cfg.centered)
    cds, act_a, act_b = ds.compact()
    if min(cds.d_a, cds.d_b) < k:
        raise SolverError(f"only {min(cds.d_a, cds.d_b)} active features; "
                          f"cannot fit k={k}")
    n = ds.n
    start = ds.passes

    if isinstance(cfg.init, CcaModel):
        init = cfg.init
        if init.X_a.shape[0] != ds.d_a or init.X_b.shape[0] != ds.d_b:
            raise DimensionError(
                f"warm start dims ({init.X_a.shape[0]}, {init.X_b.shape[0]}) do not "
                f"match dataset ({ds.d_a}, {ds.d_b})")
        if init.k < k:
            raise ValueError(f"warm start has k={init.k} < requested k={k}")
        X_a, img_a = metric_whiten(cds, "a", init.X_a[act_a, :k], lam_a,
                                   cfg.centered, return_image=True)
        X_b, img_b = metric_whiten(cds, "b", init.X_b[act_b, :k], lam_b,
                                   cfg.centered, return_image=True)
    else:
        rng = np.random.default_rng(cfg.seed)
        Xt_b = rng.standard_normal((k, cds.d_b)).T
        X_a, img_a = None, None
        X_b, img_b = metric_whiten(cds, "b", Xt_b, lam_b, cfg.centered,
                                   return_image=True)

    objectives, passes = [], []
    for _ in range(cfg.max_sweeps):
        G_a, _ = pass_crossprod(cds, None, X_b, cfg.centered)
        prev = np.sum(X_a * G_a) / n if X_a is not None else None
        if objectives:
            prev = objectives[-1]
        X_a, img_a = _half_step(cds, "a", G_a, X_a, img_a, lam_a, cfg)
        _, G_b = pass_crossprod(cds, X_a, None, cfg.centered)
        X_b, img_b = _half_step(cds, "b", G_b, X_b, img_b, lam_b, cfg)
        obj = float(np.sum(X_b * G_b)) / n
        if not math.isfinite(obj):
            raise SolverError(f"non-finite objective after sweep {len(objectives) + 1}")
        objectives.append(obj)
        passes.append(ds.passes - start)
        if prev is not None and abs(obj - prev) < cfg.tol * max(abs(obj), 1e-300):
            break

    # X_a^T A^T B X_b / n, diagonalized by a k x k SVD.
    F = (G_b.T @ X_b) / n
    U, sigma, Vt = sla.svd(F)
    X_a, X_b = X_a @ U, X_b @ Vt.T
    sigma = _check_correlations(sigma, lam_a, lam_b)
    model = CcaModel(_expand(X_a, act_a, ds.d_a), _expand(X_b, act_b, ds.d_b),
                     sigma, lam_a, lam_b, n, ds.passes - start,
                     {"solver": "horst", **cfg.as_dict()})
    return model, HorstTrace(tuple(objectives), tuple(passes))
