"""Randomized CCA: range finding on the cross-covariance, then an exact
solve restricted to the recovered bases.

Cost is q + 1 data passes: q power-iteration passes that refine the bases
``Q_a``, ``Q_b`` toward the top singular subspaces of ``A^T B``, and one
final pass collecting the small Gram and cross matrices. Everything after
that works on (k+p) x (k+p) matrices.

Random numbers come from ``numpy.random.Generator`` (PCG64), one child
stream per view spawned from ``SeedSequence(seed)``. Columns are drawn in
order, so for a fixed seed the initial basis for oversampling p is a prefix
of the basis for any larger p.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import matkernels as mk
from .twoview import pass_crossprod, pass_final

RNG_NAME = "numpy.PCG64/SeedSequence.spawn/standard_normal"
DEFAULT_NU = 0.01
CORR_CLIP = 1e-8


class SolverError(RuntimeError):
    pass


def default_oversampling(k):
    return max(10 * k, 100)


@dataclass(frozen=True)
class CcaConfig:
    """Hyperparameters for `randomized_cca`.

    Regularization is either scale-free (`nu`) or explicit
    (`lambda_a` and `lambda_b`); explicit values take precedence.
    """
    k: int
    p: int | None = None
    q: int = 1
    nu: float = DEFAULT_NU
    lambda_a: float | None = None
    lambda_b: float | None = None
    seed: int = 0
    centered: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.p is not None and self.p < 0:
            raise ValueError(f"p must be >= 0, got {self.p}")
        if self.q < 0:
            raise ValueError(f"q must be >= 0, got {self.q}")
        if (self.lambda_a is None) != (self.lambda_b is None):
            raise ValueError("lambda_a and lambda_b must be given together")
        if self.lambda_a is None and self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        if self.lambda_a is not None and min(self.lambda_a, self.lambda_b) < 0:
            raise ValueError("explicit lambdas must be >= 0")

    @property
    def oversampling(self):
        return default_oversampling(self.k) if self.p is None else self.p

    def regularizers(self, stats):
        """``(lambda_a, lambda_b)`` for a dataset with the given stats."""
        return resolve_regularizers(stats, self.nu, self.lambda_a, self.lambda_b,
                                    self.centered)

    def as_dict(self):
        return {"k": self.k, "p": self.oversampling, "q": self.q, "nu": self.nu,
                "lambda_a": self.lambda_a, "lambda_b": self.lambda_b,
                "seed": self.seed, "centered": self.centered}


@dataclass(frozen=True)
class CcaModel:
    X_a: np.ndarray
    X_b: np.ndarray
    correlations: np.ndarray
    lambda_a: float
    lambda_b: float
    n_train: int
    passes_used: int
    config: dict = field(default_factory=dict)

    @property
    def k(self):
        return self.X_a.shape[1]


def reg_from_nu(nu, trace, d):
    """Scale-free ridge: ``nu * trace / d``."""
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return nu * trace / d


def resolve_regularizers(stats, nu, lambda_a=None, lambda_b=None, centered=False):
    """Explicit lambdas if given, else the scale-free ridge of each view.

    The trace is taken of the matrix actually analyzed, i.e. of the
    centered view when `centered` is set.
    """
    if lambda_a is not None:
        return float(lambda_a), float(lambda_b)
    return (reg_from_nu(nu, stats.trace("a", centered), len(stats.mu_a)),
            reg_from_nu(nu, stats.trace("b", centered), len(stats.mu_b)))


def _gaussian_bases(rng_seed, d_a, d_b, m):
    ss_a, ss_b = np.random.SeedSequence(rng_seed).spawn(2)
    Q_a = np.random.default_rng(ss_a).standard_normal((m, d_a)).T
    Q_b = np.random.default_rng(ss_b).standard_normal((m, d_b)).T
    return np.ascontiguousarray(Q_a), np.ascontiguousarray(Q_b)


def _expand(X, active, d):
    out = np.zeros((d, X.shape[1]))
    out[active] = X
    return out


def finalize_bases(n, Q_a, Q_b, C_a, C_b, F, lambda_a, lambda_b, k):
    """Solve CCA exactly within span(Q_a) x span(Q_b).

    Takes the Gram/cross matrices of the final pass and returns
    ``(X_a, X_b, sigma)`` scaled so that ``X^T (G + lambda I) X = n I``.
    """
    try:
        L_a = mk.cholesky(C_a + lambda_a * (Q_a.T @ Q_a))
        L_b = mk.cholesky(C_b + lambda_b * (Q_b.T @ Q_b))
    except mk.KernelError as exc:
        raise SolverError(f"{exc}; increase regularization ν") from exc
    Fw = mk.whiten_cross_chol(F, L_a, L_b)
    U, sigma, V = mk.svd_truncated(Fw, k)
    scale = math.sqrt(n)
    X_a = scale * (Q_a @ mk.solve_lower(L_a, U, trans=True))
    X_b = scale * (Q_b @ mk.solve_lower(L_b, V, trans=True))
    return X_a, X_b, sigma


def _check_correlations(sigma, lambda_a, lambda_b):
    if min(lambda_a, lambda_b) > 0 and np.any(sigma > 1 + CORR_CLIP):
        raise AssertionError(
            f"regularized correlation exceeds 1: {float(sigma.max())!r}")
    return np.minimum(sigma, 1 + CORR_CLIP)


def randomized_cca(ds, cfg):
    """Fit CCA projections on `ds` with q + 1 data passes.

    Gaussian bases are drawn only on active features (rows for features
    that never occur are zero) and the returned projections are expanded
    back to the full dimensions.
    """
    k, q = cfg.k, cfg.q
    lambda_a, lambda_b = cfg.regularizers(ds.stats)
    cds, act_a, act_b = ds.compact()
    m = k + cfg.oversampling
    limit = min(cds.d_a, cds.d_b)
    if m > min(limit, ds.n):
        warnings.warn(f"k + p = {m} exceeds min(active d_a, active d_b, n) = "
                      f"{min(limit, ds.n)}", RuntimeWarning, stacklevel=2)
    if limit < k:
        raise SolverError(f"only {limit} active features; cannot fit k={k}")
    m = min(m, limit)
    Q_a, Q_b = _gaussian_bases(cfg.seed, cds.d_a, cds.d_b, m)

    start = ds.passes
    for _ in range(q):
        Y_a, Y_b = pass_crossprod(cds, Q_a, Q_b, cfg.centered)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", mk.RankDeficiencyWarning)
                Q_a = mk.orthonormalize(Y_a)
                Q_b = mk.orthonormalize(Y_b)
        except mk.KernelError as exc:
            raise SolverError(f"range finder collapsed: {exc}") from exc
        r = min(Q_a.shape[1], Q_b.shape[1])
        if r < k:
            raise SolverError(f"range finder rank {r} fell below k={k}")
    C_a, C_b, F = pass_final(cds, Q_a, Q_b, cfg.centered)
    passes = ds.passes - start

    X_a, X_b, sigma = finalize_bases(ds.n, Q_a, Q_b, C_a, C_b, F,
                                     lambda_a, lambda_b, k)
    sigma = _check_correlations(sigma, lambda_a, lambda_b)
    return CcaModel(_expand(X_a, act_a, ds.d_a), _expand(X_b, act_b, ds.d_b),
                    sigma, lambda_a, lambda_b, ds.n, passes,
                    {"solver": "rcca", **cfg.as_dict(), "rng": RNG_NAME})


def rangefinder_bound(k, p, q, n, sigma_ktilde, ktilde):
    """Expected range-finder error bound for a rank-`ktilde` target.

    ``[1 + 4 sqrt(k+p) / (p - ktilde - 1) * sqrt(n)]^(1/q) * sigma_ktilde``.
    Diagnostic only; the solver never calls it.
    """
    gap = p - ktilde - 1
    if gap <= 0:
        raise ValueError("oversampling too small for target rank")
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    factor = 1 + 4 * math.sqrt(k + p) / gap * math.sqrt(n)
    return factor ** (1.0 / q) * sigma_ktilde


def residual_correlation_cap(sigma_ktilde, lambda_a, lambda_b):
    """Largest canonical correlation possible outside the top-`ktilde` range."""
    if lambda_a <= 0 or lambda_b <= 0:
        raise ValueError("lambdas must be positive")
    return sigma_ktilde / math.sqrt(lambda_a * lambda_b)


@dataclass(frozen=True)
class SpectrumEstimate:
    values: np.ndarray
    rank_deficient: bool
    passes: int


def estimate_spectrum(ds, ell, seed=0, centered=False):
    """Two-pass randomized estimate of the top `ell` singular values of
    ``(1/n) A^T B``.

    Pass one sketches ``Y = A^T B Omega`` and orthonormalizes it; pass two
    forms ``T = B^T A Q``. If the sketch loses rank, fewer than `ell`
    values come back and `rank_deficient` is set.
    """
    if ell < 1 or ell > min(ds.d_a, ds.d_b):
        raise ValueError(f"ell={ell} must be in [1, min(d_a, d_b)]")
    if ds.n == 0:
        raise ValueError("empty dataset")
    cds, _, act_b = ds.compact()
    omega = np.random.default_rng(seed).standard_normal((ell, ds.d_b)).T
    start = ds.passes
    Y, _ = pass_crossprod(cds, None, omega[act_b], centered)
    if np.any(Y):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", mk.RankDeficiencyWarning)
            Q = mk.orthonormalize(Y)
    else:
        Q = np.zeros((cds.d_a, 0))
    _, T = pass_crossprod(cds, Q, None, centered)
    passes = ds.passes - start
    r = Q.shape[1]
    if r:
        values = np.linalg.svd(T.T, compute_uv=False)[:r] / ds.n
    else:
        values = np.zeros(0)
    return SpectrumEstimate(values, r < ell, passes)
