"""Row-aligned sparse two-view datasets and the streaming data passes.

Each pass operation sweeps the rows once, in ascending order and in
fixed-size chunks, and increments the dataset's pass counter by one.
Mean centering is never materialized: every pass applies the centering
correction analytically from the stored column means, e.g.

    (A - 1 mu_a^T)^T (B - 1 mu_b^T) Q = A^T (B Q) - n mu_a (mu_b^T Q).
"""

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hashing import FeatureHasher

DEFAULT_CHUNK_ROWS = 4096


class DataFormatError(ValueError):
    """Malformed input file; the message carries the offending line number."""


class DimensionError(ValueError):
    pass


class PassCounter:
    """Thread-safe count of full sweeps over a dataset's rows."""

    def __init__(self):
        self._passes = 0
        self._lock = threading.Lock()

    @property
    def passes(self):
        return self._passes

    def increment(self):
        with self._lock:
            self._passes += 1

    def __repr__(self):
        return f"PassCounter(passes={self._passes})"


@dataclass(frozen=True)
class ViewStats:
    mu_a: np.ndarray
    mu_b: np.ndarray
    trace_a: float
    trace_b: float
    n: int
    active_a: np.ndarray
    active_b: np.ndarray

    def mu(self, view):
        return self.mu_a if view == "a" else self.mu_b

    def trace(self, view, centered=False):
        """Tr(X^T X) of one view, or of its column-centered version."""
        tr = self.trace_a if view == "a" else self.trace_b
        if centered:
            mu = self.mu(view)
            tr = tr - self.n * float(mu @ mu)
        return tr


def _view_stats(X):
    n = X.shape[0]
    data = X.data
    trace = float(np.sum(data * data))
    if n:
        mu = np.asarray(X.sum(axis=0)).ravel() / n
    else:
        mu = np.zeros(X.shape[1])
    counts = np.bincount(X.indices[data != 0], minlength=X.shape[1])
    return mu, trace, np.flatnonzero(counts)


def compute_stats(A, B):
    mu_a, tr_a, act_a = _view_stats(A)
    mu_b, tr_b, act_b = _view_stats(B)
    return ViewStats(mu_a, mu_b, tr_a, tr_b, A.shape[0], act_a, act_b)


def _as_csr(X, d=None):
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
    else:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise DimensionError(f"expected a 2-d matrix, got shape {X.shape}")
        X = sp.csr_matrix(X)
    if d is not None and X.shape[1] != d:
        X = sp.csr_matrix((X.data, X.indices, X.indptr), shape=(X.shape[0], d))
    X.sum_duplicates()
    X.eliminate_zeros()
    X.sort_indices()
    return X


class TwoViewDataset:
    """Immutable pair of row-aligned CSR matrices A (n x d_a), B (n x d_b).

    Rows are sorted sparse vectors; column statistics are computed once at
    construction. `hash_config` records ``{"bits", "seed"}`` for datasets
    built from hashed text.
    """

    def __init__(self, A, B, hash_config=None, chunk_rows=DEFAULT_CHUNK_ROWS,
                 workers=1, counter=None):
        A = _as_csr(A)
        B = _as_csr(B)
        if A.shape[0] != B.shape[0]:
            raise DimensionError(
                f"views have different row counts: {A.shape[0]} vs {B.shape[0]}")
        if not np.all(np.isfinite(A.data)) or not np.all(np.isfinite(B.data)):
            raise DataFormatError("non-finite values in dataset")
        self.A = A
        self.B = B
        self.stats = compute_stats(A, B)
        self.hash_config = hash_config
        self.chunk_rows = int(chunk_rows)
        self.workers = int(workers)
        self.counter = counter if counter is not None else PassCounter()

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def d_a(self):
        return self.A.shape[1]

    @property
    def d_b(self):
        return self.B.shape[1]

    @property
    def passes(self):
        return self.counter.passes

    def view(self, view):
        if view == "a":
            return self.A
        if view == "b":
            return self.B
        raise ValueError(f"view must be 'a' or 'b', got {view!r}")

    def dim(self, view):
        return self.view(view).shape[1]

    def row(self, i):
        """Row `i` as ``((idx_a, val_a), (idx_b, val_b))``."""
        out = []
        for X in (self.A, self.B):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            out.append((X.indices[lo:hi].copy(), X.data[lo:hi].copy()))
        return tuple(out)

    def __len__(self):
        return self.n

    def __repr__(self):
        return (f"TwoViewDataset(n={self.n}, d_a={self.d_a}, d_b={self.d_b}, "
                f"nnz=({self.A.nnz}, {self.B.nnz}))")

    def subset(self, rows):
        """New dataset from the given row indices, with fresh stats and counter."""
        rows = np.asarray(rows, dtype=np.int64)
        return TwoViewDataset(self.A[rows], self.B[rows], self.hash_config,
                              self.chunk_rows, self.workers)

    def compact(self):
        """Restrict both views to their active features.

        Returns ``(compact_ds, active_a, active_b)``. The compact dataset shares
        this dataset's pass counter, so passes made on it are counted here.
        """
        act_a, act_b = self.stats.active_a, self.stats.active_b
        ds = TwoViewDataset(self.A[:, act_a], self.B[:, act_b], self.hash_config,
                            self.chunk_rows, self.workers, counter=self.counter)
        return ds, act_a, act_b

    def to_dense(self):
        return self.A.toarray(), self.B.toarray()

    # -- sweeping ---------------------------------------------------------

    def _chunks(self):
        step = max(self.chunk_rows, 1)
        return [(lo, min(lo + step, self.n)) for lo in range(0, self.n, step)]

    def sweep(self, fn):
        """Apply ``fn(A_chunk, B_chunk)`` over row chunks and sum the results.

        `fn` returns a tuple of arrays; partial sums are merged in chunk
        order, so the result does not depend on `workers`. Counts one pass.
        """
        chunks = self._chunks()

        def run(bounds):
            lo, hi = bounds
            return fn(self.A[lo:hi], self.B[lo:hi])

        if self.workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                parts = list(pool.map(run, chunks))
        else:
            parts = [run(c) for c in chunks]
        self.counter.increment()
        if not parts:
            return None
        total = [np.array(x, dtype=np.float64, copy=True) for x in parts[0]]
        for part in parts[1:]:
            for acc, x in zip(total, part):
                acc += x
        return total


# -- ingestion ------------------------------------------------------------

def _read_lines(path):
    with open(path, encoding="utf-8", newline="") as f:
        text = f.read()
    if not text:
        return []
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    return [ln[:-1] if ln.endswith("\r") else ln for ln in lines]


def _read_pair(path_a, path_b):
    la, lb = _read_lines(path_a), _read_lines(path_b)
    if len(la) != len(lb):
        raise DataFormatError(
            f"line count mismatch: {path_a} has {len(la)} lines, "
            f"{path_b} has {len(lb)} lines")
    return la, lb


def _csr_from_rows(rows, d):
    indptr = [0]
    indices, data = [], []
    for idx, val in rows:
        indices.append(idx)
        data.append(val)
        indptr.append(indptr[-1] + len(idx))
    indices = np.concatenate(indices) if indices else np.zeros(0, np.int64)
    data = np.concatenate(data) if data else np.zeros(0)
    return sp.csr_matrix((data, indices, np.asarray(indptr)), shape=(len(rows), d))


def ingest_parallel_text(path_a, path_b, hash_bits=19, hash_seed=0, **kwargs):
    """Hash two aligned sentence files into a two-view dataset.

    Both views share one hasher, so ``d_a = d_b = 2**hash_bits``.
    """
    hasher = FeatureHasher(hash_bits, hash_seed)
    la, lb = _read_pair(path_a, path_b)
    A = _csr_from_rows([hasher.transform_line(s) for s in la], hasher.dim)
    B = _csr_from_rows([hasher.transform_line(s) for s in lb], hasher.dim)
    return TwoViewDataset(A, B, hash_config={"bits": hasher.bits, "seed": hasher.seed},
                          **kwargs)


def _parse_sparse_line(line, lineno, path, d):
    idx, val = [], []
    for tok in line.split():
        key, sep, value = tok.partition(":")
        if not sep:
            raise DataFormatError(f"{path}:{lineno}: malformed token {tok!r}")
        try:
            i = int(key)
            v = float(value)
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: malformed token {tok!r}") from None
        if i < 0 or (d is not None and i >= d):
            raise DataFormatError(
                f"{path}:{lineno}: index {i} out of range for dimension {d}")
        if not math.isfinite(v):
            raise DataFormatError(f"{path}:{lineno}: non-finite value {tok!r}")
        idx.append(i)
        val.append(v)
    order = np.argsort(idx, kind="stable")
    return np.asarray(idx, np.int64)[order], np.asarray(val, np.float64)[order]


def _sparse_view(lines, path, d):
    rows = [_parse_sparse_line(ln, i + 1, path, d) for i, ln in enumerate(lines)]
    if d is None:
        d = 1 + max((int(r[0][-1]) for r in rows if len(r[0])), default=-1)
        d = max(d, 1)
    return _csr_from_rows(rows, d)


def ingest_sparse(path_a, path_b, d_a=None, d_b=None, **kwargs):
    """Read `idx:val` per-line files (0-based). Dimensions default to max index + 1."""
    la, lb = _read_pair(path_a, path_b)
    return TwoViewDataset(_sparse_view(la, path_a, d_a), _sparse_view(lb, path_b, d_b),
                          **kwargs)


def _dense_view(lines, path):
    rows = []
    for i, ln in enumerate(lines):
        try:
            rows.append([float(x) for x in ln.split(",")])
        except ValueError:
            raise DataFormatError(f"{path}:{i + 1}: malformed CSV row") from None
        if len(rows[-1]) != len(rows[0]):
            raise DataFormatError(
                f"{path}:{i + 1}: expected {len(rows[0])} columns, got {len(rows[-1])}")
    if not rows:
        raise DataFormatError(f"{path}: no rows")
    return np.array(rows)


def ingest_dense(path_a, path_b, **kwargs):
    """Read comma-separated dense rows (oracle-scale inputs)."""
    la, lb = _read_pair(path_a, path_b)
    return TwoViewDataset(_dense_view(la, path_a), _dense_view(lb, path_b), **kwargs)


def write_sparse(path, X):
    X = _as_csr(X)
    with open(path, "w", encoding="utf-8") as f:
        for i in range(X.shape[0]):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            f.write(" ".join(f"{j}:{v!r}" for j, v in
                             zip(X.indices[lo:hi], X.data[lo:hi].tolist())))
            f.write("\n")


def write_dense(path, X):
    X = np.asarray(X.toarray() if sp.issparse(X) else X, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as f:
        for row in X.tolist():
            f.write(",".join(repr(v) for v in row))
            f.write("\n")


def split(ds, train_fraction=0.9, seed=0):
    """Seeded random row split into ``(train, test)``; sizes round(n*f), rest."""
    if not 0 < train_fraction <= 1:
        raise ValueError(f"train_fraction must be in (0, 1], got {train_fraction}")
    cut = int(math.floor(ds.n * train_fraction + 0.5))
    if cut == 0:
        raise ValueError(f"train split is empty (n={ds.n}, fraction={train_fraction})")
    perm = np.random.default_rng(seed).permutation(ds.n)
    return ds.subset(perm[:cut]), ds.subset(perm[cut:])


# -- data passes ----------------------------------------------------------

def _check_rows(M, d, what):
    if M is None:
        return None
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or M.shape[0] != d:
        raise DimensionError(f"{what} has shape {M.shape}, expected ({d}, m)")
    return M


def pass_crossprod(ds, Q_a, Q_b, centered=False):
    """One pass computing ``Y_a = A^T B Q_b`` and ``Y_b = B^T A Q_a``.

    Either basis may be None, in which case its image is skipped and None
    is returned in its place.
    """
    Q_a = _check_rows(Q_a, ds.d_a, "Q_a")
    Q_b = _check_rows(Q_b, ds.d_b, "Q_b")
    if Q_a is None and Q_b is None:
        raise ValueError("pass_crossprod needs at least one basis")

    def fn(Ac, Bc):
        out = []
        if Q_b is not None:
            out.append(Ac.T @ (Bc @ Q_b))
        if Q_a is not None:
            out.append(Bc.T @ (Ac @ Q_a))
        return out

    res = ds.sweep(fn)
    if res is None:
        res = []
        if Q_b is not None:
            res.append(np.zeros((ds.d_a, Q_b.shape[1])))
        if Q_a is not None:
            res.append(np.zeros((ds.d_b, Q_a.shape[1])))
    res = iter(res)
    Y_a = next(res) if Q_b is not None else None
    Y_b = next(res) if Q_a is not None else None
    if centered:
        st = ds.stats
        if Y_a is not None:
            Y_a -= ds.n * np.outer(st.mu_a, st.mu_b @ Q_b)
        if Y_b is not None:
            Y_b -= ds.n * np.outer(st.mu_b, st.mu_a @ Q_a)
    return Y_a, Y_b


def pass_final(ds, Q_a, Q_b, centered=False):
    """One pass computing ``C_a = Q_a^T A^T A Q_a``, ``C_b``, ``F = Q_a^T A^T B Q_b``."""
    Q_a = _check_rows(Q_a, ds.d_a, "Q_a")
    Q_b = _check_rows(Q_b, ds.d_b, "Q_b")

    def fn(Ac, Bc):
        Pa = np.asarray(Ac @ Q_a)
        Pb = np.asarray(Bc @ Q_b)
        return Pa.T @ Pa, Pb.T @ Pb, Pa.T @ Pb

    res = ds.sweep(fn)
    ma, mb = Q_a.shape[1], Q_b.shape[1]
    if res is None:
        res = [np.zeros((ma, ma)), np.zeros((mb, mb)), np.zeros((ma, mb))]
    C_a, C_b, F = res
    if centered:
        st = ds.stats
        ga = st.mu_a @ Q_a
        gb = st.mu_b @ Q_b
        C_a -= ds.n * np.outer(ga, ga)
        C_b -= ds.n * np.outer(gb, gb)
        F -= ds.n * np.outer(ga, gb)
    C_a = 0.5 * (C_a + C_a.T)
    C_b = 0.5 * (C_b + C_b.T)
    return C_a, C_b, F


def pass_gram_apply(ds, view, P, lam=0.0, centered=False):
    """One pass computing ``(X^T X + lam I) P`` for view ``'a'`` or ``'b'``."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    d = ds.dim(view)
    P = _check_rows(P, d, "P")
    first = view == "a"

    def fn(Ac, Bc):
        Xc = Ac if first else Bc
        return (Xc.T @ (Xc @ P),)

    res = ds.sweep(fn)
    G = res[0] if res is not None else np.zeros_like(P)
    if centered:
        mu = ds.stats.mu(view)
        G -= ds.n * np.outer(mu, mu @ P)
    if lam:
        G += lam * P
    return G


def objective(ds, X_a, X_b, centered=False):
    """One pass computing ``(1/n) Tr(X_a^T A^T B X_b)``."""
    if ds.n == 0:
        raise ValueError("objective of an empty dataset")
    X_a = _check_rows(X_a, ds.d_a, "X_a")
    X_b = _check_rows(X_b, ds.d_b, "X_b")
    if X_a.shape[1] != X_b.shape[1]:
        raise DimensionError(f"X_a has {X_a.shape[1]} columns, X_b has {X_b.shape[1]}")

    def fn(Ac, Bc):
        return (np.array(np.sum(np.asarray(Ac @ X_a) * np.asarray(Bc @ X_b))),)

    total = float(ds.sweep(fn)[0])
    if centered:
        st = ds.stats
        total -= ds.n * float(np.dot(st.mu_a @ X_a, st.mu_b @ X_b))
    return total / ds.n
