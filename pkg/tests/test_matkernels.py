import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twoviewcca import matkernels as mk


def mgs(M, tol=1e-10):
    """Modified Gram-Schmidt with one reorthogonalization sweep."""
    basis = []
    scale = np.linalg.norm(M, axis=0).max()
    for col in M.T:
        v = col.astype(float).copy()
        for _ in range(2):
            for q in basis:
                v -= (q @ v) * q
        nv = np.linalg.norm(v)
        if nv > tol * scale:
            basis.append(v / nv)
    return np.array(basis).T


def jacobi_eigvals(S, sweeps=100):
    """Cyclic Jacobi rotations for a symmetric matrix."""
    S = S.astype(float).copy()
    m = S.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(S**2) - np.sum(np.diag(S)**2))
        if off < 1e-15 * np.linalg.norm(S):
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                if abs(S[p, q]) < 1e-300:
                    continue
                theta = (S[q, q] - S[p, p]) / (2 * S[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1)) if theta else 1.0
                c = 1 / np.sqrt(t**2 + 1)
                s = t * c
                J = np.eye(m)
                J[p, p] = J[q, q] = c
                J[p, q], J[q, p] = s, -s
                S = J.T @ S @ J
    return np.sort(np.diag(S))[::-1]


class TestOrthonormalize:
    def test_identity(self):
        np.testing.assert_allclose(np.abs(mk.orthonormalize(np.eye(3))), np.eye(3),
                                   atol=1e-15)

    def test_single_column(self):
        q = mk.orthonormalize(np.array([[3.0], [4.0]]))
        np.testing.assert_allclose(np.abs(q.ravel()), [0.6, 0.8], atol=1e-15)

    def test_random_against_mgs(self, rng):
        M = rng.standard_normal((10, 4))
        Q = mk.orthonormalize(M)
        assert Q.shape == (10, 4)
        assert np.max(np.abs(Q.T @ Q - np.eye(4))) <= 1e-12
        assert np.linalg.norm(M - Q @ Q.T @ M) <= 1e-10 * np.linalg.norm(M)
        ref = mgs(M)
        # same column space: projectors agree
        np.testing.assert_allclose(Q @ Q.T, ref @ ref.T, atol=1e-12)

    def test_rank_deficient_drops_columns(self, rng):
        M = rng.standard_normal((8, 3))
        M = np.column_stack([M, M[:, 0] + 2 * M[:, 1]])
        with pytest.warns(mk.RankDeficiencyWarning):
            Q = mk.orthonormalize(M)
        assert Q.shape == (8, 3)
        assert np.linalg.norm(M - Q @ Q.T @ M) <= 1e-10 * np.linalg.norm(M)

    def test_zero_input(self):
        with pytest.raises(mk.KernelError, match="rank zero input"):
            mk.orthonormalize(np.zeros((4, 2)))


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(mk.cholesky(np.eye(3)), np.eye(3))

    def test_two_by_two(self):
        np.testing.assert_allclose(mk.cholesky([[4.0, 2.0], [2.0, 5.0]]),
                                   [[2.0, 0.0], [1.0, 2.0]], atol=1e-15)

    def test_random_spd(self, rng):
        R = rng.standard_normal((6, 6))
        S = R.T @ R + np.eye(6)
        L = mk.cholesky(S)
        assert np.allclose(L, np.tril(L)) and np.all(np.diag(L) > 0)
        assert np.linalg.norm(L @ L.T - S) <= 1e-10 * np.linalg.norm(S)

    def test_indefinite(self):
        with pytest.raises(mk.KernelError, match="not positive definite"):
            mk.cholesky([[1.0, 2.0], [2.0, 1.0]])

    def test_asymmetric(self):
        with pytest.raises(mk.KernelError):
            mk.cholesky([[1.0, 0.5], [0.0, 1.0]])


class TestWhitenCross:
    def test_identity_factors(self, rng):
        F = rng.standard_normal((3, 4))
        np.testing.assert_array_equal(mk.whiten_cross(F, np.eye(3), np.eye(4)), F)

    def test_diagonal_scaling(self):
        np.testing.assert_allclose(
            mk.whiten_cross(8 * np.eye(3), 2 * np.eye(3), 4 * np.eye(3)), np.eye(3))

    def test_random_against_explicit_inverse(self, rng):
        F = rng.standard_normal((5, 5))
        La = np.tril(rng.standard_normal((5, 5))) + 4 * np.eye(5)
        Lb = np.tril(rng.standard_normal((5, 5))) + 4 * np.eye(5)
        expected = np.linalg.inv(La).T @ F @ np.linalg.inv(Lb)
        np.testing.assert_allclose(mk.whiten_cross(F, La, Lb), expected, atol=1e-12)

    def test_chol_variant(self, rng):
        F = rng.standard_normal((4, 3))
        La = np.tril(rng.standard_normal((4, 4))) + 4 * np.eye(4)
        Lb = np.tril(rng.standard_normal((3, 3))) + 4 * np.eye(3)
        expected = np.linalg.inv(La) @ F @ np.linalg.inv(Lb).T
        np.testing.assert_allclose(mk.whiten_cross_chol(F, La, Lb), expected, atol=1e-12)

    def test_singular_factor(self):
        L = np.diag([1.0, 0.0])
        with pytest.raises(mk.KernelError, match="singular triangular factor"):
            mk.whiten_cross(np.ones((2, 2)), L, np.eye(2))


class TestSvdTruncated:
    def test_diagonal(self):
        U, s, V = mk.svd_truncated(np.diag([3.0, 2.0, 1.0]), 2)
        np.testing.assert_allclose(s, [3.0, 2.0])
        np.testing.assert_allclose(np.abs(U), np.eye(3)[:, :2])
        np.testing.assert_allclose(np.abs(V), np.eye(3)[:, :2])

    def test_zero(self):
        _, s, _ = mk.svd_truncated(np.zeros((3, 2)), 1)
        np.testing.assert_array_equal(s, [0.0])

    def test_random_against_jacobi(self, rng):
        F = rng.standard_normal((8, 6))
        U, s, V = mk.svd_truncated(F, 3)
        ref = np.sqrt(np.maximum(jacobi_eigvals(F.T @ F), 0))[:3]
        np.testing.assert_allclose(s, ref, atol=1e-8)
        assert np.max(np.abs(U.T @ U - np.eye(3))) <= 1e-10
        assert np.max(np.abs(V.T @ V - np.eye(3))) <= 1e-10
        assert np.linalg.norm(F @ V - U * s) <= 1e-8 * np.linalg.norm(F)
        assert np.all(np.diff(s) <= 0)

    def test_k_too_large(self):
        with pytest.raises(mk.KernelError):
            mk.svd_truncated(np.ones((2, 3)), 3)


def _mat(draw, rows, cols):
    seed = draw(st.integers(0, 2**32 - 1))
    return np.random.default_rng(seed).standard_normal((rows, cols))


@pytest.mark.filterwarnings("ignore::twoviewcca.matkernels.RankDeficiencyWarning")
@settings(max_examples=40, deadline=None)
@given(st.data(), st.integers(1, 12), st.integers(1, 6))
def test_orthonormalize_properties(data, n, k):
    M = _mat(data.draw, n, k)
    Q = mk.orthonormalize(M)
    assert Q.shape[1] <= min(n, k)
    assert np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1]))) <= 1e-12
    assert np.linalg.norm(M - Q @ Q.T @ M) <= 1e-10 * np.linalg.norm(M)


@settings(max_examples=40, deadline=None)
@given(st.data(), st.integers(1, 8), st.floats(0, 8))
def test_cholesky_reconstruction(data, k, log_cond):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    Q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    w = np.logspace(0, -log_cond, k)
    S = (Q * w) @ Q.T
    S = 0.5 * (S + S.T)
    L = mk.cholesky(S)
    assert np.linalg.norm(L @ L.T - S) <= 1e-10 * np.linalg.norm(S)


@settings(max_examples=40, deadline=None)
@given(st.data(), st.integers(1, 7), st.integers(1, 7))
def test_svd_rotation_invariance(data, m, n):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    F = rng.standard_normal((m, n))
    P, _ = np.linalg.qr(rng.standard_normal((m, m)))
    R, _ = np.linalg.qr(rng.standard_normal((n, n)))
    k = min(m, n)
    s1 = mk.svd_truncated(F, k)[1]
    s2 = mk.svd_truncated(P @ F @ R, k)[1]
    np.testing.assert_allclose(s1, s2, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.data(), st.integers(1, 6), st.integers(1, 6))
def test_whiten_cross_roundtrip(data, a, b):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    F = rng.standard_normal((a, b))
    La = np.tril(rng.standard_normal((a, a))) + 3 * np.eye(a)
    Lb = np.tril(rng.standard_normal((b, b))) + 3 * np.eye(b)
    W = mk.whiten_cross(F, La, Lb)
    np.testing.assert_allclose(La.T @ W @ Lb, F, atol=1e-12)
