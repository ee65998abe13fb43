import numpy as np
import pytest

from twoviewcca.horst import HorstConfig, approx_ls, horst_iterate, metric_whiten
from twoviewcca.oracle import DenseTwoView, exact_cca
from twoviewcca.rcca import CcaConfig, SolverError, randomized_cca
from twoviewcca.synthetic import power_law
from twoviewcca.twoview import TwoViewDataset

from conftest import dense_center, model_residuals


class TestMetricWhiten:
    def test_scalar(self):
        a = np.array([[1.0], [2.0], [2.0]])
        ds = TwoViewDataset(a, a)
        x = np.array([[0.5]])
        c = 0.25 * (9.0 + 0.5)
        np.testing.assert_allclose(metric_whiten(ds, "a", x, 0.5), x * np.sqrt(3 / c))

    def test_zero_block(self, rng):
        ds = TwoViewDataset(rng.standard_normal((10, 3)), rng.standard_normal((10, 2)))
        with pytest.raises(SolverError, match="rank-deficient block"):
            metric_whiten(ds, "a", np.zeros((3, 2)), 0.1)

    @pytest.mark.parametrize("centered", [False, True])
    def test_random(self, rng, centered):
        A = rng.standard_normal((40, 6)) + 2
        ds = TwoViewDataset(A, A[:, :2])
        X, image = metric_whiten(ds, "a", rng.standard_normal((6, 3)), 0.3, centered,
                                 return_image=True)
        Ad = dense_center(A) if centered else A
        M = Ad.T @ Ad + 0.3 * np.eye(6)
        assert np.max(np.abs(X.T @ M @ X - 40 * np.eye(3))) <= 1e-8
        np.testing.assert_allclose(image, M @ X, atol=1e-10)


class TestApproxLs:
    def test_zero_rhs(self, rng):
        ds = TwoViewDataset(rng.standard_normal((10, 3)), rng.standard_normal((10, 2)))
        np.testing.assert_array_equal(approx_ls(ds, "a", np.zeros((3, 2)), 0.1, 3), 0)

    def test_diagonal_one_step(self):
        A = np.diag([1.0, 2.0, 3.0])
        ds = TwoViewDataset(A, A)
        rhs = np.array([[0.0], [5.0], [0.0]])
        x = approx_ls(ds, "a", rhs, 0.5, 1)
        np.testing.assert_allclose(x, rhs / 4.5)
        assert ds.passes == 1

    def test_full_steps_solve_exactly(self, rng):
        A = rng.standard_normal((30, 6)) + 1
        ds = TwoViewDataset(A, A)
        rhs = rng.standard_normal((6, 2))
        x = approx_ls(ds, "a", rhs, 0.2, 6, centered=True)
        Ac = dense_center(A)
        np.testing.assert_allclose(x, np.linalg.solve(Ac.T @ Ac + 0.2 * np.eye(6), rhs),
                                   atol=1e-8)

    def test_passes_counted(self, rng):
        ds = TwoViewDataset(rng.standard_normal((30, 6)), rng.standard_normal((30, 2)))
        approx_ls(ds, "a", rng.standard_normal((6, 2)), 0.1, 4)
        assert ds.passes == 4


class TestHorst:
    def test_fixed_point(self, bundled_views):
        A, B = bundled_views
        ds = TwoViewDataset(A, B)
        r = randomized_cca(ds, CcaConfig(k=5, p=35, q=1))
        ref = exact_cca(DenseTwoView(A, B), r.lambda_a, r.lambda_b, 5)
        m, trace = horst_iterate(ds, HorstConfig(k=5, init=ref, max_sweeps=4, tol=1e-300))
        np.testing.assert_allclose(m.correlations, ref.correlations, atol=1e-8)
        # columns are determined up to sign
        signs = np.sign(np.sum(m.X_a * ref.X_a, axis=0))
        assert np.max(np.abs(m.X_a * signs - ref.X_a)) <= 1e-8 * np.max(np.abs(ref.X_a))
        assert trace.objectives[0] == pytest.approx(ref.correlations.sum(), abs=1e-8)

    def test_identical_views(self, rng):
        A = rng.standard_normal((200, 8))
        ds = TwoViewDataset(A, A)
        m, _ = horst_iterate(ds, HorstConfig(k=3, lambda_a=0.0, lambda_b=0.0, tol=1e-12))
        np.testing.assert_allclose(m.correlations, 1.0, atol=1e-6)

    def test_converges_to_oracle(self, bundled_views):
        A, B = bundled_views
        ds = TwoViewDataset(A, B)
        m, trace = horst_iterate(ds, HorstConfig(k=5, nu=0.01, max_sweeps=200, tol=1e-12))
        ref = exact_cca(DenseTwoView(A, B), m.lambda_a, m.lambda_b, 5)
        assert m.correlations.sum() == pytest.approx(ref.correlations.sum(), rel=1e-4)
        assert len(trace) <= 200

    @pytest.mark.parametrize("centered", [False, True])
    def test_invariants_and_monotone(self, rng, centered):
        A, B = power_law(n=600, da=25, db=20, rank=10, shift=0.5, seed=21)
        ds = TwoViewDataset(A, B)
        m, trace = horst_iterate(ds, HorstConfig(k=4, nu=0.05, inner_steps=3,
                                                 max_sweeps=60, centered=centered))
        ra, rb, off, diag = model_residuals(A, B, m, centered)
        assert max(ra, rb, off) <= 1e-8
        np.testing.assert_allclose(diag, m.correlations, atol=1e-8)
        assert np.all(np.diff(m.correlations) <= 0)
        assert np.all(np.diff(trace.objectives) >= -1e-10)
        assert np.all(np.diff(trace.passes) > 0)
        assert trace.passes[-1] == m.passes_used

    def test_pass_accounting(self, bundled):
        m, trace = horst_iterate(bundled, HorstConfig(k=3, inner_steps=2, max_sweeps=3,
                                                      tol=1e-300))
        # 1 init whitening pass, then 2 cross + 2*2 CG + 2 whitening per sweep
        assert trace.passes == (9, 17, 25)
        assert m.passes_used == 25 == bundled.passes

    def test_warm_start_dims_checked(self, bundled, rng):
        bad = randomized_cca(TwoViewDataset(rng.standard_normal((50, 7)),
                                            rng.standard_normal((50, 40))),
                             CcaConfig(k=2, p=2))
        with pytest.raises(ValueError):
            horst_iterate(bundled, HorstConfig(k=2, init=bad))

    def test_warm_start_needs_fewer_passes(self, bundled_views):
        A, B = bundled_views
        ds = TwoViewDataset(A, B)
        warm = randomized_cca(ds, CcaConfig(k=5, p=10, q=1))
        _, tw = horst_iterate(ds, HorstConfig(k=5, init=warm))
        _, tr = horst_iterate(ds, HorstConfig(k=5))
        assert tw.passes[-1] + warm.passes_used < tr.passes[-1]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            HorstConfig(k=2, inner_steps=0)
        with pytest.raises(ValueError):
            HorstConfig(k=2, tol=0)
        with pytest.raises(ValueError):
            HorstConfig(k=2, init="warm")
