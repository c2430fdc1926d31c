import numpy as np
import pytest

from compbcp.errors import ContractError, DomainError
from compbcp.regression import cv_lasso, lasso_fit, lasso_objective, r2_statistic, r2_statistic_batch
from compbcp.regression.lasso import fold_assignment, lambda_grid, lambda_max


def _orthonormal_design(n=40, q=5, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, q))
    A -= A.mean(axis=0)
    Q, _ = np.linalg.qr(A)
    return Q * np.sqrt(n)


class TestLasso:
    def test_noiseless_sparse_recovery(self):
        X = _orthonormal_design()
        y = X[:, 0]
        fit = cv_lasso(X, y, folds=5, seed=1)
        assert abs(fit.coefficients[0]) > 0.5
        np.testing.assert_allclose(fit.coefficients[1:], 0.0, atol=1e-6)

    def test_zero_lambda_is_least_squares(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(30)
        y = 1.5 * x + 0.3 + rng.standard_normal(30)
        fit = lasso_fit(x[:, None], y, 0.0)
        slope = np.cov(x, y, bias=True)[0, 1] / np.var(x)
        assert fit.coefficients[0] == pytest.approx(slope, abs=1e-8)
        assert fit.intercept == pytest.approx(y.mean() - slope * x.mean(), abs=1e-8)

    def test_constant_response(self):
        X = np.random.default_rng(3).standard_normal((20, 3))
        fit = cv_lasso(X, np.full(20, 4.0), folds=4)
        np.testing.assert_array_equal(fit.coefficients, np.zeros(3))
        assert fit.intercept == 4.0
        np.testing.assert_array_equal(fit.fitted_values, np.full(20, 4.0))

    def test_lambda_max_zeroes_everything(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((50, 4))
        y = X @ np.array([1.0, -1.0, 0.0, 0.5]) + rng.standard_normal(50)
        lam = lambda_max(X, y)
        np.testing.assert_allclose(lasso_fit(X, y, lam * 1.0001).coefficients, 0.0, atol=1e-12)
        assert np.any(lasso_fit(X, y, lam * 0.5).coefficients != 0)

    def test_grid_shape(self):
        grid = lambda_grid(2.0)
        assert grid.size == 100
        assert grid[0] == pytest.approx(2.0)
        assert grid[-1] == pytest.approx(2e-3)
        assert np.all(np.diff(grid) < 0)

    def test_folds_depend_only_on_inputs(self):
        a = fold_assignment(23, 5, 9)
        np.testing.assert_array_equal(a, fold_assignment(23, 5, 9))
        assert sorted(np.bincount(a)) == [4, 4, 5, 5, 5]

    def test_cv_is_reproducible(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((40, 6))
        y = X[:, 1] + rng.standard_normal(40)
        first, second = cv_lasso(X, y, seed=3), cv_lasso(X, y, seed=3)
        assert first.lambda_selected == second.lambda_selected
        np.testing.assert_array_equal(first.coefficients, second.coefficients)

    def test_cv_fit_minimizes_the_objective(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((60, 5))
        y = X @ np.array([2.0, 0.0, -1.0, 0.0, 0.0]) + rng.standard_normal(60)
        fit = cv_lasso(X, y, seed=2)
        X_std = (X - X.mean(axis=0)) / X.std(axis=0)
        y_centered = y - y.mean()
        coef_std = fit.coefficients * X.std(axis=0)
        lam = fit.lambda_selected
        at_fit = lasso_objective(X_std, y_centered, coef_std, lam)
        assert at_fit < lasso_objective(X_std, y_centered, np.zeros(5), lam)
        for step in rng.standard_normal((10, 5)) * 1e-2:
            assert at_fit <= lasso_objective(X_std, y_centered, coef_std + step, lam) + 1e-6

    def test_fold_count_is_checked(self):
        with pytest.raises(ContractError):
            cv_lasso(np.ones((3, 2)), np.arange(3.0), folds=4)


class TestR2Statistic:
    def _positive(self, n=20, seed=0):
        return np.random.default_rng(seed).uniform(0.1, 1.0, size=(n, 2))

    def test_perfect_fit(self):
        z = self._positive()
        residual = 2 * np.log(z[:, 0]) - np.log(z[:, 1]) + 1
        assert r2_statistic(residual, z) == pytest.approx(1.0, abs=1e-10)

    def test_orthogonal_residual(self):
        z = self._positive(seed=1)
        W = np.column_stack([np.ones(20), np.log(z)])
        r = np.random.default_rng(2).standard_normal(20)
        residual = r - W @ np.linalg.lstsq(W, r, rcond=None)[0]
        assert r2_statistic(residual, z) == pytest.approx(0.0, abs=1e-10)

    def test_matches_normal_equations(self):
        z = self._positive(seed=3)
        residual = np.random.default_rng(4).standard_normal(20)
        W = np.column_stack([np.ones(20), np.log(z)])
        beta = np.linalg.solve(W.T @ W, W.T @ residual)
        ss_res = np.sum((residual - W @ beta) ** 2)
        ss_tot = np.sum((residual - residual.mean()) ** 2)
        assert r2_statistic(residual, z) == pytest.approx(1 - ss_res / ss_tot, abs=1e-8)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(5)
        Z = rng.integers(0, 6, size=(4, 25, 2)).astype(float)
        residual = rng.standard_normal(25)
        batch = r2_statistic_batch(residual, Z, "log1p")
        single = [r2_statistic(residual, Z[k], "log1p") for k in range(4)]
        np.testing.assert_allclose(batch, single)

    def test_rank_deficient_design(self):
        z = np.tile([[0.5, 0.5]], (10, 1))
        z[:5] = [0.25, 0.75]
        residual = np.random.default_rng(6).standard_normal(10)
        value = r2_statistic(residual, z)
        assert 0.0 <= value <= 1.0

    def test_log_needs_positive_values(self):
        with pytest.raises(DomainError):
            r2_statistic(np.arange(4.0), np.array([[0.0, 1.0]] * 4))

    @pytest.mark.parametrize("scale", [2.0, 0.5, -1.0, -3.0])
    def test_residual_scale_does_not_matter(self, scale):
        z = self._positive(seed=7)
        residual = np.log(z[:, 0]) + np.random.default_rng(8).standard_normal(20)
        assert r2_statistic(scale * residual, z) == pytest.approx(r2_statistic(residual, z), rel=1e-10)
