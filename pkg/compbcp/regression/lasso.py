"""Cross-validated lasso used to distill the response in the dCRT."""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.exceptions import ConvergenceWarning as SkConvergenceWarning
from sklearn.linear_model import lasso_path

from compbcp.errors import ContractError
from compbcp.rng import as_generator

logger = logging.getLogger(__name__)

N_LAMBDA = 100
LAMBDA_RATIO = 1e-3
CD_TOL = 1e-7
CD_MAX_ITER = 10_000


@dataclass
class LassoFit:
    coefficients: np.ndarray
    intercept: float
    lambda_selected: float
    fitted_values: np.ndarray
    lambda_grid: np.ndarray | None = None
    cv_error: np.ndarray | None = None

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients != 0)


@dataclass
class _Standardized:
    X: np.ndarray
    y: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float

    @classmethod
    def of(cls, design: np.ndarray, y: np.ndarray) -> "_Standardized":
        x_mean = design.mean(axis=0)
        x_scale = design.std(axis=0)
        x_scale[x_scale == 0] = 1.0
        y_mean = float(y.mean())
        return cls((design - x_mean) / x_scale, y - y_mean, x_mean, x_scale, y_mean)

    def original_scale(self, coef_std: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients (q x L) and intercepts (L,) for the unstandardized design."""
        coef = coef_std / self.x_scale[:, None]
        intercept = self.y_mean - self.x_mean @ coef
        return coef, intercept


def lambda_max(design: np.ndarray, y: np.ndarray) -> float:
    """Smallest lambda at which every standardized coefficient is zero."""
    std = _Standardized.of(np.asarray(design, dtype=float), np.asarray(y, dtype=float))
    return float(np.max(np.abs(std.X.T @ std.y)) / std.X.shape[0])


def lambda_grid(lam_max: float, n_lambda: int = N_LAMBDA, ratio: float = LAMBDA_RATIO) -> np.ndarray:
    return lam_max * np.logspace(0.0, np.log10(ratio), n_lambda)


def lasso_objective(X_std: np.ndarray, y_centered: np.ndarray, coef: np.ndarray, lam: float) -> float:
    """(1 / 2n) ||y - X b||^2 + lam ||b||_1 on the standardized problem."""
    resid = y_centered - X_std @ coef
    return float(resid @ resid / (2 * X_std.shape[0]) + lam * np.abs(coef).sum())


def _solve_path(X_std: np.ndarray, y_centered: np.ndarray, grid: np.ndarray) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SkConvergenceWarning)
        _, coefs, _ = lasso_path(X_std, y_centered, alphas=grid, tol=CD_TOL, max_iter=CD_MAX_ITER)
    return coefs


def fold_assignment(n: int, folds: int, seed) -> np.ndarray:
    """Balanced fold labels; a function of (n, folds, seed) only."""
    rng = as_generator(seed)
    return rng.permutation(np.arange(n) % folds)


def _intercept_only(design: np.ndarray, y: np.ndarray) -> LassoFit:
    mean = float(y.mean())
    coef = np.zeros(design.shape[1])
    return LassoFit(coef, mean, 0.0, mean + design @ coef, lambda_grid=np.array([0.0]))


def lasso_fit(design: np.ndarray, y: np.ndarray, lam: float) -> LassoFit:
    """
    Lasso fit at a single lambda on internally standardized columns.

    ``lam = 0`` gives the least-squares fit (minimum-norm when the design is
    rank deficient).
    """
    design = np.atleast_2d(np.asarray(design, dtype=float))
    y = np.asarray(y, dtype=float)
    if lam < 0:
        raise ContractError(f"lambda must be >= 0, got {lam}")
    std = _Standardized.of(design, y)
    if lam == 0:
        coef_std = np.linalg.lstsq(std.X, std.y, rcond=None)[0][:, None]
    else:
        coef_std = _solve_path(std.X, std.y, np.array([lam]))
    coef, intercept = std.original_scale(coef_std)
    coef, intercept = coef[:, 0], float(intercept[0])
    return LassoFit(coef, intercept, float(lam), intercept + design @ coef)


def cv_lasso(design: np.ndarray, y: np.ndarray, folds: int = 5, seed=0) -> LassoFit:
    """
    K-fold cross-validated lasso with a refit on all data.

    Args:
        design: ``n x q`` design matrix (q >= 1).
        y: Response of length n.
        folds: Number of folds, 2 <= folds <= n.
        seed: Seed for the fold assignment.

    Returns:
        LassoFit: Coefficients on the original column scale, the selected
        lambda from the 100-point log grid between lambda_max and
        1e-3 * lambda_max, and fitted values intercept + design @ coefficients.

    Notes:
        Ties in mean CV error go to the larger lambda. A constant response
        returns the intercept-only fit.
    """
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    y = np.asarray(y, dtype=float).ravel()
    n, q = design.shape
    if q < 1:
        raise ContractError("cv_lasso needs at least one column")
    if not 2 <= folds <= n:
        raise ContractError(f"Need 2 <= folds <= n, got folds={folds}, n={n}")
    if np.ptp(y) == 0:
        return _intercept_only(design, y)

    std = _Standardized.of(design, y)
    lam_max = float(np.max(np.abs(std.X.T @ std.y)) / n)
    if lam_max == 0:
        return _intercept_only(design, y)
    grid = lambda_grid(lam_max)

    labels = fold_assignment(n, folds, seed)
    sq_error = np.zeros(grid.size)
    for fold in range(folds):
        test = labels == fold
        train = ~test
        fold_std = _Standardized.of(design[train], y[train])
        coef, intercept = fold_std.original_scale(_solve_path(fold_std.X, fold_std.y, grid))
        pred = intercept[None, :] + design[test] @ coef
        sq_error += ((y[test, None] - pred) ** 2).sum(axis=0)
    cv_error = sq_error / n

    best = int(np.argmin(cv_error))
    coef, intercept = std.original_scale(_solve_path(std.X, std.y, grid[: best + 1])[:, -1:])
    coef, intercept = coef[:, 0], float(intercept[0])
    return LassoFit(
        coefficients=coef,
        intercept=intercept,
        lambda_selected=float(grid[best]),
        fitted_values=intercept + design @ coef,
        lambda_grid=grid,
        cv_error=cv_error,
    )
