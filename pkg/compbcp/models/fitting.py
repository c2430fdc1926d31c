import logging
import warnings

import numpy as np
from scipy.special import digamma, polygamma

from compbcp.errors import ConstraintViolation, ConvergenceWarning, DomainError, ParameterError

logger = logging.getLogger(__name__)

MAX_ITER = 1000
TOL = 1e-8
DIVERGENCE_CAP = 1e10


def inverse_digamma(x: np.ndarray, newton_steps: int = 5) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.where(x >= -2.22, np.exp(x) + 0.5, -1.0 / (x - digamma(1.0)))
    for _ in range(newton_steps):
        y = y - (digamma(y) - x) / polygamma(1, y)
    return y


def _moment_start(X: np.ndarray) -> np.ndarray:
    mean = X.mean(axis=0)
    second = (X[:, 0] ** 2).mean()
    spread = second - mean[0] ** 2
    if spread <= 0:
        return mean * X.shape[1]
    precision = (mean[0] - second) / spread
    return mean * max(precision, 1e-3)


def fit_dirichlet(X: np.ndarray, max_iter: int = MAX_ITER, tol: float = TOL) -> np.ndarray:
    """
    Maximum-likelihood Dirichlet concentration by fixed-point iteration.

    Each step sets alpha_k = digamma^-1(digamma(sum(alpha)) + mean(log X_k)),
    starting from a moment estimate.

    Args:
        X: ``n x p`` matrix of strictly positive rows summing to one, p >= 2.
        max_iter: Iteration cap.
        tol: Stop when the largest coordinate change falls below this.

    Returns:
        np.ndarray: Fitted concentration vector of length p.

    Raises:
        ParameterError: If X has fewer than two columns.
        DomainError: If X has zero or negative entries.
        ConstraintViolation: If a row does not sum to one.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] < 2:
        raise ParameterError(f"A Dirichlet needs at least 2 components, got {X.shape[1]}")
    if np.any(X <= 0):
        raise DomainError(
            "fit_dirichlet needs strictly positive entries; add a pseudo-count to zero entries and re-close the rows"
        )
    sums = X.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-6)
    if bad.size:
        raise ConstraintViolation(int(bad[0]), f"row sums to {sums[bad[0]]:.10g}, expected 1")

    mean_log = np.log(X).mean(axis=0)
    alpha = _moment_start(X)
    converged = False
    for iteration in range(1, max_iter + 1):
        updated = inverse_digamma(digamma(alpha.sum()) + mean_log)
        change = np.max(np.abs(updated - alpha))
        alpha = updated
        if change < tol:
            converged = True
            break
        if alpha.sum() > DIVERGENCE_CAP:
            break

    if not converged:
        message = f"Dirichlet fit stopped after {iteration} iterations without converging (sum alpha = {alpha.sum():.3g})"
        logger.warning(message)
        warnings.warn(message, ConvergenceWarning, stacklevel=2)
    else:
        logger.debug(f"Dirichlet fit converged in {iteration} iterations")
    return alpha
