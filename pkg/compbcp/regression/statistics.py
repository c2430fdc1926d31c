import numpy as np

from compbcp.errors import DomainError
from compbcp.models.covariates import Transform, apply_transform

PINV_RCOND = 1e-12


def r2_statistic_batch(residual: np.ndarray, Z: np.ndarray, transform: Transform = "log") -> np.ndarray:
    """
    R^2 of the OLS regression of ``residual`` on transform(Z) plus an intercept,
    for a whole stack of designs at once.

    Args:
        residual: Length-n vector.
        Z: Array of shape (K, n, d); each slice is one design.
        transform: ``log`` (strictly positive Z), ``log1p`` or ``identity``.

    Returns:
        np.ndarray: K values in [0, 1]. Rank-deficient designs are projected
        onto their attainable column space; a constant residual gives 0.
    """
    residual = np.asarray(residual, dtype=float).ravel()
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 2:
        Z = Z[:, :, None]
    if transform == "log" and np.any(Z <= 0):
        raise DomainError("The log transform needs strictly positive covariates; use log1p for counts")

    centered = residual - residual.mean()
    total = centered @ centered
    if total == 0:
        return np.zeros(Z.shape[0])

    W = apply_transform(Z, transform)
    W = W - W.mean(axis=1, keepdims=True)
    gram = np.einsum("kni,knj->kij", W, W)
    cross = np.einsum("kni,n->ki", W, centered)
    explained = np.einsum("ki,kij,kj->k", cross, np.linalg.pinv(gram, rcond=PINV_RCOND, hermitian=True), cross)
    return np.clip(explained / total, 0.0, 1.0)


def r2_statistic(residual: np.ndarray, z: np.ndarray, transform: Transform = "log") -> float:
    """R^2 of ``residual`` regressed on the transformed columns of ``z`` (n x d) plus intercept."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    return float(r2_statistic_batch(residual, z[None, :, :], transform)[0])
