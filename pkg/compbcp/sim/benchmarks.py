"""Univariate dCRT benchmarks: leave-one-out on compositional data, plain
per-column tests on unconstrained data."""

import logging

import numpy as np

from compbcp.dcrt.tester import DEFAULT_FOLDS, TIE_TOL
from compbcp.errors import ConfigurationError
from compbcp.models.conditional import resample_coordinate, resample_single
from compbcp.models.covariates import CovariateModel, DataSet, Transform, apply_transform
from compbcp.regression.lasso import cv_lasso
from compbcp.regression.statistics import r2_statistic, r2_statistic_batch
from compbcp.rng import SeedStreams

logger = logging.getLogger(__name__)


def univariate_dcrt(
    y: np.ndarray,
    design: np.ndarray,
    z: np.ndarray,
    z_resamples: np.ndarray,
    transform: Transform,
    folds: int = DEFAULT_FOLDS,
    fold_seed=None,
) -> float:
    """
    dCRT p-value for one column ``z`` given the columns in ``design``.

    Args:
        y: Response.
        design: Conditioning columns, untransformed.
        z: Observed tested column.
        z_resamples: (K, n) conditional resamples of ``z``.
        transform: Covariate transform for both the distillation and the statistic.
        folds: CV folds of the distillation lasso.
        fold_seed: Seed of the fold assignment.
    """
    fit = cv_lasso(apply_transform(design, transform), y, folds=min(folds, y.size), seed=fold_seed)
    residual = y - fit.fitted_values
    t_obs = r2_statistic(residual, z, transform)
    stats = r2_statistic_batch(residual, z_resamples[..., None], transform)
    exceed = int(np.sum(stats >= t_obs - TIE_TOL * max(1.0, abs(t_obs))))
    return (1 + exceed) / (stats.size + 1)


def loo_pvalues(
    data: DataSet,
    model: CovariateModel,
    K: int,
    seed: int,
    transform: Transform | None = None,
    folds: int = DEFAULT_FOLDS,
    drop: int | None = None,
) -> tuple[np.ndarray, int]:
    """
    Leave-one-out benchmark: drop one column uniformly at random and run a
    univariate dCRT for every other column on the now unconstrained data.

    Returns:
        (p-values of length p with 1 at the dropped column, dropped column)
    """
    transform = transform or model.default_transform
    streams = SeedStreams(seed)
    p = data.p
    if drop is None:
        drop = int(streams.generator("method", 0).integers(p))
    keep = [k for k in range(p) if k != drop]
    pvalues = np.ones(p)
    for i in keep:
        rest = [k for k in keep if k != i]
        resamples = resample_single(model, data.X, i, drop, K, streams.generator("pair", i, drop))
        pvalues[i] = univariate_dcrt(
            data.y, data.X[:, rest], data.X[:, i], resamples, transform, folds, streams.generator("folds", i)
        )
    logger.debug(f"LOO benchmark dropped column {drop}")
    return pvalues, drop


def univariate_pvalues(
    data: DataSet,
    model: CovariateModel,
    K: int,
    seed: int,
    transform: Transform | None = None,
    folds: int = DEFAULT_FOLDS,
) -> np.ndarray:
    """Per-column dCRT p-values given all other columns; unconstrained covariates only."""
    if model.is_sum_constrained:
        raise ConfigurationError(f"Univariate tests are degenerate for {model.family} covariates")
    transform = transform or model.default_transform
    streams = SeedStreams(seed)
    pvalues = np.ones(data.p)
    for i in range(data.p):
        rest = [k for k in range(data.p) if k != i]
        resamples = resample_coordinate(model, data.X, i, K, streams.generator("pair", i))
        pvalues[i] = univariate_dcrt(
            data.y, data.X[:, rest], data.X[:, i], resamples, transform, folds, streams.generator("folds", i)
        )
    return pvalues
