import logging

import numpy as np

from compbcp.dcrt.matrix import PValueMatrix, SpeedupConfig
from compbcp.dcrt.tester import DEFAULT_K, pvalue_matrix
from compbcp.errors import ContractError
from compbcp.models.covariates import CovariateModel, DataSet

logger = logging.getLogger(__name__)


def condition_on_dense(
    data: DataSet,
    model: CovariateModel,
    dense,
    K: int = DEFAULT_K,
    seed: int = 0,
    speedups: SpeedupConfig | None = None,
    **kwargs,
) -> PValueMatrix:
    """
    Base p-values for the pairs inside a dense column subset D.

    Each test still conditions on every column outside its pair, so columns
    outside D are conditioned on and never tested. Selection on the result
    targets the Markov-boundary columns inside D.

    Args:
        data: Covariates and response.
        model: Covariate law.
        dense: Column indices of D, |D| >= 3.
        K: Resamples per entry.
        seed: Master seed; entries match those of the full matrix.
        speedups: Screening shortcuts.
        **kwargs: Passed to ``pvalue_matrix`` (n_jobs, transform, folds, ...).

    Returns:
        PValueMatrix: |D| x |D| matrix labelled by the original indices, with
        ``meta["dense"]`` set.
    """
    dense = np.unique(np.asarray(dense, dtype=np.int64))
    if dense.size < 3:
        raise ContractError(f"The dense set needs at least 3 columns, got {dense.size}")
    logger.info(f"Conditioning on {data.p - dense.size} sparse columns, testing {dense.size}")
    matrix = pvalue_matrix(data, model, K=K, seed=seed, speedups=speedups, indices=dense, **kwargs)
    matrix.meta["dense"] = dense.tolist()
    return matrix
