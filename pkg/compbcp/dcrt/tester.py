"""Bivariate distilled conditional randomization tests.

For a pair {i, j} the response is first distilled on the remaining columns
with a cross-validated lasso; the residual is then scored against the
observed pair and against K conditional resamples of the pair by the R^2 of
a small OLS fit. The distillation fit depends on the unordered pair only, so
P_{i,j} and P_{j,i} share it and differ through their resample streams.
"""

import logging
from typing import Iterator, NamedTuple

import numpy as np

from compbcp.dcrt.matrix import COMPUTED, SCREENED, PValueMatrix, SpeedupConfig
from compbcp.errors import ContractError, DomainError, ParameterError
from compbcp.models.conditional import resample_pair
from compbcp.models.covariates import CovariateModel, DataSet, Transform, apply_transform, check_model_rows
from compbcp.parallel import run_tasks
from compbcp.regression.lasso import cv_lasso
from compbcp.regression.statistics import r2_statistic, r2_statistic_batch
from compbcp.rng import SeedStreams

logger = logging.getLogger(__name__)

DEFAULT_K = 1500
DEFAULT_FOLDS = 5
# Resample statistics within this relative distance of the observed one
# count as ties, and ties count as exceedances.
TIE_TOL = 1e-12


class Entry(NamedTuple):
    value: float
    status: str
    resamples: int


class DcrtTester:
    """
    Computes single entries of the base p-value matrix for one data set.

    Args:
        data: Covariates and response.
        model: Covariate law the rows were drawn from; the rows are checked
            against its constraint.
        K: Resamples per entry.
        seed: Master seed of the keyed streams.
        speedups: Screening configuration; entries themselves only look at
            ``adaptive_resampling`` and ``initial_fraction``.
        transform: Transform applied to covariates in the statistic and the
            distillation design; defaults to the model's.
        folds: Cross-validation folds of the distillation lasso.
        resample_model: Law used to draw resamples when it differs from
            ``model`` (for example a fitted Dirichlet).
    """

    def __init__(
        self,
        data: DataSet,
        model: CovariateModel,
        K: int = DEFAULT_K,
        seed: int = 0,
        speedups: SpeedupConfig | None = None,
        transform: Transform | None = None,
        folds: int = DEFAULT_FOLDS,
        resample_model: CovariateModel | None = None,
    ):
        if K < 1:
            raise ParameterError(f"K must be >= 1, got {K}")
        check_model_rows(data.X, model)
        self.X = data.X
        self.y = data.y
        self.model = model
        self.resample_model = resample_model or model
        if self.resample_model.p != model.p:
            raise ParameterError("The resampling model must have the same dimension as the data model")
        self.K = int(K)
        self.seed = int(seed)
        self.streams = SeedStreams(self.seed)
        self.speedups = speedups or SpeedupConfig()
        self.transform = transform or model.default_transform
        if self.transform == "log" and np.any(self.X <= 0):
            raise DomainError("The log transform needs strictly positive covariates")
        self.features = apply_transform(self.X, self.transform)
        self.folds = min(int(folds), self.X.shape[0])

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def distill(self, i: int, j: int) -> np.ndarray:
        """Residual of y after a CV lasso on every column except i and j."""
        a, b = sorted((int(i), int(j)))
        keep = np.delete(np.arange(self.p), [a, b])
        fit = cv_lasso(self.features[:, keep], self.y, folds=self.folds, seed=self.streams.generator("folds", a, b))
        return self.y - fit.fitted_values

    def _resample_blocks(self, i: int, j: int) -> Iterator[np.ndarray]:
        K1 = self.speedups.initial_resamples(self.K)
        if self.resample_model.family == "logistic-normal":
            # One serial MCMC construction; any prefix of its permuted states
            # is still exchangeable with the observed pair.
            draw = resample_pair(self.resample_model, self.X, i, j, self.K, self.streams.generator("pair", i, j, 0))
            yield draw.pairs[:K1]
            if self.K > K1:
                yield draw.pairs[K1:]
            return
        yield resample_pair(self.resample_model, self.X, i, j, K1, self.streams.generator("pair", i, j, 0)).pairs
        if self.K > K1:
            yield resample_pair(self.resample_model, self.X, i, j, self.K - K1, self.streams.generator("pair", i, j, 1)).pairs

    def entry(self, i: int, j: int, residual: np.ndarray | None = None) -> Entry:
        """
        Base p-value P_{i,j} = (1 + #{k : T_k >= T_obs}) / (K + 1).

        With adaptive resampling the first block alone decides whether the
        entry is abandoned (value 1, status screened).
        """
        if i == j:
            raise ContractError(f"Diagonal entry ({i}, {i}) has no test")
        if residual is None:
            residual = self.distill(i, j)
        t_obs = r2_statistic(residual, self.X[:, [i, j]], self.transform)
        cutoff = t_obs - TIE_TOL * max(1.0, abs(t_obs))

        exceed = used = 0
        for block, pairs in enumerate(self._resample_blocks(i, j)):
            stats = r2_statistic_batch(residual, pairs, self.transform)
            exceed += int(np.sum(stats >= cutoff))
            used += stats.size
            if block == 0 and self.speedups.adaptive_resampling and used < self.K:
                interim = (1 + exceed) / (used + 1)
                if interim > self.speedups.tau_p:
                    logger.debug(f"Entry ({i}, {j}) abandoned at interim p-value {interim:.3f}")
                    return Entry(1.0, SCREENED, used)
        return Entry((1 + exceed) / (used + 1), COMPUTED, used)

    def zero_coefficient_mask(self) -> np.ndarray:
        """Columns with a zero coefficient in one all-data CV lasso of y on every column."""
        fit = cv_lasso(self.features, self.y, folds=self.folds, seed=self.streams.generator("screen"))
        return fit.coefficients == 0


_SCREENED_ENTRY = Entry(1.0, SCREENED, 0)


def _pair_task(tester: DcrtTester, a: int, b: int, zero_mask, symmetrize: bool) -> list[tuple[int, int, Entry]]:
    if zero_mask is not None and zero_mask[a] and zero_mask[b]:
        return [(a, b, _SCREENED_ENTRY), (b, a, _SCREENED_ENTRY)]
    residual = tester.distill(a, b)
    forward = tester.entry(a, b, residual)
    backward = forward if symmetrize else tester.entry(b, a, residual)
    return [(a, b, forward), (b, a, backward)]


def _column_task(tester: DcrtTester, j: int, rows: list[int], zero_mask) -> list[tuple[int, int, Entry]]:
    speedups = tester.speedups
    limit = speedups.early_stop_count(len(rows) + 1)
    large = 0
    out = []
    for i in rows:
        if zero_mask is not None and zero_mask[i] and zero_mask[j]:
            result = _SCREENED_ENTRY
        elif large >= limit:
            result = _SCREENED_ENTRY
        else:
            result = tester.entry(i, j)
        # Only computed entries count toward the stop.
        if result.status == COMPUTED and result.value > speedups.tau_col:
            large += 1
        out.append((i, j, result))
    return out


def pvalue_matrix(
    data: DataSet,
    model: CovariateModel,
    K: int = DEFAULT_K,
    seed: int = 0,
    speedups: SpeedupConfig | None = None,
    symmetrize: bool = False,
    indices=None,
    n_jobs: int | None = None,
    transform: Transform | None = None,
    folds: int = DEFAULT_FOLDS,
    resample_model: CovariateModel | None = None,
    progress: bool = True,
) -> PValueMatrix:
    """
    Matrix of bivariate dCRT base p-values.

    Args:
        data: Covariates (n x p, p >= 3) and response.
        model: Covariate law of the rows.
        K: Resamples per entry.
        seed: Master seed; with the same seed the matrix is identical for any
            ``n_jobs``.
        speedups: Screening shortcuts, all off by default.
        symmetrize: Compute P_{i,j} for i < j only and mirror it.
        indices: Columns to test, in order (default all). Conditioning always
            uses every column outside the pair.
        n_jobs: Worker count; None reads ``COMPBCP_THREADS``.
        transform: Statistic transform; defaults to the model's.
        folds: Distillation CV folds.
        resample_model: Alternative law for drawing resamples.
        progress: Show a progress bar.

    Returns:
        PValueMatrix: Rows and columns follow ``indices``; ``labels`` holds the
        original column numbers.
    """
    speedups = speedups or SpeedupConfig()
    if data.p < 3:
        raise ContractError(f"Need at least 3 covariates, got {data.p}")
    labels = np.arange(data.p) if indices is None else np.asarray(indices, dtype=np.int64)
    if labels.size < 2 or np.unique(labels).size != labels.size:
        raise ContractError("Need at least 2 distinct columns to test")
    if labels.min() < 0 or labels.max() >= data.p:
        raise ContractError(f"Column indices must lie in [0, {data.p})")
    if symmetrize and speedups.column_early_stop:
        raise ParameterError("Column early stop walks whole columns and cannot be combined with symmetrize")

    tester = DcrtTester(data, model, K, seed, speedups, transform, folds, resample_model)
    zero_mask = tester.zero_coefficient_mask() if speedups.lasso_screen else None
    if zero_mask is not None:
        logger.info(f"Lasso screen: {int(zero_mask.sum())} of {data.p} columns have a zero coefficient")

    order = [int(v) for v in labels]
    if speedups.column_early_stop:
        tasks = [(tester, j, sorted(i for i in order if i != j), zero_mask) for j in order]
        results = run_tasks(_column_task, tasks, n_jobs=n_jobs, desc="dCRT columns", unit="column", progress=progress)
    else:
        pairs = [(a, b) for pos, a in enumerate(order) for b in order[pos + 1 :]]
        tasks = [(tester, a, b, zero_mask, symmetrize) for a, b in pairs]
        results = run_tasks(_pair_task, tasks, n_jobs=n_jobs, desc="dCRT pairs", unit="pair", progress=progress)

    matrix = PValueMatrix.empty(labels, seed=tester.seed)
    position = {label: pos for pos, label in enumerate(order)}
    for task_result in results:
        for i, j, entry in task_result:
            a, b = position[i], position[j]
            matrix.values[a, b] = entry.value
            matrix.status[a, b] = entry.status
            matrix.resamples[a, b] = entry.resamples

    matrix.meta = {
        "K": tester.K,
        "family": model.family,
        "resample_family": tester.resample_model.family,
        "transform": tester.transform,
        "folds": tester.folds,
        "symmetrize": symmetrize,
        "speedups": speedups.to_dict(),
    }
    matrix.require_complete()
    matrix.check_lattice()
    logger.info(
        f"p-value matrix over {labels.size} columns: {matrix.count(COMPUTED)} computed, {matrix.count(SCREENED)} screened"
    )
    return matrix


def base_pvalue(
    data: DataSet,
    model: CovariateModel,
    i: int,
    j: int,
    K: int = DEFAULT_K,
    seed: int = 0,
    transform: Transform | None = None,
    folds: int = DEFAULT_FOLDS,
) -> float:
    """Single base p-value P_{i,j} with no screening."""
    if i == j:
        raise ContractError(f"Need i != j, got i = j = {i}")
    return DcrtTester(data, model, K, seed, SpeedupConfig(), transform, folds).entry(i, j).value
