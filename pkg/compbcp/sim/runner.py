"""Replicate generation, method runs and the simulation driver."""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from compbcp.dcrt.matrix import PValueMatrix, SpeedupConfig
from compbcp.dcrt.tester import pvalue_matrix
from compbcp.errors import InvariantBreach
from compbcp.models.covariates import CovariateModel, DataSet, apply_transform, make_dataset, sample_rows
from compbcp.models.fitting import fit_dirichlet
from compbcp.parallel import run_tasks
from compbcp.pch.combiners import single_test
from compbcp.rng import SeedStreams
from compbcp.selection.dense import condition_on_dense
from compbcp.selection.procedures import adaptive_holm, benjamini_hochberg, bh_select, holm, plain_holm
from compbcp.sim.benchmarks import loo_pvalues, univariate_pvalues
from compbcp.sim.methods import MethodSpec, parse_method
from compbcp.sim.metrics import Metrics, SingleTestOutcome, compute_metrics
from compbcp.sim.scenario import SimScenario, densest_columns

logger = logging.getLogger(__name__)

# Sub-stream codes under the "method" purpose.
DESIGNATION, MATRIX, LOO, UNIVARIATE = 0, 1, 2, 3


@dataclass
class Replicate:
    """
    One simulated data set.

    Attributes:
        data: Covariates and response.
        beta: Coefficients of the transformed covariates.
        true_S: Columns with a nonzero coefficient.
        null_column: Column whose single test counts toward type-I error.
        nonnull_column: Column whose single test counts toward power.
        dense: Conditioning set D (all columns when the scenario has none).
    """

    index: int
    snr: float
    data: DataSet
    beta: np.ndarray
    true_S: frozenset[int]
    null_column: int | None
    nonnull_column: int | None
    dense: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))


def generate_replicate(scenario: SimScenario, rep_index: int, master_seed: int, snr: float | None = None) -> Replicate:
    """
    Draw replicate ``rep_index`` at signal strength ``snr``.

    Covariates, support, coefficient draws and noise come from the stream
    ("replicate", rep_index), so the same replicate at two SNR values differs
    only in the scale of its coefficients.
    """
    snr = scenario.snr[0] if snr is None else float(snr)
    streams = SeedStreams(master_seed)
    rng = streams.generator("replicate", rep_index)
    p, s = scenario.p, scenario.s

    X = sample_rows(scenario.model, scenario.n, rng)
    support = rng.choice(p, size=s, replace=False)
    z = rng.standard_normal(s)
    noise = rng.standard_normal(scenario.n)

    beta = np.zeros(p)
    if scenario.test_coefficients and s > 0:
        beta[support[1:]] = z[1:]
        beta[support[0]] = snr
    else:
        beta[support] = snr * z
    y = apply_transform(X, scenario.response_transform) @ beta + noise
    true_S = frozenset(int(k) for k in np.flatnonzero(beta))

    dense = densest_columns(X, scenario.dense_size()) if scenario.dense_fraction is not None else np.arange(p)
    candidates = set(int(k) for k in dense)
    pick = streams.generator("method", rep_index, DESIGNATION)
    nulls = sorted(candidates - true_S)
    if scenario.test_coefficients:
        tested = int(support[0]) if s > 0 else None
        nonnulls = [tested] if tested in true_S and tested in candidates else []
    else:
        nonnulls = sorted(candidates & true_S)
    null_column = int(pick.choice(nulls)) if nulls else None
    nonnull_column = int(pick.choice(nonnulls)) if nonnulls else None

    data = make_dataset(X, y, scenario.model)
    return Replicate(rep_index, snr, data, beta, true_S, null_column, nonnull_column, dense)


def _resample_model(scenario: SimScenario, data: DataSet) -> CovariateModel | None:
    if not scenario.resample_fit:
        return None
    return CovariateModel.dirichlet(fit_dirichlet(data.X))


def _single(matrix: PValueMatrix, column: int | None, s_bar: int, combiner: str, alpha: float) -> bool | None:
    if column is None or column not in set(matrix.labels.tolist()):
        return None
    return single_test(matrix, matrix.position(column), s_bar, combiner) <= alpha


def _bcp(spec: MethodSpec, matrix: PValueMatrix, replicate: Replicate, scenario: SimScenario):
    s_bar = spec.s_bar(scenario.p, scenario.s, matrix.size)
    if spec.procedure is None:
        return SingleTestOutcome(
            _single(matrix, replicate.null_column, s_bar, scenario.combiner, scenario.alpha_single),
            _single(matrix, replicate.nonnull_column, s_bar, scenario.combiner, scenario.alpha_single),
        )
    if spec.procedure == "BH":
        return bh_select(matrix, s_bar, scenario.alpha_fdr)
    if spec.procedure == "BY":
        return bh_select(matrix, s_bar, scenario.alpha_fdr, by=True)
    if spec.procedure == "Holm":
        return adaptive_holm(matrix, s_bar, scenario.alpha_fwer, scenario.combiner)
    return plain_holm(matrix, s_bar, scenario.alpha_fwer, scenario.combiner)


def _benchmark(spec: MethodSpec, pvalues: np.ndarray, tested: list[int], replicate: Replicate, scenario: SimScenario):
    if spec.procedure is None:

        def reject(column):
            if column is None:
                return None
            return bool(pvalues[column] <= scenario.alpha_single)

        return SingleTestOutcome(reject(replicate.null_column), reject(replicate.nonnull_column))
    select = benjamini_hochberg if spec.procedure == "BH" else holm
    alpha = scenario.alpha_fdr if spec.procedure == "BH" else scenario.alpha_fwer
    hits = select(pvalues[tested], alpha)
    return [tested[h] for h in hits]


def run_methods(replicate: Replicate, scenario: SimScenario, seed: int, methods=None) -> dict:
    """
    Run every method of the scenario on one replicate.

    Returns:
        dict: Method name to a ``SelectionResult`` (BCP selection), a list of
        rejected columns (benchmark selection) or a ``SingleTestOutcome``.
    """
    specs = [parse_method(m) for m in methods] if methods is not None else scenario.method_specs()
    streams = SeedStreams(seed)
    data = replicate.data
    results: dict = {}

    bcp = [spec for spec in specs if spec.family == "BCP"]
    if bcp:
        options = dict(
            K=scenario.K,
            seed=streams.child_seed("method", replicate.index, MATRIX),
            speedups=scenario.speedups,
            transform=scenario.response_transform,
            folds=scenario.folds,
            resample_model=_resample_model(scenario, data),
            n_jobs=1,
            progress=False,
        )
        full = pvalue_matrix(data, scenario.model, **options) if any(not spec.dense for spec in bcp) else None
        dense = None
        if any(spec.dense for spec in bcp):
            if full is not None:
                dense = full.submatrix(replicate.dense)
                dense.meta["dense"] = replicate.dense.tolist()
            else:
                dense = condition_on_dense(data, scenario.model, replicate.dense, **options)
        for spec in bcp:
            results[spec.name] = _bcp(spec, dense if spec.dense else full, replicate, scenario)

    loo = [spec for spec in specs if spec.family == "LOO"]
    if loo:
        pvalues, drop = loo_pvalues(
            data,
            scenario.model,
            scenario.K,
            streams.child_seed("method", replicate.index, LOO),
            scenario.response_transform,
            scenario.folds,
        )
        tested = [k for k in range(data.p) if k != drop]
        for spec in loo:
            results[spec.name] = _benchmark(spec, pvalues, tested, replicate, scenario)

    univariate = [spec for spec in specs if spec.family == "Univariate"]
    if univariate:
        pvalues = univariate_pvalues(
            data,
            scenario.model,
            scenario.K,
            streams.child_seed("method", replicate.index, UNIVARIATE),
            scenario.response_transform,
            scenario.folds,
        )
        for spec in univariate:
            results[spec.name] = _benchmark(spec, pvalues, list(range(data.p)), replicate, scenario)
    return results


def _replicate_task(scenario: SimScenario, rep_index: int, seed: int) -> list[tuple[float, dict]]:
    out = []
    for snr in scenario.snr:
        replicate = generate_replicate(scenario, rep_index, seed, snr)
        results = run_methods(replicate, scenario, seed)
        out.append((snr, compute_metrics(results, replicate.true_S)))
    return out


def run_simulation(
    scenario: SimScenario,
    seed: int = 0,
    reps: int | None = None,
    n_jobs: int | None = None,
    progress: bool = True,
) -> Metrics:
    """
    Run ``reps`` replicates of the scenario at every SNR and aggregate.

    Replicates run in parallel; the metrics depend on (scenario, seed, reps)
    only.
    """
    reps = scenario.reps if reps is None else int(reps)
    logger.info(f"Simulating {scenario.name}: {reps} replicates x {len(scenario.snr)} SNR values, seed {seed}")
    tasks = [(scenario, rep, seed) for rep in range(reps)]
    per_rep = run_tasks(_replicate_task, tasks, n_jobs=n_jobs, desc=scenario.name, unit="rep", progress=progress)
    metrics = Metrics.aggregate(item for rep_result in per_rep for item in rep_result)
    for row in metrics.rows:
        if not 0.0 <= row["value"] <= 1.0:
            raise InvariantBreach(f"Metric {row['metric']} of {row['method']} is {row['value']}, outside [0, 1]")
    return metrics


# --- speedup study -----------------------------------------------------------


def jaccard(a, b) -> float:
    """|A & B| / |A | B|, with 1 for two empty sets."""
    a, b = set(a), set(b)
    union = a | b
    return len(a & b) / len(union) if union else 1.0


@dataclass
class SpeedupStudy:
    jaccard: list[float]
    time_ratio: list[float]

    @property
    def mean_jaccard(self) -> float:
        return float(np.mean(self.jaccard))

    @property
    def median_speedup(self) -> float:
        return float(np.median(self.time_ratio))


def _speedup_task(scenario: SimScenario, rep_index: int, seed: int, snr: float, speedups: SpeedupConfig, method: str):
    replicate = generate_replicate(scenario, rep_index, seed, snr)
    spec = parse_method(method)
    options = dict(
        K=scenario.K,
        seed=SeedStreams(seed).child_seed("method", rep_index, MATRIX),
        transform=scenario.response_transform,
        folds=scenario.folds,
        n_jobs=1,
        progress=False,
    )
    timings, rejections = [], []
    for config in (SpeedupConfig(), speedups):
        start = time.perf_counter()
        matrix = pvalue_matrix(replicate.data, scenario.model, speedups=config, **options)
        timings.append(time.perf_counter() - start)
        s_bar = spec.s_bar(scenario.p, scenario.s, matrix.size)
        rejections.append(bh_select(matrix, s_bar, scenario.alpha_fdr).rejected)
    return jaccard(*rejections), timings[0] / max(timings[1], 1e-12)


def speedup_study(
    scenario: SimScenario,
    reps: int,
    seed: int = 0,
    snr: float | None = None,
    speedups: SpeedupConfig | None = None,
    method: str = "BCP(p/2)-BH",
    n_jobs: int | None = 1,
    progress: bool = True,
) -> SpeedupStudy:
    """
    Paired runs of the base p-value matrix with and without speedups.

    Each replicate reports the Jaccard index between the two rejection sets
    of ``method`` and the wall-clock ratio unscreened / screened. Timings are
    only comparable with ``n_jobs=1``.
    """
    snr = scenario.snr[-1] if snr is None else snr
    speedups = speedups or SpeedupConfig.all()
    tasks = [(scenario, rep, seed, snr, speedups, method) for rep in range(reps)]
    results = run_tasks(_speedup_task, tasks, n_jobs=n_jobs, desc="speedup study", unit="rep", progress=progress)
    study = SpeedupStudy([r[0] for r in results], [r[1] for r in results])
    logger.info(f"Speedup study: mean Jaccard {study.mean_jaccard:.3f}, median speedup {study.median_speedup:.2f}x")
    return study
