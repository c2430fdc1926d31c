import numpy as np
import pytest

from compbcp.errors import ConfigurationError, ParameterError
from compbcp.models import CovariateModel, make_dataset, sample_rows, toeplitz_covariance
from compbcp.selection import SelectionResult
from compbcp.sim import (
    METRIC_KINDS,
    PRESETS,
    Metrics,
    SimScenario,
    SingleTestOutcome,
    compute_metrics,
    densest_columns,
    false_discovery_proportion,
    generate_replicate,
    jaccard,
    loo_pvalues,
    parse_method,
    preset,
    run_methods,
    run_simulation,
    scenario_from_dict,
    sparse_dm_alpha,
    speedup_study,
    univariate_pvalues,
)

SMALL_METHODS = ("BCP(p-1)", "BCP(p/2)-BH", "BCP(s+1)-Holm", "BCP(p/2)-PlainHolm", "LOO", "LOO-BH")


def _small_scenario(**overrides):
    options = dict(
        name="small",
        model=CovariateModel.dirichlet(np.full(5, 2.0)),
        n=30,
        s=1,
        snr=(0.0, 1.0),
        reps=3,
        K=9,
        methods=SMALL_METHODS,
    )
    options.update(overrides)
    return SimScenario(**options)


class TestMethods:
    def test_parse(self):
        spec = parse_method("BCP(p/2)-BH@dense")
        assert (spec.family, spec.s_bar_token, spec.procedure, spec.dense) == ("BCP", "p/2", "BH", True)
        assert parse_method("LOO-Holm").family == "LOO"
        assert parse_method("BCP(s+1)").procedure is None

    def test_unknown_method(self):
        with pytest.raises(ConfigurationError):
            parse_method("Knockoffs-BH")

    def test_s_bar_resolution(self):
        assert parse_method("BCP(p-1)").s_bar(20, 3, 20) == 19
        assert parse_method("BCP(p/2)").s_bar(20, 3, 20) == 10
        assert parse_method("BCP(s+1)").s_bar(20, 3, 20) == 4
        # Capped by the number of tested columns.
        assert parse_method("BCP(p/2)@dense").s_bar(30, 3, 6) == 5


class TestScenario:
    def test_presets(self):
        assert {"dirichlet-desk", "dm-sparse-desk", "dirichlet-single", "mvn-desk"} <= set(PRESETS)
        desk = preset("dirichlet-desk")
        assert (desk.p, desk.n, desk.s, desk.K) == (20, 100, 3, 500)
        assert preset("dm-sparse-desk").dense_size() == 20

    def test_unknown_preset_lists_choices(self):
        with pytest.raises(ConfigurationError, match="dirichlet-desk"):
            preset("nope")

    def test_univariate_needs_unconstrained_covariates(self):
        with pytest.raises(ConfigurationError):
            _small_scenario(methods=("Univariate-BH",))

    def test_half_bound_needs_small_support(self):
        with pytest.raises(ParameterError):
            _small_scenario(s=2)

    def test_dense_methods_need_a_fraction(self):
        with pytest.raises(ParameterError):
            _small_scenario(methods=("BCP(s+1)-BH@dense",))

    def test_from_dict_overrides_preset(self):
        scenario = scenario_from_dict({"preset": "dirichlet-desk", "reps": 5, "snr": [1.0], "speedups": "none"})
        assert scenario.reps == 5
        assert scenario.snr == (1.0,)
        assert not scenario.speedups.any
        assert scenario.K == 500

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigurationError):
            scenario_from_dict({"preset": "dirichlet-desk", "colour": "blue"})

    def test_sparse_concentration(self):
        j = np.arange(1, 101)
        np.testing.assert_allclose(sparse_dm_alpha(100), 1 / (1 + np.exp((j - 50) / 5)))

    def test_densest_columns(self):
        X = np.array([[1, 0, 2, 0], [1, 0, 0, 3], [1, 1, 0, 3]])
        np.testing.assert_array_equal(densest_columns(X, 2), [0, 3])
        np.testing.assert_array_equal(densest_columns(X, 3), [0, 1, 3])


class TestReplicates:
    def test_zero_signal_is_the_global_null(self):
        replicate = generate_replicate(_small_scenario(), 0, 1, snr=0.0)
        assert replicate.true_S == frozenset()
        np.testing.assert_array_equal(replicate.beta, 0.0)
        assert replicate.nonnull_column is None

    def test_common_random_numbers(self):
        scenario = _small_scenario()
        weak = generate_replicate(scenario, 2, 1, snr=1.0)
        strong = generate_replicate(scenario, 2, 1, snr=2.0)
        np.testing.assert_array_equal(weak.data.X, strong.data.X)
        np.testing.assert_allclose(strong.beta, 2 * weak.beta)
        assert weak.true_S == strong.true_S

    def test_designated_columns(self):
        replicate = generate_replicate(_small_scenario(), 3, 1, snr=1.0)
        assert replicate.null_column not in replicate.true_S
        assert replicate.nonnull_column in replicate.true_S

    def test_single_test_design(self):
        scenario = _small_scenario(s=2, methods=("BCP(p-1)",), test_coefficients=True)
        replicate = generate_replicate(scenario, 0, 4, snr=0.7)
        assert replicate.beta[replicate.nonnull_column] == pytest.approx(0.7)
        assert len(replicate.true_S) == 2

    def test_run_methods_shapes(self):
        scenario = _small_scenario()
        replicate = generate_replicate(scenario, 0, 5, snr=1.0)
        results = run_methods(replicate, scenario, 5)
        assert set(results) == set(SMALL_METHODS)
        assert isinstance(results["BCP(p-1)"], SingleTestOutcome)
        assert isinstance(results["BCP(p/2)-BH"], SelectionResult)
        assert isinstance(results["LOO-BH"], list)


class TestBenchmarks:
    def test_loo_marks_the_dropped_column(self):
        model = CovariateModel.dirichlet(np.full(4, 2.0))
        X = sample_rows(model, 30, 0)
        data = make_dataset(X, np.random.default_rng(1).standard_normal(30), model)
        pvalues, drop = loo_pvalues(data, model, K=9, seed=2)
        assert pvalues[drop] == 1.0
        assert np.all((pvalues > 0) & (pvalues <= 1))
        again, _ = loo_pvalues(data, model, K=9, seed=2)
        np.testing.assert_array_equal(pvalues, again)

    def test_univariate_on_gaussian_data(self):
        model = CovariateModel.multivariate_normal(np.zeros(4), toeplitz_covariance(4, 0.5))
        X = sample_rows(model, 40, 3)
        y = 3 * X[:, 0] + np.random.default_rng(4).standard_normal(40)
        pvalues = univariate_pvalues(make_dataset(X, y, model), model, K=19, seed=5)
        assert pvalues[0] == pytest.approx(1 / 20)

    def test_univariate_refuses_compositions(self):
        model = CovariateModel.dirichlet(np.full(4, 2.0))
        data = make_dataset(sample_rows(model, 10, 0), np.zeros(10), model)
        with pytest.raises(ConfigurationError):
            univariate_pvalues(data, model, K=9, seed=0)


class TestMetrics:
    def test_empty_selection(self):
        metrics = compute_metrics({"m": []}, {1, 2})
        assert metrics["m"] == {"fdr": 0.0, "fwer": 0.0, "average_power": 0.0}

    def test_exact_selection(self):
        S = set(range(10))
        metrics = compute_metrics({"m": sorted(S)}, S)
        assert metrics["m"]["fdr"] == 0.0
        assert metrics["m"]["average_power"] == 1.0

    def test_one_false_of_four(self):
        assert false_discovery_proportion([1, 2, 3, 9], {1, 2, 3}) == 0.25

    def test_single_test_outcomes(self):
        metrics = compute_metrics({"t": SingleTestOutcome(True, None)}, {0})
        assert metrics["t"] == {"type1_error": 1.0}

    def test_aggregate(self):
        per_rep = [
            (1.0, {"m": {"fdr": 0.0, "fwer": 0.0}}),
            (1.0, {"m": {"fdr": 0.5, "fwer": 1.0}}),
        ]
        metrics = Metrics.aggregate(per_rep)
        fdr = metrics.value("m", 1.0, "fdr")
        assert fdr["value"] == pytest.approx(0.25)
        assert fdr["se"] == pytest.approx(0.25)
        fwer = metrics.value("m", 1.0, "fwer")
        assert fwer["se"] == pytest.approx(np.sqrt(0.25 / 2))
        assert fwer["reps"] == 2

    def test_csv(self, tmp_path):
        metrics = Metrics.aggregate([(0.5, {"m": {"fdr": 0.0}})])
        path = metrics.to_csv(tmp_path / "metrics.csv")
        assert path.read_text().splitlines() == ["method,snr,metric,value,se,reps", "m,0.5,fdr,0.0,0.0,1"]


class TestSimulation:
    def test_every_metric_kind(self):
        metrics = run_simulation(_small_scenario(), seed=0, n_jobs=1, progress=False)
        assert metrics.kinds() == set(METRIC_KINDS)
        assert all(0.0 <= row["value"] <= 1.0 for row in metrics.rows)

    def test_worker_count_does_not_matter(self):
        scenario = _small_scenario(reps=2)
        serial = run_simulation(scenario, seed=3, n_jobs=1, progress=False)
        parallel = run_simulation(scenario, seed=3, n_jobs=2, progress=False)
        assert serial.rows == parallel.rows

    def test_speedup_study(self):
        scenario = _small_scenario(snr=(2.0,))
        study = speedup_study(scenario, reps=2, seed=1, progress=False)
        assert len(study.jaccard) == 2
        assert all(0.0 <= value <= 1.0 for value in study.jaccard)
        assert study.median_speedup > 0

    def test_jaccard(self):
        assert jaccard([], []) == 1.0
        assert jaccard([1, 2], [2, 3]) == pytest.approx(1 / 3)


# --- desk-scale acceptance ---------------------------------------------------


def _two_se(row):
    return 2 * row["se"]


@pytest.mark.slow
def test_desk_error_control_and_power():
    scenario = preset("dirichlet-desk")
    metrics = run_simulation(scenario, seed=2024, progress=False)
    for snr in scenario.snr:
        for method in ("BCP(p/2)-BH", "BCP(s+1)-BH"):
            row = metrics.value(method, snr, "fdr")
            assert row["value"] <= 0.10 + _two_se(row)
        row = metrics.value("BCP(p/2)-Holm", snr, "fwer")
        assert row["value"] <= 0.10 + _two_se(row)
        adaptive = metrics.value("BCP(p/2)-Holm", snr, "average_power")["value"]
        plain = metrics.value("BCP(p/2)-PlainHolm", snr, "average_power")["value"]
        assert adaptive >= plain
    power = [metrics.value("BCP(p/2)-BH", snr, "average_power")["value"] for snr in scenario.snr]
    assert np.all(np.diff(power) > 0)
    assert power[-1] > 0.1


@pytest.mark.slow
def test_leave_one_out_is_not_calibrated():
    scenario = preset("dirichlet-single")
    metrics = run_simulation(scenario, seed=7, progress=False)
    loo = metrics.value("LOO", 2.0, "type1_error")
    assert loo["value"] > 0.05 + _two_se(loo)
    bcp = metrics.value("BCP(p-1)", 2.0, "type1_error")
    assert bcp["value"] <= 0.05 + _two_se(bcp)


@pytest.mark.slow
def test_speedups_keep_rejections():
    scenario = preset("dirichlet-desk")
    study = speedup_study(scenario, reps=50, seed=11, snr=2.0, progress=False)
    assert study.mean_jaccard >= 0.9
    assert study.median_speedup >= 3.0


@pytest.mark.slow
def test_conditioning_on_dense_columns_helps():
    scenario = preset("dm-sparse-desk")
    metrics = run_simulation(scenario, seed=5, progress=False)
    dense = metrics.value("BCP(s+1)-BH@dense", 2.0, "average_power")["value"]
    full = metrics.value("BCP(s+1)-BH", 2.0, "average_power")["value"]
    assert dense >= full
    for method in ("BCP(s+1)-BH", "BCP(s+1)-BH@dense"):
        row = metrics.value(method, 2.0, "fdr")
        assert row["value"] <= 0.10 + _two_se(row)
    row = metrics.value("BCP(s+1)-Holm@dense", 2.0, "fwer")
    assert row["value"] <= 0.10 + _two_se(row)
