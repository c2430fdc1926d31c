import json

import numpy as np
import pytest

from compbcp.dcrt import COMPUTED, SCREENED, PValueMatrix, pvalue_matrix
from compbcp.errors import ContractError, ParameterError, ScreeningCaveat
from compbcp.models import CovariateModel, make_dataset, sample_rows
from compbcp.selection import (
    adaptive_holm,
    benjamini_hochberg,
    benjamini_yekutieli,
    bh_select,
    condition_on_dense,
    holm,
    plain_holm,
)


def _columns(*columns):
    """Square matrix whose column j holds ``columns[j]`` off the diagonal."""
    d = len(columns)
    values = np.full((d, d), np.nan)
    for j, column in enumerate(columns):
        rows = [r for r in range(d) if r != j]
        values[rows, j] = column
    return PValueMatrix.from_values(values)


def _random_matrix(rng, d=6):
    values = rng.uniform(size=(d, d))
    strong = rng.choice(d, size=int(rng.integers(0, d)), replace=False)
    values[:, strong] *= 1e-3
    return PValueMatrix.from_values(np.clip(values, 1e-12, 1.0))


class TestVectorProcedures:
    def test_holm(self):
        np.testing.assert_array_equal(holm([0.01, 0.04, 0.03], 0.05), [0])

    def test_bh_orders_by_pvalue(self):
        np.testing.assert_array_equal(benjamini_hochberg([0.01, 0.04, 0.03], 0.05), [0, 2, 1])

    def test_by_is_stricter(self):
        pvalues = np.array([0.001, 0.01, 0.02, 0.03, 0.5])
        assert set(benjamini_yekutieli(pvalues, 0.1)) <= set(benjamini_hochberg(pvalues, 0.1))

    def test_empty_input(self):
        assert holm([], 0.1).size == 0


class TestAdaptiveHolm:
    def test_all_ones_rejects_nothing(self):
        result = adaptive_holm(_columns((1, 1), (1, 1), (1, 1)), 2, 0.05, "simes")
        assert result.rejected == []
        assert result.trace[0].decision == "stop"

    def test_hand_trace(self):
        matrix = _columns((0.001, 0.001), (0.9, 0.9), (0.9, 0.9))
        result = adaptive_holm(matrix, s_bar=2, alpha=0.05, combiner="simes")
        assert result.rejected == [0]
        assert [step.decision for step in result.trace] == ["reject", "stop"]
        assert result.trace[0].pvalue == pytest.approx(0.001)
        assert result.trace[0].threshold == pytest.approx(0.05 / 3)
        assert result.trace[1].pvalue == pytest.approx(0.9)
        assert result.validity_regime == "prds-assumed"

    def test_ties_go_to_the_lowest_label(self):
        matrix = _columns((0.001, 0.001), (0.001, 0.001), (0.9, 0.9))
        result = adaptive_holm(matrix, 1, 0.05)
        assert result.trace[0].candidate == 0

    def test_overflow_policies(self):
        small = (1e-4, 1e-4, 1e-4)
        matrix = _columns(small, small, small, small)
        stopped = adaptive_holm(matrix, 1, 0.05, overflow_policy="stop")
        assert stopped.rejected == [0]
        everything = adaptive_holm(matrix, 1, 0.05, overflow_policy="reject-all")
        assert sorted(everything.rejected) == [0, 1, 2, 3]
        assert everything.trace[-1].decision == "reject-overflow"

    def test_thresholds_increase(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            result = adaptive_holm(_random_matrix(rng), 5, 0.1)
            thresholds = [step.threshold for step in result.trace]
            assert np.all(np.diff(thresholds) > 0)

    @pytest.mark.parametrize("combiner", ["bonferroni", "simes"])
    def test_contains_plain_holm(self, combiner):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            matrix = _random_matrix(rng)
            s_bar = int(rng.integers(1, 6))
            adaptive = adaptive_holm(matrix, s_bar, 0.1, combiner, overflow_policy="reject-all")
            plain = plain_holm(matrix, s_bar, 0.1, combiner)
            assert plain.rejected_set <= adaptive.rejected_set

    def test_argument_checks(self):
        matrix = _columns((0.5, 0.5), (0.5, 0.5), (0.5, 0.5))
        with pytest.raises(ContractError):
            adaptive_holm(matrix, 3, 0.05)
        with pytest.raises(ParameterError):
            adaptive_holm(matrix, 1, 1.5)
        with pytest.raises(ParameterError):
            adaptive_holm(matrix, 1, 0.05, overflow_policy="maybe")
        with pytest.raises(ContractError):
            adaptive_holm(PValueMatrix.empty([0, 1, 2]), 1, 0.05)


class TestBhSelect:
    def test_hand_example(self):
        matrix = _columns((0.001, 0.001), (0.5, 0.5), (0.9, 0.9))
        result = bh_select(matrix, 2, 0.1)
        assert result.rejected == [0]
        assert [step.decision for step in result.trace] == ["reject", "accept", "accept"]

    def test_all_ones(self):
        assert bh_select(_columns((1, 1), (1, 1), (1, 1)), 2, 0.1).rejected == []

    def test_everything_small(self):
        matrix = _columns((0.01, 0.01), (0.02, 0.02), (0.03, 0.03))
        assert bh_select(matrix, 2, 0.1).rejected == [0, 1, 2]

    def test_by_regime(self):
        matrix = _columns((0.001, 0.001), (0.5, 0.5), (0.9, 0.9))
        result = bh_select(matrix, 1, 0.1, by=True)
        assert result.procedure == "by"
        assert result.validity_regime == "arbitrary-dependence"

    def test_screened_entries_raise_a_caveat(self):
        matrix = _columns((0.001, 0.001), (0.5, 0.5), (0.9, 0.9))
        matrix.values[0, 1] = 1.0
        matrix.status[0, 1] = SCREENED
        with pytest.warns(ScreeningCaveat):
            result = bh_select(matrix, 2, 0.1)
        assert result.caveats

    def test_bonferroni_holm_has_no_screening_caveat(self):
        matrix = _columns((0.001, 0.001), (0.5, 0.5), (0.9, 0.9))
        matrix.status[0, 1] = SCREENED
        matrix.values[0, 1] = 1.0
        assert adaptive_holm(matrix, 2, 0.1, "bonferroni").caveats == []

    def test_save(self, tmp_path):
        matrix = _columns((0.001, 0.001), (0.5, 0.5), (0.9, 0.9))
        bh_select(matrix, 2, 0.1).save(tmp_path, config={"seed": 0})
        assert (tmp_path / "rejected.csv").read_text() == "index\n0\n"
        payload = json.loads((tmp_path / "selection.json").read_text())
        assert payload["procedure"] == "bh"
        assert payload["config"] == {"seed": 0}


class TestDenseConditioning:
    @pytest.fixture
    def data(self):
        model = CovariateModel.dirichlet(np.full(5, 2.0))
        X = sample_rows(model, 40, 2)
        y = np.log(X[:, 0]) + np.random.default_rng(3).standard_normal(40)
        return make_dataset(X, y, model), model

    def test_full_set_is_a_no_op(self, data):
        data, model = data
        full = pvalue_matrix(data, model, K=9, seed=4, progress=False)
        dense = condition_on_dense(data, model, range(5), K=9, seed=4, progress=False)
        np.testing.assert_array_equal(dense.values, full.values)

    def test_subset_counts_and_entries(self, data):
        data, model = data
        full = pvalue_matrix(data, model, K=9, seed=5, progress=False)
        dense = condition_on_dense(data, model, [0, 2, 4], K=9, seed=5, progress=False)
        assert dense.count(COMPUTED) == 6
        np.testing.assert_array_equal(dense.labels, [0, 2, 4])
        np.testing.assert_array_equal(dense.values, full.submatrix([0, 2, 4]).values)
        assert dense.meta["dense"] == [0, 2, 4]

    def test_selection_reports_labels_and_caveat(self, data):
        data, model = data
        dense = condition_on_dense(data, model, [1, 2, 4], K=9, seed=6, progress=False)
        result = bh_select(dense, 2, 0.1)
        assert set(result.rejected) <= {1, 2, 4}
        assert result.labels == [1, 2, 4]
        assert any("dense" in caveat for caveat in result.caveats)

    def test_needs_three_columns(self, data):
        data, model = data
        with pytest.raises(ContractError):
            condition_on_dense(data, model, [0, 1], K=9)

    def test_s_bar_must_fit_the_dense_set(self, data):
        data, model = data
        dense = condition_on_dense(data, model, [0, 1, 2], K=9, seed=7, progress=False)
        with pytest.raises(ContractError):
            bh_select(dense, 3, 0.1)
