import numpy as np
import pytest

from compbcp.dcrt import PValueMatrix
from compbcp.errors import ContractError, ParameterError
from compbcp.pch import PchInput, bonferroni_pch, column_pch, combine, simes_pch, single_test

BASE = (0.2, 0.25, 0.3)


def _toy_matrix(column=BASE, j=0):
    """p=4 matrix whose column j holds ``column`` and every other entry is 0.9."""
    values = np.full((4, 4), 0.9)
    np.fill_diagonal(values, np.nan)
    rows = [r for r in range(4) if r != j]
    values[rows, j] = column
    return PValueMatrix.from_values(values)


class TestBonferroni:
    def test_worked_example(self):
        assert bonferroni_pch(PchInput(BASE, 1)) == pytest.approx(0.6)
        assert bonferroni_pch(PchInput(BASE, 2)) == pytest.approx(0.5)

    def test_cap(self):
        for s_bar in (1, 2, 3):
            assert bonferroni_pch(PchInput((1.0, 1.0, 1.0), s_bar)) == 1.0

    def test_exclusion_shifts_the_rank(self):
        # Excluding the 0.2 leaves (0.25, 0.3); rank s_bar - 1 = 1 of those.
        assert bonferroni_pch(PchInput(BASE, 2, frozenset({0}))) == pytest.approx(2 * 0.25)


class TestSimes:
    def test_worked_example(self):
        assert simes_pch(PchInput(BASE, 1)) == pytest.approx(0.3)

    def test_s_bar_equal_to_m_is_the_maximum(self):
        assert simes_pch(PchInput(BASE, 3)) == pytest.approx(0.3)

    def test_exclusion(self):
        assert simes_pch(PchInput(BASE, 2, frozenset({1}))) == pytest.approx(0.3)

    def test_invalid_inputs(self):
        with pytest.raises(ContractError):
            PchInput(BASE, 4)
        with pytest.raises(ParameterError):
            PchInput((0.1, 1.5), 1)
        with pytest.raises(ParameterError):
            combine(PchInput(BASE, 1), "fisher")


class TestProperties:
    def test_simes_never_exceeds_bonferroni(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            m = int(rng.integers(1, 12))
            base = rng.uniform(size=m)
            s_bar = int(rng.integers(1, m + 1))
            pch = PchInput(base, s_bar)
            assert simes_pch(pch) <= bonferroni_pch(pch) + 1e-15

    def test_simes_monotone_in_s_bar(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            base = rng.uniform(size=8)
            values = [simes_pch(PchInput(base, s)) for s in range(1, 9)]
            assert np.all(np.diff(values) >= -1e-15)

    @pytest.mark.parametrize("combiner", ["bonferroni", "simes"])
    def test_exclusion_is_monotone(self, combiner):
        rng = np.random.default_rng(2)
        for _ in range(500):
            base = rng.uniform(size=7)
            s_bar = int(rng.integers(2, 8))
            small = frozenset({int(rng.integers(0, 7))})
            large = small | {int(rng.integers(0, 7))}
            if len(large) >= s_bar:
                continue
            assert combine(PchInput(base, s_bar, large), combiner) <= combine(PchInput(base, s_bar, small), combiner) + 1e-15

    def test_full_bound_makes_combiners_agree(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            base = rng.uniform(size=6)
            pch = PchInput(base, 6)
            assert bonferroni_pch(pch) == pytest.approx(base.max())
            assert simes_pch(pch) == pytest.approx(base.max())


class TestSingleTest:
    def test_column_of_ones(self):
        matrix = _toy_matrix(column=(1.0, 1.0, 1.0))
        assert single_test(matrix, 0, 2, "bonferroni") == 1.0
        assert single_test(matrix, 0, 2, "simes") == 1.0

    def test_hand_values(self):
        matrix = _toy_matrix()
        assert single_test(matrix, 0, 2, "bonferroni") == pytest.approx(0.5)
        assert single_test(matrix, 0, 2, "simes") == pytest.approx(0.3)
        assert single_test(matrix, 0, 1, "bonferroni") == pytest.approx(0.6)

    def test_full_bound_is_column_maximum(self):
        matrix = _toy_matrix()
        assert single_test(matrix, 0, 3, "bonferroni") == single_test(matrix, 0, 3, "simes") == pytest.approx(0.3)

    def test_s_bar_limit(self):
        with pytest.raises(ContractError):
            single_test(_toy_matrix(), 0, 4)

    def test_column_pch_vectorizes(self):
        matrix = _toy_matrix()
        values = column_pch(matrix.values, 2, "bonferroni")
        assert values.shape == (4,)
        assert values[0] == pytest.approx(0.5)
        assert values[1] == pytest.approx(1.0)


@pytest.mark.slow
@pytest.mark.parametrize("combiner", ["bonferroni", "simes"])
def test_super_uniform_under_the_null(combiner):
    rng = np.random.default_rng(4)
    draws = rng.uniform(size=(10_000, 19))
    for s_bar in (1, 5, 19):
        pvalues = np.array([combine(PchInput(row, s_bar), combiner) for row in draws])
        for alpha in (0.01, 0.05, 0.1):
            assert np.mean(pvalues <= alpha) <= alpha + 3 * np.sqrt(alpha * (1 - alpha) / 10_000)
