from fractions import Fraction

import pytest

from compbcp.errors import ConfigurationError, ConstraintViolation, ContractError, ParameterError
from compbcp.oracle import (
    Atom,
    JointTable,
    canonical_tables,
    compute_S,
    compute_S_D,
    conditionally_independent,
    enumerate_markov_boundaries,
    is_ci,
    one_hot_table,
    random_table,
    verify_boundary_containment,
    verify_dense_identity,
    verify_weak_union,
)


@pytest.fixture(scope="module")
def tables():
    return canonical_tables()


class TestJointTable:
    def test_mass_must_sum_to_one(self):
        with pytest.raises(ParameterError):
            JointTable([Atom((1, 0), 0, Fraction(1, 2))], 2, "one-hot")

    def test_one_hot_constraint(self):
        with pytest.raises(ConstraintViolation):
            JointTable([Atom((1, 1), 0, Fraction(1))], 2, "one-hot")

    def test_duplicate_atoms_merge(self):
        table = JointTable([((1, 0), 0, "1/4"), ((1, 0), 0, "1/4"), ((0, 1), 1, "1/2")], 2, "one-hot")
        assert len(table.atoms) == 2
        assert table.is_exact

    def test_from_dict(self):
        document = {
            "p": 2,
            "constraint": "one-hot",
            "atoms": [{"x": [1, 0], "y": 1, "prob": "3/4"}, {"x": [0, 1], "y": 0, "prob": 0.25}],
        }
        table = JointTable.from_dict(document)
        assert table.p == 2
        assert not table.is_exact

    def test_from_dict_needs_atoms(self):
        with pytest.raises(ConfigurationError):
            JointTable.from_dict({"p": 2})


class TestConditionalIndependence:
    def test_one_hot_example(self, tables):
        table = tables["one-hot"]
        assert is_ci(table, {1, 2})
        assert not is_ci(table, {0, 1})

    def test_single_coordinate_is_determined(self, tables):
        for name in ("one-hot", "two-boundaries", "one-hot-4"):
            table = tables[name]
            assert all(is_ci(table, {k}) for k in range(table.p))

    def test_independent_response(self, tables):
        table = tables["independent"]
        assert all(conditionally_independent(table, A) for A in ({0}, {0, 1}, {0, 1, 2}, set()))

    def test_is_ci_needs_proper_subset(self, tables):
        with pytest.raises(ContractError):
            is_ci(tables["one-hot"], {0, 1, 2})
        with pytest.raises(ContractError):
            is_ci(tables["one-hot"], set())

    def test_relabeling_and_permutation(self):
        for seed in range(20):
            table = random_table(5, seed)
            S = compute_S(table)
            assert compute_S(table.relabeled({0: "low", 1: "high"})) == S
            order = [3, 0, 4, 1, 2]
            assert compute_S(table.permuted(order)) == frozenset(k for k, src in enumerate(order) if src in S)


class TestTargets:
    def test_one_hot(self, tables):
        table = tables["one-hot"]
        assert compute_S(table) == {0}
        report = enumerate_markov_boundaries(table)
        assert report.nontrivial == [frozenset({0})]
        assert report.unique_nontrivial
        assert report.matches_S

    def test_two_boundaries(self, tables):
        table = tables["two-boundaries"]
        assert compute_S(table) == frozenset()
        report = enumerate_markov_boundaries(table)
        assert report.nontrivial == [frozenset({0, 1}), frozenset({2, 3})]
        assert not report.unique_nontrivial
        assert not report.matches_S

    def test_independent(self, tables):
        table = tables["independent"]
        assert compute_S(table) == frozenset()
        report = enumerate_markov_boundaries(table)
        assert report.boundaries == [frozenset()]

    def test_dense_targets(self, tables):
        assert compute_S_D(tables["one-hot"], range(3)) == compute_S(tables["one-hot"])
        assert compute_S_D(tables["one-hot-4"], {0, 1, 2}) == {0}
        # Exactly one column of D outside S: every column of D is flagged.
        assert compute_S_D(tables["one-hot"], {0, 1}) == {0, 1}

    def test_dense_identity(self, tables):
        assert verify_dense_identity(tables["one-hot-4"], {0, 1, 2})
        assert not verify_dense_identity(tables["one-hot"], {0, 1})

    def test_report_dict(self, tables):
        payload = enumerate_markov_boundaries(tables["two-boundaries"]).to_dict()
        assert [b["members"] for b in payload["boundaries"]] == [[0, 1], [2, 3]]
        assert payload["unique_nontrivial"] is False

    def test_enumeration_limit(self):
        with pytest.raises(ContractError):
            enumerate_markov_boundaries(one_hot_table([1] * 17, [Fraction(1, 2)] * 17))

    def test_small_p(self, tables):
        with pytest.raises(ContractError):
            compute_S(one_hot_table([1, 1], [Fraction(1, 3), Fraction(2, 3)]))


class TestRandomTables:
    @pytest.mark.parametrize("constraint", ["one-hot", "sum"])
    def test_boundaries_contain_S(self, constraint):
        for seed in range(100):
            p = 3 + seed % 4
            table = random_table(p, seed, constraint=constraint)
            verify_boundary_containment(table)

    def test_weak_union(self):
        for seed in range(30):
            table = random_table(4, seed)
            verify_weak_union(table, {0}, {1})
            verify_weak_union(table, {1, 2}, {3})

    def test_tables_are_exact(self):
        table = random_table(4, 1)
        assert table.is_exact
        assert sum(a.prob for a in table.atoms) == 1
