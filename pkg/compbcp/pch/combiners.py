"""Partial-conjunction combiners.

A column of base p-values P_{i,j} (i != j) tests the partial conjunction
"fewer than m + 1 - s_bar of the bivariate nulls in column j are false". Both
combiners work on order statistics of the column after an optional exclusion
set A of rows has been removed, which is how the adaptive Holm procedure
feeds back its current rejections.
"""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from compbcp.errors import ContractError, ParameterError

Combiner = Literal["bonferroni", "simes"]
COMBINERS: tuple[str, ...] = ("bonferroni", "simes")


@dataclass(frozen=True, eq=False)
class PchInput:
    """
    Attributes:
        base: The m base p-values of one column (diagonal removed).
        s_bar: Strict upper bound on the number of non-nulls, 1 <= s_bar <= m.
        exclude: Positions in ``base`` to drop before combining; |A| < s_bar.
    """

    base: np.ndarray
    s_bar: int
    exclude: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float).ravel()
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exclude", frozenset(int(a) for a in self.exclude))
        if base.size == 0:
            raise ContractError("A partial-conjunction test needs at least one base p-value")
        if np.any(np.isnan(base)) or np.any(base <= 0) or np.any(base > 1):
            raise ParameterError("Base p-values must lie in (0, 1]")
        if not 1 <= self.s_bar <= base.size:
            raise ContractError(f"s_bar must be in [1, {base.size}], got {self.s_bar}")
        if any(not 0 <= a < base.size for a in self.exclude):
            raise ContractError(f"Exclusion positions must lie in [0, {base.size})")
        if len(self.exclude) >= self.s_bar:
            raise ContractError(f"Exclusion set of size {len(self.exclude)} needs s_bar > {len(self.exclude)}, got {self.s_bar}")

    @property
    def m(self) -> int:
        return self.base.size

    def remaining(self) -> np.ndarray:
        """Base values outside the exclusion set, sorted ascending (stable)."""
        keep = np.ones(self.m, dtype=bool)
        keep[list(self.exclude)] = False
        return np.sort(self.base[keep], kind="stable")


def bonferroni_pch(pch: PchInput) -> float:
    """(m + 1 - s_bar) times the (s_bar - |A|)-th smallest remaining value, capped at 1."""
    ordered = pch.remaining()
    rank = pch.s_bar - len(pch.exclude)
    if rank > ordered.size:
        raise ContractError(f"Rank {rank} exceeds the {ordered.size} remaining base values")
    return float(min(1.0, (pch.m + 1 - pch.s_bar) * ordered[rank - 1]))


def simes_pch(pch: PchInput) -> float:
    """
    Simes partial-conjunction p-value with exclusion.

    With a = |A| and P_(i) the order statistics of the remaining values,
    returns min over i in [s_bar - a, m - a] of
    (m + 1 - s_bar) / (i - s_bar + 1 + a) * P_(i), capped at 1.
    """
    ordered = pch.remaining()
    a = len(pch.exclude)
    ranks = np.arange(pch.s_bar - a, pch.m - a + 1)
    if ranks.size == 0 or ranks[0] < 1:
        raise ContractError(f"No admissible ranks for s_bar={pch.s_bar}, |A|={a}")
    terms = (pch.m + 1 - pch.s_bar) / (ranks - pch.s_bar + 1 + a) * ordered[ranks - 1]
    return float(min(1.0, terms.min()))


_COMBINE = {"bonferroni": bonferroni_pch, "simes": simes_pch}


def combine(pch: PchInput, combiner: Combiner) -> float:
    try:
        fn = _COMBINE[combiner]
    except KeyError:
        raise ParameterError(f"Unknown combiner {combiner!r}; expected one of {COMBINERS}") from None
    return fn(pch)


def column_input(values: np.ndarray, j: int, s_bar: int, exclude=()) -> PchInput:
    """
    PchInput for column j of a square matrix of base p-values.

    ``exclude`` holds matrix row indices; the diagonal row j is never part of
    the column and must not be excluded.
    """
    values = np.asarray(values, dtype=float)
    d = values.shape[0]
    if not 0 <= j < d:
        raise ContractError(f"Column {j} out of range for a {d}x{d} matrix")
    rows = np.delete(np.arange(d), j)
    position = {int(r): k for k, r in enumerate(rows)}
    try:
        positions = frozenset(position[int(a)] for a in exclude)
    except KeyError as e:
        raise ContractError(f"Cannot exclude the diagonal row {e.args[0]} of column {j}") from None
    return PchInput(values[rows, j], s_bar, positions)


def column_pch(values: np.ndarray, s_bar: int, combiner: Combiner = "simes", exclude=(), columns=None) -> np.ndarray:
    """PCH p-value of every column (or of ``columns``), excluding rows in ``exclude``."""
    values = np.asarray(values, dtype=float)
    columns = range(values.shape[1]) if columns is None else columns
    excluded = set(int(a) for a in exclude)
    return np.array([combine(column_input(values, j, s_bar, excluded - {j}), combiner) for j in columns])


def single_test(matrix, j: int, s_bar: int, combiner: Combiner = "simes") -> float:
    """
    Test H_0j (column j outside the Markov boundary target) from a base matrix.

    Args:
        matrix: A ``PValueMatrix`` or a square array of base p-values.
        j: Column index into the matrix.
        s_bar: Strict bound on the number of non-nulls, at most d - 1.
        combiner: ``bonferroni`` or ``simes``.
    """
    values = matrix.values if hasattr(matrix, "values") else np.asarray(matrix, dtype=float)
    if s_bar > values.shape[0] - 1:
        raise ContractError(f"s_bar must be at most {values.shape[0] - 1}, got {s_bar}")
    return combine(column_input(values, j, s_bar), combiner)
