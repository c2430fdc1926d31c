"""Exact conditional-independence queries on a JointTable.

Index sets are 0-based column indices. ``Y _||_ X_A | X_{A^c}`` holds when,
for every value of X_{A^c} with positive mass, the conditional law of Y is
the same for every value of X_A seen with it.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from compbcp.errors import ContractError, InvariantBreach
from compbcp.oracle.table import JointTable

logger = logging.getLogger(__name__)

TV_TOL = 1e-10
MAX_ENUMERATION_P = 16


def _conditional_laws(table: JointTable, A: frozenset[int]):
    rest = [k for k in range(table.p) if k not in A]
    inside = sorted(A)
    # (x_rest, x_A) -> {y: mass}
    joint: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(int)))
    for atom in table.atoms:
        key_rest = tuple(atom.x[k] for k in rest)
        key_in = tuple(atom.x[k] for k in inside)
        joint[key_rest][key_in][atom.y] += atom.prob
    return joint


def _total_variation(law_a: dict, law_b: dict) -> float:
    mass_a = sum(law_a.values())
    mass_b = sum(law_b.values())
    keys = set(law_a) | set(law_b)
    return 0.5 * sum(abs(float(law_a.get(y, 0) / mass_a - law_b.get(y, 0) / mass_b)) for y in keys)


def conditionally_independent(table: JointTable, A: Iterable[int]) -> bool:
    """Y _||_ X_A | X_{A^c} for any A, including the empty set and [p]."""
    A = frozenset(int(a) for a in A)
    if not A:
        return True
    for slices in _conditional_laws(table, A).values():
        laws = [law for law in slices.values() if sum(law.values()) > 0]
        reference = laws[0]
        if any(_total_variation(reference, law) > TV_TOL for law in laws[1:]):
            return False
    return True


def is_ci(table: JointTable, A: Iterable[int]) -> bool:
    """
    Exact check of Y _||_ X_A | X_{A^c}.

    Args:
        table: Joint law of (X, Y).
        A: Nonempty proper subset of the column indices.

    Returns:
        bool: True when the conditional laws agree within total variation 1e-10.
    """
    A = frozenset(int(a) for a in A)
    if not A or len(A) >= table.p or min(A) < 0 or max(A) >= table.p:
        raise ContractError(f"A must be a nonempty proper subset of range({table.p}), got {sorted(A)}")
    return conditionally_independent(table, A)


def pair_null(table: JointTable, i: int, j: int) -> bool:
    return is_ci(table, (i, j))


def compute_S(table: JointTable) -> frozenset[int]:
    """Columns j for which every pair hypothesis H_{i,j}, i != j, is false."""
    if table.p < 3:
        raise ContractError(f"compute_S needs p >= 3, got {table.p}")
    return compute_S_D(table, range(table.p))


def compute_S_D(table: JointTable, dense: Iterable[int]) -> frozenset[int]:
    """Columns j in D for which every H_{i,j} with i in D \\ {j} is false."""
    dense = sorted(set(int(d) for d in dense))
    if len(dense) < 2:
        raise ContractError(f"The dense set needs at least 2 columns, got {dense}")
    null = {frozenset(pair): pair_null(table, *pair) for pair in combinations(dense, 2)}
    return frozenset(j for j in dense if not any(null[frozenset((i, j))] for i in dense if i != j))


@dataclass
class BoundaryReport:
    """
    Markov boundaries of a table.

    Attributes:
        boundaries: Every minimal M with Y _||_ X_{M^c} | X_M, by size then
            lexicographically.
        trivial: Parallel flags, True when |M| >= p - 1.
        S: The columns every pair hypothesis flags.
        unique_nontrivial: Exactly one nontrivial boundary exists.
        matches_S: The nontrivial boundaries are exactly [S].
    """

    p: int
    boundaries: list[frozenset[int]]
    trivial: list[bool]
    S: frozenset[int]
    unique_nontrivial: bool = False
    matches_S: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def nontrivial(self) -> list[frozenset[int]]:
        return [m for m, flag in zip(self.boundaries, self.trivial) if not flag]

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "boundaries": [{"members": sorted(m), "trivial": t} for m, t in zip(self.boundaries, self.trivial)],
            "S": sorted(self.S),
            "unique_nontrivial": self.unique_nontrivial,
            "matches_S": self.matches_S,
            "notes": self.notes,
        }


def _members(mask: int, p: int) -> frozenset[int]:
    return frozenset(k for k in range(p) if mask >> k & 1)


def enumerate_markov_boundaries(table: JointTable) -> BoundaryReport:
    """
    Scan all 2^p subsets for Markov boundaries (p <= 16).

    A blanket M satisfies Y _||_ X_{M^c} | X_M. Subsets are visited by size,
    and a blanket is minimal exactly when it contains no smaller minimal
    blanket.
    """
    p = table.p
    if p > MAX_ENUMERATION_P:
        raise ContractError(f"Boundary enumeration scans 2^p subsets and is limited to p <= {MAX_ENUMERATION_P}, got p={p}")
    full = (1 << p) - 1
    minimal: list[int] = []
    for mask in sorted(range(1 << p), key=lambda m: (bin(m).count("1"), m)):
        if any(found & mask == found for found in minimal):
            continue
        if conditionally_independent(table, _members(full & ~mask, p)):
            minimal.append(mask)

    boundaries = sorted((_members(m, p) for m in minimal), key=lambda s: (len(s), sorted(s)))
    trivial = [len(m) >= p - 1 for m in boundaries]
    S = compute_S(table) if p >= 3 else frozenset()
    report = BoundaryReport(p, boundaries, trivial, S)
    nontrivial = report.nontrivial
    report.unique_nontrivial = len(nontrivial) == 1
    report.matches_S = nontrivial == [S]
    if not nontrivial:
        report.notes.append("No nontrivial Markov boundary exists")
    logger.debug(f"{len(boundaries)} boundaries, {len(nontrivial)} nontrivial, S={sorted(S)}")
    return report


# --- consistency checks --------------------------------------------------


def verify_boundary_containment(table: JointTable, report: BoundaryReport | None = None) -> None:
    """Every nontrivial Markov boundary contains S."""
    report = report or enumerate_markov_boundaries(table)
    for boundary in report.nontrivial:
        if not report.S <= boundary:
            raise InvariantBreach(f"Boundary {sorted(boundary)} does not contain S = {sorted(report.S)}")


def verify_dense_identity(table: JointTable, dense: Iterable[int]) -> bool:
    """
    Check S_D = S & D unless exactly one column of D lies outside S.

    The identity needs the pair nulls outside S to chain together through
    overlapping supports; one-hot factors with several equal response laws
    can break it, so only call this on tables known to have that property.

    Returns:
        bool: False when the check does not apply, True when it passed.
    """
    dense = frozenset(int(d) for d in dense)
    S = compute_S(table)
    if len(dense - S) == 1:
        return False
    S_D = compute_S_D(table, dense)
    if S_D != S & dense:
        raise InvariantBreach(f"S_D = {sorted(S_D)} differs from S & D = {sorted(S & dense)}")
    return True


def verify_weak_union(table: JointTable, A: Iterable[int], B: Iterable[int]) -> None:
    """Y _||_ X_{A u B} | X_rest implies Y _||_ X_A | X_{B u rest}."""
    A, B = frozenset(A), frozenset(B)
    if conditionally_independent(table, A | B) and not conditionally_independent(table, A):
        raise InvariantBreach(f"Weak union fails for A={sorted(A)}, B={sorted(B)}")
