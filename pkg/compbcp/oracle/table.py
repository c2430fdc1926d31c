"""Finite joint distributions of (X, Y) with exact rational probabilities."""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Hashable, Literal

from compbcp.errors import ConfigurationError, ConstraintViolation, ParameterError
from compbcp.io.loaders import JSONLoader
from compbcp.rng import as_generator

logger = logging.getLogger(__name__)

TableConstraint = Literal["one-hot", "sum", "none"]
PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Atom:
    x: tuple[int, ...]
    y: Hashable
    prob: Fraction | float


def _as_prob(value) -> Fraction | float:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError as e:
            raise ConfigurationError(f"Cannot read probability {value!r}") from e
    return float(value)


class JointTable:
    """
    Support atoms (x, y, prob) of a discrete law of (X, Y).

    Args:
        atoms: Atoms with nonnegative probabilities summing to 1; atoms with
            the same (x, y) are merged.
        p: Covariate dimension.
        constraint: ``one-hot`` (every x is an indicator vector), ``sum``
            (every x sums to ``total``) or ``none``.
        total: Row total for the ``sum`` constraint; None takes it from the
            first atom.
    """

    def __init__(self, atoms, p: int, constraint: TableConstraint = "none", total: int | None = None):
        if p < 1:
            raise ParameterError(f"p must be >= 1, got {p}")
        merged: dict[tuple[tuple[int, ...], Hashable], Any] = {}
        for atom in atoms:
            if not isinstance(atom, Atom):
                atom = Atom(*atom)
            x = tuple(int(v) for v in atom.x)
            if len(x) != p:
                raise ParameterError(f"Atom {x} has length {len(x)}, expected {p}")
            prob = _as_prob(atom.prob)
            if prob < 0:
                raise ParameterError(f"Atom {x} has negative probability {prob}")
            merged[(x, atom.y)] = merged.get((x, atom.y), 0) + prob
        self.p = int(p)
        self.constraint = constraint
        self.atoms = [Atom(x, y, prob) for (x, y), prob in merged.items() if prob > 0]
        self.total = total
        self._validate()

    def _validate(self) -> None:
        mass = sum(a.prob for a in self.atoms)
        if abs(float(mass) - 1.0) > PROB_SUM_TOL:
            raise ParameterError(f"Probabilities sum to {float(mass)!r}, expected 1")
        for row, atom in enumerate(self.atoms):
            if self.constraint == "one-hot" and (sum(atom.x) != 1 or any(v not in (0, 1) for v in atom.x)):
                raise ConstraintViolation(row, f"{atom.x} is not a one-hot vector")
            if self.constraint == "sum":
                if self.total is None:
                    self.total = sum(atom.x)
                if sum(atom.x) != self.total or min(atom.x) < 0:
                    raise ConstraintViolation(row, f"{atom.x} does not sum to {self.total}")

    @property
    def is_exact(self) -> bool:
        return all(isinstance(a.prob, Fraction) for a in self.atoms)

    @classmethod
    def from_weights(cls, rows, p: int, constraint: TableConstraint = "none", total: int | None = None) -> "JointTable":
        """Atoms from integer weights (x, y, w); probabilities become exact fractions w / sum(w)."""
        rows = list(rows)
        norm = sum(int(w) for _, _, w in rows)
        if norm <= 0:
            raise ParameterError("Weights must have a positive sum")
        return cls([Atom(tuple(x), y, Fraction(int(w), norm)) for x, y, w in rows], p, constraint, total)

    @classmethod
    def from_dict(cls, document: dict[str, Any]) -> "JointTable":
        """
        Build a table from a parsed JSON document::

            {"p": 3, "constraint": "one-hot",
             "atoms": [{"x": [1, 0, 0], "y": 1, "prob": "9/20"}, ...]}

        ``prob`` may be a number or a fraction string.
        """
        try:
            p = int(document["p"])
            atoms = [Atom(tuple(a["x"]), a["y"], a["prob"]) for a in document["atoms"]]
        except (KeyError, TypeError) as e:
            raise ConfigurationError(f"A table document needs 'p' and 'atoms' with x, y, prob: {e}") from e
        return cls(atoms, p, document.get("constraint", "none"), document.get("total"))

    @classmethod
    def load(cls, path: Path | str) -> "JointTable":
        return cls.from_dict(JSONLoader(path).load())

    def to_dict(self) -> dict[str, Any]:
        return {
            "p": self.p,
            "constraint": self.constraint,
            "total": self.total,
            "atoms": [{"x": list(a.x), "y": a.y, "prob": str(a.prob)} for a in self.atoms],
        }

    def permuted(self, order) -> "JointTable":
        """Table of (X[order], Y): coordinate k of the result is coordinate order[k]."""
        order = list(order)
        atoms = [Atom(tuple(a.x[k] for k in order), a.y, a.prob) for a in self.atoms]
        return JointTable(atoms, self.p, self.constraint, self.total)

    def relabeled(self, mapping: dict) -> "JointTable":
        return JointTable([Atom(a.x, mapping[a.y], a.prob) for a in self.atoms], self.p, self.constraint, self.total)

    def __repr__(self) -> str:
        return f"JointTable(p={self.p}, constraint={self.constraint!r}, atoms={len(self.atoms)})"


def one_hot_table(level_weights, y_given_level) -> JointTable:
    """
    One-hot factor with level probabilities ``level_weights`` (integers or
    fractions, normalized) and a binary response with P(Y = 1 | level k) =
    ``y_given_level[k]``.
    """
    weights = [Fraction(w) for w in level_weights]
    norm = sum(weights)
    p = len(weights)
    atoms = []
    for k, (w, q) in enumerate(zip(weights, y_given_level)):
        x = tuple(int(k == v) for v in range(p))
        q = Fraction(q)
        atoms.append(Atom(x, 1, w / norm * q))
        atoms.append(Atom(x, 0, w / norm * (1 - q)))
    return JointTable(atoms, p, "one-hot")


def canonical_tables() -> dict[str, JointTable]:
    """Small tables with known targets (0-based indices in the comments)."""
    high, low = Fraction(9, 10), Fraction(1, 10)
    return {
        # S = {0}; unique nontrivial boundary {0}.
        "one-hot": one_hot_table([1, 1, 1], [high, low, low]),
        # S is empty; boundaries {0, 1} and {2, 3}.
        "two-boundaries": one_hot_table([1, 1, 1, 1], [high, high, low, low]),
        # Y independent of X: S is empty, the only boundary is the empty set.
        "independent": one_hot_table([1, 2, 3], [Fraction(1, 2)] * 3),
        # S = {0}; with D = {0, 1, 2} two columns of D lie outside S.
        "one-hot-4": one_hot_table([1, 1, 1, 1], [high, low, low, low]),
    }


def _compositions(total: int, parts: int):
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        bounds = (-1,) + cuts + (total + parts - 1,)
        yield tuple(bounds[k + 1] - bounds[k] - 1 for k in range(parts))


def random_table(
    p: int,
    seed=None,
    constraint: TableConstraint = "one-hot",
    total: int = 2,
    y_levels: int = 2,
    n_laws: int = 2,
    max_weight: int = 5,
) -> JointTable:
    """
    Random exact table for property checks.

    The support is every one-hot vector (or every composition of ``total``
    into p parts). Each support point gets an integer weight, possibly 0, and
    one of ``n_laws`` random response laws, so conditional independences
    occur with positive probability.
    """
    rng = as_generator(seed)
    if constraint == "one-hot":
        support = [tuple(int(k == v) for v in range(p)) for k in range(p)]
    elif constraint == "sum":
        support = list(_compositions(total, p))
    else:
        raise ParameterError(f"random_table supports one-hot and sum constraints, got {constraint!r}")

    laws = rng.integers(1, max_weight + 1, size=(n_laws, y_levels))
    weights = rng.integers(0, max_weight + 1, size=len(support))
    if weights.sum() == 0:
        weights[0] = 1
    assignment = rng.integers(0, n_laws, size=len(support))
    norm = int(weights.sum())
    atoms = []
    for x, w, law in zip(support, weights, assignment):
        law_total = int(laws[law].sum())
        for y, q in enumerate(laws[law]):
            atoms.append(Atom(x, y, Fraction(int(w), norm) * Fraction(int(q), law_total)))
    return JointTable(atoms, p, constraint, total if constraint == "sum" else None)
