from compbcp.oracle.ci import (
    BoundaryReport,
    compute_S,
    compute_S_D,
    conditionally_independent,
    enumerate_markov_boundaries,
    is_ci,
    verify_boundary_containment,
    verify_dense_identity,
    verify_weak_union,
)
from compbcp.oracle.table import Atom, JointTable, canonical_tables, one_hot_table, random_table

__all__ = [
    "Atom",
    "BoundaryReport",
    "JointTable",
    "canonical_tables",
    "compute_S",
    "compute_S_D",
    "conditionally_independent",
    "enumerate_markov_boundaries",
    "is_ci",
    "one_hot_table",
    "random_table",
    "verify_boundary_containment",
    "verify_dense_identity",
    "verify_weak_union",
]
