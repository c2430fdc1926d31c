from compbcp.selection.dense import condition_on_dense
from compbcp.selection.procedures import (
    OVERFLOW_POLICIES,
    adaptive_holm,
    benjamini_hochberg,
    benjamini_yekutieli,
    bh_select,
    holm,
    plain_holm,
)
from compbcp.selection.result import SelectionResult, TraceStep

__all__ = [
    "OVERFLOW_POLICIES",
    "SelectionResult",
    "TraceStep",
    "adaptive_holm",
    "benjamini_hochberg",
    "benjamini_yekutieli",
    "bh_select",
    "condition_on_dense",
    "holm",
    "plain_holm",
]
