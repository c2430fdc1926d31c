from compbcp.pch.combiners import (
    COMBINERS,
    Combiner,
    PchInput,
    bonferroni_pch,
    column_input,
    column_pch,
    combine,
    simes_pch,
    single_test,
)

__all__ = [
    "COMBINERS",
    "Combiner",
    "PchInput",
    "bonferroni_pch",
    "column_input",
    "column_pch",
    "combine",
    "simes_pch",
    "single_test",
]
