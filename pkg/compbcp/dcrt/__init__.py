from compbcp.dcrt.matrix import (
    COMPUTED,
    DIAGONAL,
    SCREENED,
    UNSET,
    PValueMatrix,
    SpeedupConfig,
)
from compbcp.dcrt.tester import DEFAULT_K, DcrtTester, Entry, base_pvalue, pvalue_matrix

__all__ = [
    "COMPUTED",
    "DEFAULT_K",
    "DIAGONAL",
    "SCREENED",
    "UNSET",
    "DcrtTester",
    "Entry",
    "PValueMatrix",
    "SpeedupConfig",
    "base_pvalue",
    "pvalue_matrix",
]
