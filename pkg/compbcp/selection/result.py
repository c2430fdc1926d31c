import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Literal

from compbcp.io.loaders import JSONLoader, write_records_csv

logger = logging.getLogger(__name__)

ValidityRegime = Literal["arbitrary-dependence", "prds-assumed"]

RESULT_JSON = "selection.json"
REJECTED_CSV = "rejected.csv"


@dataclass
class TraceStep:
    step: int
    candidate: int
    pvalue: float
    threshold: float
    decision: str


@dataclass
class SelectionResult:
    """
    Outcome of a selection procedure.

    Attributes:
        rejected: Original column indices, in the order they were rejected
            (Holm) or by ascending PCH p-value (step-up procedures).
        trace: One record per step (Holm) or per column (step-up).
        procedure: Procedure tag such as ``holm-simes`` or ``bh``.
        alpha: Target level.
        s_bar: Bound on the number of non-nulls used by the PCH combiner.
        validity_regime: Whether the error guarantee holds under arbitrary
            dependence of the base p-values or assumes PRDS.
        caveats: Conditions under which the guarantee is weaker than stated.
    """

    rejected: list[int]
    trace: list[TraceStep]
    procedure: str
    alpha: float
    s_bar: int
    validity_regime: ValidityRegime = "arbitrary-dependence"
    caveats: list[str] = field(default_factory=list)
    labels: list[int] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.rejected)) != len(self.rejected):
            raise ValueError(f"Rejected indices must be distinct, got {self.rejected}")

    @property
    def rejected_set(self) -> frozenset[int]:
        return frozenset(self.rejected)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def save(self, directory: Path | str, config: dict[str, Any] | None = None) -> Path:
        directory = Path(directory)
        payload = self.to_dict()
        if config is not None:
            payload["config"] = config
        JSONLoader(directory / RESULT_JSON).save(payload)
        write_records_csv([{"index": j} for j in self.rejected], ["index"], directory / REJECTED_CSV)
        logger.info(f"Saved {self.procedure} selection with {len(self.rejected)} rejections to {directory}")
        return directory
