"""Error and power metrics over simulation replicates."""

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from compbcp.io.loaders import write_records_csv

METRIC_COLUMNS = ["method", "snr", "metric", "value", "se", "reps"]
BINARY_METRICS = ("fwer", "type1_error", "power")
METRIC_KINDS = ("fdr", "fwer", "average_power", "type1_error", "power")


@dataclass
class SingleTestOutcome:
    """Rejection of the designated null and non-null columns by a single test."""

    null_rejected: bool | None
    nonnull_rejected: bool | None


def false_discovery_proportion(rejected: Iterable[int], true_S: Iterable[int]) -> float:
    rejected, true_S = set(rejected), set(true_S)
    return len(rejected - true_S) / max(len(rejected), 1)


def compute_metrics(results: dict, true_S: Iterable[int]) -> dict[str, dict[str, float]]:
    """
    Per-replicate metrics of every method.

    Args:
        results: Method name to either a collection of rejected indices (or
            an object with a ``rejected`` attribute) or a ``SingleTestOutcome``.
        true_S: The non-null columns of the replicate.

    Returns:
        dict: Method name to metric name to value. Selection methods report
        ``fdr`` (the FDP), ``fwer`` (1 if any false rejection) and
        ``average_power`` (0 when there are no non-nulls); single tests report
        ``type1_error`` and ``power`` for the columns they were given.
    """
    true_S = set(true_S)
    out: dict[str, dict[str, float]] = {}
    for method, result in results.items():
        if isinstance(result, SingleTestOutcome):
            values = {}
            if result.null_rejected is not None:
                values["type1_error"] = float(result.null_rejected)
            if result.nonnull_rejected is not None:
                values["power"] = float(result.nonnull_rejected)
            out[method] = values
            continue
        rejected = set(getattr(result, "rejected", result))
        out[method] = {
            "fdr": false_discovery_proportion(rejected, true_S),
            "fwer": float(bool(rejected - true_S)),
            "average_power": len(rejected & true_S) / len(true_S) if true_S else 0.0,
        }
    return out


@dataclass
class Metrics:
    """Aggregated metrics: one row per (method, snr, metric)."""

    rows: list[dict] = field(default_factory=list)

    @classmethod
    def aggregate(cls, per_replicate: Iterable[tuple[float, dict[str, dict[str, float]]]]) -> "Metrics":
        """
        Average per-replicate metrics at each SNR.

        Standard errors are sqrt(r (1 - r) / reps) for binary rates and the
        sample standard deviation over sqrt(reps) otherwise.
        """
        pooled: dict[tuple[str, float, str], list[float]] = defaultdict(list)
        for snr, metrics in per_replicate:
            for method, values in metrics.items():
                for name, value in values.items():
                    pooled[(method, float(snr), name)].append(value)
        rows = []
        for (method, snr, name), values in sorted(pooled.items()):
            values = np.asarray(values, dtype=float)
            reps = values.size
            mean = float(values.mean())
            if name in BINARY_METRICS:
                se = float(np.sqrt(mean * (1 - mean) / reps))
            else:
                se = float(values.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
            rows.append({"method": method, "snr": snr, "metric": name, "value": mean, "se": se, "reps": reps})
        return cls(rows)

    def value(self, method: str, snr: float, metric: str) -> dict:
        for row in self.rows:
            if row["method"] == method and row["snr"] == float(snr) and row["metric"] == metric:
                return row
        raise KeyError((method, snr, metric))

    def kinds(self) -> set[str]:
        return {row["metric"] for row in self.rows}

    def to_csv(self, path: Path | str) -> Path:
        return write_records_csv(self.rows, METRIC_COLUMNS, path)
