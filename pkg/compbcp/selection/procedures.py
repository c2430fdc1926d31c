"""Rejection procedures over a matrix of base p-values.

FWER: Holm's step-down on partial-conjunction p-values, where each step
re-combines the remaining columns with the current rejections excluded.
FDR: Benjamini-Hochberg on Simes PCH p-values (Benjamini-Yekutieli on
Bonferroni PCH p-values when no positive dependence is assumed).
"""

import logging
import warnings
from typing import Literal

import numpy as np
from statsmodels.stats.multitest import multipletests

from compbcp.dcrt.matrix import SCREENED, PValueMatrix
from compbcp.errors import ContractError, ParameterError, ScreeningCaveat
from compbcp.pch.combiners import COMBINERS, Combiner, column_pch
from compbcp.selection.result import SelectionResult, TraceStep, ValidityRegime

logger = logging.getLogger(__name__)

OverflowPolicy = Literal["stop", "reject-all"]
OVERFLOW_POLICIES = ("stop", "reject-all")

SCREENING_CAVEAT = (
    "Screened base p-values change their joint dependence; the positive-dependence "
    "guarantee is only supported empirically when screening is on"
)
DENSE_CAVEAT = (
    "Rejections estimate the targets inside the dense set D; the estimate can miss "
    "when exactly one column of D is outside the target set"
)


# --- plain procedures on a vector of p-values ------------------------------


def _multitest(pvalues, alpha: float, method: str) -> np.ndarray:
    pvalues = np.asarray(pvalues, dtype=float)
    if pvalues.size == 0:
        return np.array([], dtype=np.int64)
    reject = multipletests(pvalues, alpha=alpha, method=method)[0]
    hits = np.flatnonzero(reject)
    return hits[np.argsort(pvalues[hits], kind="stable")]


def holm(pvalues, alpha: float) -> np.ndarray:
    """Positions rejected by Holm's step-down procedure, by ascending p-value."""
    return _multitest(pvalues, alpha, "holm")


def benjamini_hochberg(pvalues, alpha: float) -> np.ndarray:
    """Positions rejected by the Benjamini-Hochberg step-up procedure."""
    return _multitest(pvalues, alpha, "fdr_bh")


def benjamini_yekutieli(pvalues, alpha: float) -> np.ndarray:
    return _multitest(pvalues, alpha, "fdr_by")


# --- procedures on a base p-value matrix -----------------------------------


def _as_matrix(matrix) -> PValueMatrix:
    return matrix if isinstance(matrix, PValueMatrix) else PValueMatrix.from_values(matrix)


def _check_arguments(matrix: PValueMatrix, s_bar: int, alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must be in (0, 1), got {alpha}")
    if not 1 <= s_bar <= matrix.size - 1:
        raise ContractError(f"s_bar must be in [1, {matrix.size - 1}] for a {matrix.size}-column matrix, got {s_bar}")
    matrix.require_complete()


def _caveats(matrix: PValueMatrix, regime: ValidityRegime) -> list[str]:
    caveats = []
    if regime == "prds-assumed" and matrix.count(SCREENED):
        caveats.append(SCREENING_CAVEAT)
        logger.warning(SCREENING_CAVEAT)
        warnings.warn(SCREENING_CAVEAT, ScreeningCaveat, stacklevel=3)
    if matrix.meta.get("dense") is not None:
        caveats.append(DENSE_CAVEAT)
    return caveats


def _regime(combiner: Combiner) -> ValidityRegime:
    return "arbitrary-dependence" if combiner == "bonferroni" else "prds-assumed"


def adaptive_holm(
    matrix,
    s_bar: int,
    alpha: float,
    combiner: Combiner = "bonferroni",
    overflow_policy: OverflowPolicy = "stop",
) -> SelectionResult:
    """
    Holm's procedure on exclusion-corrected PCH p-values.

    At step k every unrejected column is re-combined with the current
    rejections excluded; the smallest p-value (lowest column index on ties)
    is rejected iff it is at most alpha / (d - k + 1). The corrected p-value
    is undefined at step s_bar + 1; ``overflow_policy`` either stops there or
    rejects every remaining column, which is only sound when s_bar is a
    strict bound on the number of non-nulls.

    Args:
        matrix: ``PValueMatrix`` or square array of base p-values.
        s_bar: Bound used by the combiner, 1 <= s_bar <= d - 1.
        alpha: Familywise error level.
        combiner: ``bonferroni`` (any dependence) or ``simes`` (assumes PRDS).
        overflow_policy: ``stop`` or ``reject-all``.

    Returns:
        SelectionResult: ``rejected`` in rejection order, as original labels.
    """
    matrix = _as_matrix(matrix)
    _check_arguments(matrix, s_bar, alpha)
    if combiner not in COMBINERS:
        raise ParameterError(f"Unknown combiner {combiner!r}; expected one of {COMBINERS}")
    if overflow_policy not in OVERFLOW_POLICIES:
        raise ParameterError(f"Unknown overflow policy {overflow_policy!r}; expected one of {OVERFLOW_POLICIES}")

    d = matrix.size
    labels = matrix.labels
    remaining = list(range(d))
    rejected: list[int] = []
    trace: list[TraceStep] = []

    for k in range(1, d + 1):
        threshold = alpha / (d - k + 1)
        if k == s_bar + 1:
            if overflow_policy == "reject-all":
                for pos in remaining:
                    trace.append(TraceStep(k, int(labels[pos]), 0.0, threshold, "reject-overflow"))
                rejected.extend(remaining)
                remaining = []
            logger.info(f"Adaptive Holm reached step {k} = s_bar + 1; policy {overflow_policy}")
            break

        pvals = column_pch(matrix.values, s_bar, combiner, exclude=rejected, columns=remaining)
        best = int(np.lexsort((labels[remaining], pvals))[0])
        candidate = remaining[best]
        if pvals[best] <= threshold:
            trace.append(TraceStep(k, int(labels[candidate]), float(pvals[best]), threshold, "reject"))
            rejected.append(candidate)
            remaining.pop(best)
        else:
            trace.append(TraceStep(k, int(labels[candidate]), float(pvals[best]), threshold, "stop"))
            break

    regime = _regime(combiner)
    return SelectionResult(
        rejected=[int(labels[pos]) for pos in rejected],
        trace=trace,
        procedure=f"holm-{combiner}",
        alpha=alpha,
        s_bar=s_bar,
        validity_regime=regime,
        caveats=_caveats(matrix, regime),
        labels=labels.tolist(),
    )


def plain_holm(matrix, s_bar: int, alpha: float, combiner: Combiner = "bonferroni") -> SelectionResult:
    """Holm's procedure on the uncorrected PCH p-values of every column."""
    matrix = _as_matrix(matrix)
    _check_arguments(matrix, s_bar, alpha)
    pvals = column_pch(matrix.values, s_bar, combiner)
    hits = holm(pvals, alpha)
    d = matrix.size
    order = np.lexsort((matrix.labels, pvals))
    trace = []
    for k, pos in enumerate(order, start=1):
        decision = "reject" if pos in hits else "stop"
        trace.append(TraceStep(k, int(matrix.labels[pos]), float(pvals[pos]), alpha / (d - k + 1), decision))
        if decision == "stop":
            break
    regime = _regime(combiner)
    return SelectionResult(
        rejected=[int(matrix.labels[pos]) for pos in hits],
        trace=trace,
        procedure=f"plain-holm-{combiner}",
        alpha=alpha,
        s_bar=s_bar,
        validity_regime=regime,
        caveats=_caveats(matrix, regime),
        labels=matrix.labels.tolist(),
    )


def bh_select(matrix, s_bar: int, alpha: float, by: bool = False) -> SelectionResult:
    """
    Benjamini-Hochberg on Simes PCH p-values, one per column.

    Rejects the k* smallest, k* = max{k : P_(k) <= k alpha / d}. With
    ``by=True`` the Bonferroni PCH p-values go through Benjamini-Yekutieli
    instead, which needs no positive-dependence assumption.
    """
    matrix = _as_matrix(matrix)
    _check_arguments(matrix, s_bar, alpha)
    combiner: Combiner = "bonferroni" if by else "simes"
    pvals = column_pch(matrix.values, s_bar, combiner)
    hits = benjamini_yekutieli(pvals, alpha) if by else benjamini_hochberg(pvals, alpha)

    d = matrix.size
    scale = float(np.sum(1.0 / np.arange(1, d + 1))) if by else 1.0
    hit_set = set(int(h) for h in hits)
    order = np.lexsort((matrix.labels, pvals))
    trace = [
        TraceStep(k, int(matrix.labels[pos]), float(pvals[pos]), k * alpha / (d * scale), "reject" if pos in hit_set else "accept")
        for k, pos in enumerate(order, start=1)
    ]
    rejected = [int(matrix.labels[pos]) for pos in order if pos in hit_set]
    regime: ValidityRegime = "arbitrary-dependence" if by else "prds-assumed"
    return SelectionResult(
        rejected=rejected,
        trace=trace,
        procedure="by" if by else "bh",
        alpha=alpha,
        s_bar=s_bar,
        validity_regime=regime,
        caveats=_caveats(matrix, regime),
        labels=matrix.labels.tolist(),
    )
