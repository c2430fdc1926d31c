import os
import logging
from typing import Any, Callable, Iterable

from joblib import Parallel, delayed
from tqdm.auto import tqdm

logger = logging.getLogger(__name__)

THREADS_ENV = "COMPBCP_THREADS"


def default_n_jobs() -> int:
    """Worker count from ``COMPBCP_THREADS``, falling back to 1."""
    value = os.environ.get(THREADS_ENV)
    if not value:
        return 1
    try:
        n_jobs = int(value)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={value!r}")
        return 1
    return max(n_jobs, 1)


def run_tasks(
    fn: Callable[..., Any],
    tasks: Iterable[tuple],
    n_jobs: int | None = None,
    desc: str = "Running tasks",
    unit: str = "task",
    progress: bool = True,
) -> list[Any]:
    """
    Execute ``fn(*task)`` for every task and return results in task order.

    Args:
        fn: Module-level callable (it is pickled when n_jobs > 1).
        tasks: Argument tuples, one per call.
        n_jobs: Worker count; None reads ``COMPBCP_THREADS``.
        desc: Progress bar description.
        unit: Progress bar unit.
        progress: Show a tqdm bar.

    Returns:
        list: One result per task, in the order the tasks were given.

    Notes:
        Results never depend on n_jobs: every task draws from its own keyed
        random stream and joblib returns them in submission order.
    """
    tasks = list(tasks)
    n_jobs = default_n_jobs() if n_jobs is None else max(int(n_jobs), 1)

    results = []
    with tqdm(total=len(tasks), desc=desc, unit=unit, dynamic_ncols=True, disable=not progress, leave=False) as pbar:
        if n_jobs == 1:
            for task in tasks:
                results.append(fn(*task))
                pbar.update(1)
        else:
            outputs = Parallel(n_jobs=n_jobs, return_as="generator")(delayed(fn)(*task) for task in tasks)
            for result in outputs:
                results.append(result)
                pbar.update(1)

    logger.debug(f"{desc}: {len(results)} {unit}s finished with n_jobs={n_jobs}")
    return results
