"""
File:       src/initialize.py
Author:     Stackfuse developers
Brief:      Worker pool setup for running independent folds through dask.
"""
# Standard library imports
import os
from typing import Any, Dict

# Third party library imports
import dask


def resolve_workers(requested: int, tasks: int) -> int:
    """0 means one worker per task, capped at the CPU count"""
    if requested < 0:
        raise ValueError(f"worker count must be >= 0, got {requested}")
    available = os.cpu_count() or 1
    workers = min(tasks, available) if requested == 0 else min(requested, tasks)
    return max(workers, 1)


def scheduler_options(workers: int) -> Dict[str, Any]:
    """Keyword arguments for `dask.compute`: a process pool for several workers, in-process otherwise"""
    if workers <= 1:
        return {"scheduler": "synchronous"}
    return {"scheduler": "processes", "num_workers": workers}


def compute_in_order(tasks, workers: int):
    """Evaluate `dask.delayed` tasks and return their results in submission order"""
    return list(dask.compute(*tasks, **scheduler_options(workers)))
