"""Worker-count control.

The environment variable FRACSPEC_THREADS caps the number of worker
threads used for embarrassingly parallel sweeps.  Results are always
merged in submission order, so the outcome is identical for any count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence


def thread_count(requested: int | None = None) -> int:
    cap = os.environ.get("FRACSPEC_THREADS")
    n = requested if requested is not None else 1
    if cap is not None:
        try:
            n = min(n, max(1, int(cap))) if requested is not None else max(1, int(cap))
        except ValueError:
            pass
    return max(1, n)


def ordered_map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """Map preserving input order; threads only when workers > 1."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
