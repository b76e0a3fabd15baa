"""Deterministic chunked map-reduce over quadrature nodes.

Work is split into chunks whose boundaries depend only on the problem size,
never on the number of workers.  Partial results are added in chunk order,
so the floating-point result is identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

ENV_VAR = "MUSKAT_WORKERS"
CHUNK = 32

_override: int | None = None


def set_workers(n: int | None) -> None:
    """Set a process-wide worker count (``None`` defers to the environment)."""
    global _override
    if n is not None and int(n) < 1:
        raise ValueError("worker count must be at least 1")
    _override = None if n is None else int(n)


def worker_count() -> int:
    if _override is not None:
        return _override
    raw = os.environ.get(ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    return n


def chunk_slices(total: int, chunk: int = CHUNK) -> list[slice]:
    return [slice(i, min(i + chunk, total)) for i in range(0, total, chunk)]


def ordered_sum(
    fn: Callable[[slice], np.ndarray],
    total: int,
    *,
    chunk: int = CHUNK,
    workers: int | None = None,
) -> np.ndarray:
    """Return ``sum(fn(s) for s in chunk_slices(total))`` in fixed order."""
    slices = chunk_slices(total, chunk)
    if not slices:
        raise ValueError("nothing to sum")
    nw = worker_count() if workers is None else int(workers)
    if nw <= 1 or len(slices) == 1:
        parts = [fn(s) for s in slices]
    else:
        with ThreadPoolExecutor(max_workers=min(nw, len(slices))) as pool:
            parts = list(pool.map(fn, slices))
    acc = np.array(parts[0], copy=True)
    for p in parts[1:]:
        acc = acc + p
    return acc
