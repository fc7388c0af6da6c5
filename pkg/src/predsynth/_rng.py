"""Reproducible random streams.

Every parallel task gets its own generator derived from ``(seed, task)``
through :class:`numpy.random.SeedSequence` spawn keys, so results depend
only on the master seed and the number of tasks, never on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")


def task_rng(seed: int, task: int = 0) -> np.random.Generator:
    """Generator for task ``task`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(task),)))


def split_counts(total: int, tasks: int) -> list[int]:
    """Split ``total`` draws into ``tasks`` near-equal chunks, larger chunks first."""
    if tasks < 1:
        raise ValueError("tasks must be >= 1")
    base, extra = divmod(int(total), tasks)
    return [base + (1 if i < extra else 0) for i in range(tasks)]


def run_tasks(fn: Callable[[np.random.Generator, int], T], total: int, seed: int, threads: int = 1) -> list[T]:
    """Run ``fn(rng, count)`` once per task and return results in task order."""
    counts = split_counts(total, threads)
    rngs = [task_rng(seed, i) for i in range(threads)]
    if threads == 1:
        return [fn(rngs[0], counts[0])]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, rngs, counts))
