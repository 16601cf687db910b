"""Replicate loops with per-replicate random substreams.

Replicate ``i`` always draws from ``substream(seed, *keys, i)``, so the
results do not depend on how the loop is split across joblib workers.
"""

from collections.abc import Callable, Sequence
from typing import TypeVar

import numpy as np
from joblib import Parallel, delayed
from rich.progress import track

from ajive_cli import config
from ajive_cli.linalg import substream

T = TypeVar("T")


def _run_chunk(
    draw: Callable[[np.random.Generator], T],
    seed: int,
    keys: tuple[int, ...],
    indices: Sequence[int],
) -> list[T]:
    return [draw(substream(seed, *keys, int(i))) for i in indices]


def resolve_jobs(n_jobs: int | None) -> int:
    n_jobs = config.config.n_jobs if n_jobs is None else n_jobs
    return max(int(n_jobs), 1)


def run_replicates(
    draw: Callable[[np.random.Generator], T],
    n_replicates: int,
    seed: int,
    keys: tuple[int, ...] = (),
    n_jobs: int | None = None,
    description: str | None = None,
) -> list[T]:
    """Evaluate ``draw`` once per replicate, each with its own generator.

    Args:
        draw: Function of a generator; must be picklable when ``n_jobs > 1``.
        n_replicates: Number of replicates.
        seed: Root seed.
        keys: Stream tags inserted between the seed and the replicate index.
        n_jobs: joblib workers; defaults to the global configuration.
        description: When given and running serially, show a progress bar.
    """
    n_jobs = resolve_jobs(n_jobs)
    if n_jobs == 1:
        indices: Sequence[int] = range(n_replicates)
        if description is not None:
            return [draw(substream(seed, *keys, i)) for i in track(indices, description=description)]
        return _run_chunk(draw, seed, keys, indices)

    chunks = [c for c in np.array_split(np.arange(n_replicates), n_jobs) if c.size]
    results = Parallel(n_jobs=n_jobs)(delayed(_run_chunk)(draw, seed, keys, chunk) for chunk in chunks)
    return [item for chunk in results for item in chunk]
