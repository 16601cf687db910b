"""How often the resampled Wedin bound covers the true subspace angle.

Each trial draws fresh toy noise, extracts every block at several ranks and
compares the true distance between row(A_{k,1}) and the estimated score
space with percentiles of the resampled bound.
"""

from collections.abc import Sequence
from dataclasses import asdict, dataclass
from functools import partial

import numpy as np
import polars as pl
from loguru import logger

from ajive_cli.bounds import cutoff, resample_wedin_block, wedin_oracle
from ajive_cli.config import DEFAULT_REPLICATES
from ajive_cli.errors import AjiveError
from ajive_cli.extract import RankSpec, initial_extract
from ajive_cli.linalg import derive_seed
from ajive_cli.parallel import run_replicates
from ajive_cli.synth.toy import ToyConfig, make_toy

DEFAULT_RANKS: dict[str, tuple[int, ...]] = {"X": (1, 2, 3), "Y": (2, 3, 4)}
DEFAULT_LEVELS: tuple[float, ...] = (50.0, 90.0, 95.0, 99.0)


@dataclass(frozen=True)
class CoverageResult:
    frame: pl.DataFrame
    """Long format: block, rank, nominal, coverage (percent)."""
    n_trials: int
    seed: int
    n_replicates: int
    config: ToyConfig

    def table(self, block: str) -> pl.DataFrame:
        """Coverage of one block with nominal levels as rows and ranks as columns."""
        rows = self.frame.filter(pl.col("block") == block)
        if rows.is_empty():
            raise KeyError(block)
        return (
            rows.with_columns(pl.col("rank").cast(pl.String))
            .pivot(on="rank", index="nominal", values="coverage")
            .sort("nominal")
        )

    @property
    def blocks(self) -> list[str]:
        return self.frame.get_column("block").unique(maintain_order=True).to_list()

    def metadata(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "seed": self.seed,
            "n_replicates": self.n_replicates,
            "config": asdict(self.config),
        }


def _trial(
    config: ToyConfig,
    rank_specs: dict[str, tuple[int, ...]],
    levels: tuple[float, ...],
    n_replicates: int,
    rng: np.random.Generator,
) -> list[tuple[str, int, float, bool]]:
    dataset, truth = make_toy(config, rng)
    trial_seed = int(rng.integers(0, 2**32))
    hits = []
    for index, block in enumerate(dataset):
        for rank in rank_specs.get(block.name, ()):
            estimate = initial_extract(block, RankSpec(rank=rank))
            distance = wedin_oracle(truth, estimate).distance
            dist = resample_wedin_block(
                estimate, block, n_replicates, seed=derive_seed(trial_seed, index, rank), n_jobs=1
            )
            hits.extend((block.name, rank, level, distance <= cutoff(dist, level) + 1e-12) for level in levels)
    return hits


def coverage_simulation(
    n_trials: int,
    rank_specs: dict[str, Sequence[int]] | None = None,
    percentiles: Sequence[float] = DEFAULT_LEVELS,
    seed: int = 0,
    n_replicates: int = DEFAULT_REPLICATES,
    config: ToyConfig | None = None,
    n_jobs: int | None = None,
    show_progress: bool = False,
) -> CoverageResult:
    """Repeat the toy experiment ``n_trials`` times and tabulate bound coverage.

    Trial ``i`` draws from its own substream of ``seed``, so the table does not
    depend on the number of workers.
    """
    if n_trials < 1:
        raise AjiveError(f"Need at least one trial, got {n_trials}")
    config = config or ToyConfig()
    specs = {name: tuple(ranks) for name, ranks in (rank_specs or DEFAULT_RANKS).items()}
    levels = tuple(float(p) for p in percentiles)

    logger.info(f"Running {n_trials} coverage trials with {n_replicates} replicates each")
    trials = run_replicates(
        partial(_trial, config, specs, levels, n_replicates),
        n_trials,
        seed,
        n_jobs=n_jobs,
        description="Simulating..." if show_progress else None,
    )
    records = [hit for trial in trials for hit in trial]
    frame = (
        pl.DataFrame(records, schema=["block", "rank", "nominal", "covered"], orient="row")
        .group_by(["block", "rank", "nominal"], maintain_order=True)
        .agg((pl.col("covered").mean() * 100).alias("coverage"))
    )
    return CoverageResult(frame=frame, n_trials=n_trials, seed=seed, n_replicates=n_replicates, config=config)
