"""Resampled perturbation bounds and random-direction null distributions.

Wedin-type bounds estimate how far noise can rotate each block's estimated
score space. Random-direction distributions describe how close independent
random score spaces come to each other by chance. Step 2 keeps a stacked
component as joint only when it beats both.
"""

from dataclasses import dataclass
from enum import IntEnum, StrEnum
from functools import partial

import numpy as np
import polars as pl
from loguru import logger

from ajive_cli import linalg
from ajive_cli.blocks import DataBlock
from ajive_cli.errors import (
    AjiveError,
    AmbientDimensionError,
    DistributionKindError,
    EmptySignalError,
    OracleCaseError,
    ParameterMismatchError,
)
from ajive_cli.extract import SignalEstimate
from ajive_cli.linalg import Subspace
from ajive_cli.parallel import run_replicates
from ajive_cli.synth.truth import BlockTruth, GroundTruth

SUMMARY_PERCENTILES = (1, 5, 50, 95, 99)


class BoundKind(StrEnum):
    WEDIN_BLOCK_SIN = "wedin_block_sin"
    WEDIN_JOINT_ANGLE = "wedin_joint_angle"
    WEDIN_JOINT_SSV = "wedin_joint_ssv"
    RANDOM_ANGLE = "random_angle"
    RANDOM_SSV = "random_ssv"

    @property
    def is_angle(self) -> bool:
        return self in (BoundKind.WEDIN_JOINT_ANGLE, BoundKind.RANDOM_ANGLE)


class Stream(IntEnum):
    """Tags separating the random streams derived from one root seed."""

    WEDIN = 1
    RANDOM = 2
    PAIRING = 3


@dataclass(frozen=True)
class BoundDistribution:
    """Resampled values of one bound statistic."""

    kind: BoundKind
    samples: np.ndarray
    n_replicates: int
    seed: int | None = None
    n_objects: int | None = None
    """Ambient dimension n of the score spaces involved."""
    ranks: tuple[int, ...] = ()
    """Signal ranks the distribution was simulated for, one per block."""

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.shape[0] != self.n_replicates:
            raise AjiveError(f"Expected {self.n_replicates} samples, got shape {samples.shape}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def percentile(self, p: float) -> float:
        return cutoff(self, p)

    def summary(self) -> dict:
        return {
            "kind": str(self.kind),
            "n": self.n_replicates,
            "percentiles": {str(p): cutoff(self, p) for p in SUMMARY_PERCENTILES} if self.n_replicates else {},
        }

    def to_frame(self) -> pl.DataFrame:
        return pl.DataFrame({"replicate": np.arange(self.n_replicates), "sample": self.samples})


@dataclass(frozen=True)
class CutoffSettings:
    """Percentiles in the angle convention; the ssv view uses ``100 - p``."""

    wedin_percentile: float = 95.0
    random_percentile: float = 5.0

    def __post_init__(self) -> None:
        for p in (self.wedin_percentile, self.random_percentile):
            if not 0 < p < 100:
                raise AjiveError(f"Percentiles must lie in (0, 100), got {p}")

    def for_kind(self, wedin_kind: BoundKind) -> tuple[float, float]:
        """``(wedin, random)`` percentiles to read off distributions of the given view."""
        if wedin_kind.is_angle:
            return self.wedin_percentile, self.random_percentile
        return 100 - self.wedin_percentile, 100 - self.random_percentile


@dataclass(frozen=True)
class BoundCutoffs:
    wedin_cutoff: float
    random_cutoff: float
    wedin_percentile: float
    random_percentile: float

    @classmethod
    def from_distributions(
        cls,
        wedin: BoundDistribution,
        random: BoundDistribution,
        settings: CutoffSettings | None = None,
    ) -> "BoundCutoffs":
        settings = settings or CutoffSettings()
        wedin_p, random_p = settings.for_kind(wedin.kind)
        return cls(
            wedin_cutoff=cutoff(wedin, wedin_p),
            random_cutoff=cutoff(random, random_p),
            wedin_percentile=wedin_p,
            random_percentile=random_p,
        )


def cutoff(dist: BoundDistribution, percentile: float) -> float:
    """Empirical percentile, interpolating linearly between order statistics."""
    if dist.samples.size == 0:
        raise AjiveError(f"Distribution {dist.kind} has no samples")
    return float(np.percentile(dist.samples, percentile, method="linear"))


def _wedin_replicate(
    values: np.ndarray,
    left: Subspace,
    right: Subspace,
    smallest: float,
    rng: np.random.Generator,
) -> float:
    rank = right.rank
    v_star = linalg.random_orthonormal(values.shape[1], rank, orthogonal_to=right, rng=rng)
    u_star = linalg.random_orthonormal(values.shape[0], rank, orthogonal_to=left, rng=rng)
    energy = max(linalg.operator_norm(values @ v_star.basis), linalg.operator_norm(values.T @ u_star.basis))
    return min(energy / smallest, 1.0)


def resample_wedin_block(
    estimate: SignalEstimate,
    block: DataBlock,
    n_replicates: int,
    seed: int,
    n_jobs: int | None = None,
) -> BoundDistribution:
    """Resample the correctly-specified-rank Wedin bound of one block.

    The unobserved ``E_k V`` and ``E_k^T U`` are replaced by ``X_k V*`` and
    ``X_k^T U*`` for random subspaces orthogonal to the estimated singular
    spaces, which only contain residual energy. Replicate ``i`` draws ``V*``
    then ``U*`` from ``substream(seed, i)``.
    """
    rank = estimate.rank
    d, n = block.shape
    if rank == 0:
        raise EmptySignalError(f"Block {block.name!r} has a rank-0 signal estimate; no Wedin bound")
    if 2 * rank > min(d, n):
        raise AmbientDimensionError(
            f"Block {block.name!r}: rank {rank} leaves no room for an orthogonal random subspace in a {d}x{n} block"
        )
    draw = partial(
        _wedin_replicate,
        np.asarray(block.values),
        estimate.loading_space,
        estimate.score_space,
        float(estimate.svd.singular_values[-1]),
    )
    samples = run_replicates(draw, n_replicates, seed, n_jobs=n_jobs)
    logger.debug(f"Wedin bound for [bold]{block.name}[/]: median sin {np.median(samples):.4f}")
    return BoundDistribution(
        kind=BoundKind.WEDIN_BLOCK_SIN,
        samples=np.array(samples),
        n_replicates=n_replicates,
        seed=seed,
        n_objects=n,
        ranks=(rank,),
    )


def _paired_samples(dists: list[BoundDistribution], rng: np.random.Generator | None) -> np.ndarray:
    for dist in dists:
        if dist.kind != BoundKind.WEDIN_BLOCK_SIN:
            raise DistributionKindError(f"Expected {BoundKind.WEDIN_BLOCK_SIN} inputs, got {dist.kind}")
    lengths = {d.n_replicates for d in dists}
    if len(lengths) != 1:
        raise ParameterMismatchError(f"Block distributions have different replicate counts: {sorted(lengths)}")
    objects = {d.n_objects for d in dists}
    if len(objects) != 1:
        raise ParameterMismatchError(f"Block distributions live in different ambient dimensions: {objects}")
    samples = np.stack([d.samples for d in dists])
    if rng is not None:
        samples = np.stack([rng.permutation(row) for row in samples])
    return samples


def _combined(kind: BoundKind, dists: list[BoundDistribution], samples: np.ndarray) -> BoundDistribution:
    return BoundDistribution(
        kind=kind,
        samples=samples,
        n_replicates=samples.shape[0],
        seed=dists[0].seed,
        n_objects=dists[0].n_objects,
        ranks=tuple(r for d in dists for r in d.ranks),
    )


def combine_wedin_two_block(
    d1: BoundDistribution,
    d2: BoundDistribution,
    rng: np.random.Generator | None = None,
) -> BoundDistribution:
    """Bound on the angle between two estimated joint directions, ``min(θ1 + θ2, 90°)``.

    Replicate ``i`` of each block is paired; ``rng`` shuffles the pairing.
    """
    samples = _paired_samples([d1, d2], rng)
    angles = np.degrees(np.arcsin(np.clip(samples, 0.0, 1.0)))
    return _combined(BoundKind.WEDIN_JOINT_ANGLE, [d1, d2], np.minimum(angles.sum(axis=0), 90.0))


def combine_wedin_multiblock(
    dists: list[BoundDistribution],
    rng: np.random.Generator | None = None,
) -> BoundDistribution:
    """Lower bound ``K - Σ sin²θ_k`` on the squared singular values of joint components."""
    if len(dists) < 2:
        raise ParameterMismatchError(f"Need at least 2 block distributions, got {len(dists)}")
    samples = np.clip(_paired_samples(dists, rng), 0.0, 1.0)
    return _combined(BoundKind.WEDIN_JOINT_SSV, dists, len(dists) - (samples**2).sum(axis=0))


def _random_bases(n: int, ranks: tuple[int, ...], rng: np.random.Generator) -> list[Subspace]:
    return [linalg.random_orthonormal(n, r, rng=rng) for r in ranks]


def _largest_ssv(n: int, ranks: tuple[int, ...], rng: np.random.Generator) -> float:
    stacked = np.vstack([b.basis.T for b in _random_bases(n, ranks, rng)])
    return linalg.operator_norm(stacked) ** 2


def _smallest_angle(n: int, ranks: tuple[int, ...], rng: np.random.Generator) -> float:
    a, b = _random_bases(n, ranks, rng)
    return float(linalg.principal_angles(a, b)[0])


def _check_random_ranks(n: int, ranks: tuple[int, ...]) -> None:
    for r in ranks:
        if r < 1:
            raise EmptySignalError(f"Random-direction bound needs positive ranks, got {ranks}")
        if r > n:
            raise AmbientDimensionError(f"Rank {r} exceeds ambient dimension {n}")


def random_direction_ssv(
    n: int,
    ranks: list[int] | tuple[int, ...],
    n_replicates: int,
    seed: int,
    n_jobs: int | None = None,
) -> BoundDistribution:
    """Largest squared singular value of stacked independent random score bases."""
    ranks = tuple(ranks)
    _check_random_ranks(n, ranks)
    samples = run_replicates(partial(_largest_ssv, n, ranks), n_replicates, seed, n_jobs=n_jobs)
    return BoundDistribution(
        kind=BoundKind.RANDOM_SSV, samples=np.array(samples), n_replicates=n_replicates, seed=seed, n_objects=n, ranks=ranks
    )


def random_direction_angle(
    n: int,
    r1: int,
    r2: int,
    n_replicates: int,
    seed: int,
    n_jobs: int | None = None,
) -> BoundDistribution:
    """Smallest principal angle (degrees) between two independent random subspaces.

    Draws the same bases as :func:`random_direction_ssv` for the same seed.
    """
    ranks = (r1, r2)
    _check_random_ranks(n, ranks)
    samples = run_replicates(partial(_smallest_angle, n, ranks), n_replicates, seed, n_jobs=n_jobs)
    return BoundDistribution(
        kind=BoundKind.RANDOM_ANGLE, samples=np.array(samples), n_replicates=n_replicates, seed=seed, n_objects=n, ranks=ranks
    )


class RankCase(StrEnum):
    UNDER = "under"
    CORRECT = "correct"
    OVER = "over"


def rank_case(true_rank: int, estimated_rank: int) -> RankCase:
    if estimated_rank < true_rank:
        return RankCase.UNDER
    if estimated_rank > true_rank:
        return RankCase.OVER
    return RankCase.CORRECT


@dataclass(frozen=True)
class WedinOracle:
    """Exact bound and realized angles for a block whose signal and noise are known."""

    case: RankCase
    theoretical_bound: float
    """Upper bound on the sine of the largest principal angle, capped at 1."""
    true_angles: np.ndarray
    """Principal angles (degrees) between row(A_{k,1}) and the estimated score space."""
    distance: float
    """Sine of the largest true angle, computed without going through arccos."""

    @property
    def bound_angle(self) -> float:
        return float(np.degrees(np.arcsin(self.theoretical_bound)))

    @property
    def largest_angle(self) -> float:
        return float(self.true_angles.max()) if self.true_angles.size else 0.0

    @property
    def holds(self) -> bool:
        return self.distance <= self.theoretical_bound + 1e-12


def _wedin_ratio(perturbation: np.ndarray, estimate: SignalEstimate) -> float:
    smallest = float(estimate.svd.singular_values[-1])
    energy = max(
        linalg.operator_norm(perturbation @ estimate.svd.right),
        linalg.operator_norm(perturbation.T @ estimate.svd.left),
    )
    return min(energy / smallest, 1.0)


def wedin_oracle(
    truth: GroundTruth | BlockTruth,
    estimate: SignalEstimate,
    case: RankCase | None = None,
) -> WedinOracle:
    """Evaluate the rank-case specific Wedin bound with the true noise matrix.

    Under-specified ranks fold the dropped signal ``A_{k,0}`` into the noise.
    Over-specified ranks remove ``E_0``, the leading ``r~ - r`` part of the
    noise outside the signal's singular spaces.
    """
    block = truth if isinstance(truth, BlockTruth) else truth[estimate.block_name]
    true_rank, est_rank = block.signal_rank, estimate.rank
    actual = rank_case(true_rank, est_rank)
    case = actual if case is None else RankCase(case)
    if case != actual:
        raise OracleCaseError(f"Case {case} does not match true rank {true_rank} and estimated rank {est_rank}")
    if est_rank == 0:
        raise EmptySignalError(f"Block {block.name!r}: rank-0 estimate has no Wedin bound")

    estimated_space = estimate.score_space
    signal = block.signal_svd()
    if case == RankCase.UNDER:
        perturbation = block.noise + block.signal - signal.head(est_rank).reconstruct()
        reference = Subspace(signal.head(est_rank).right)
    elif case == RankCase.CORRECT:
        perturbation = block.noise
        reference = Subspace(signal.right)
    else:
        outside = block.noise - signal.left @ (signal.left.T @ block.noise)
        outside = outside - (outside @ signal.right) @ signal.right.T
        e0 = linalg.svd(outside).head(est_rank - true_rank).reconstruct()
        perturbation = block.noise - e0
        reference = Subspace(signal.right)

    return WedinOracle(
        case=case,
        theoretical_bound=_wedin_ratio(perturbation, estimate),
        true_angles=linalg.principal_angles(reference, estimated_space),
        distance=linalg.subspace_distance(reference, estimated_space),
    )
