"""Step 2: find the joint score directions shared by every block.

The estimated score bases are stacked and decomposed; a stacked component is
joint when its squared singular value (or, for two blocks, its principal
angle) beats both the Wedin bound and the random-direction bound.
"""

from dataclasses import asdict, dataclass, field
from enum import StrEnum

import numpy as np
from loguru import logger

from ajive_cli import linalg
from ajive_cli.bounds import BoundCutoffs, BoundDistribution, BoundKind, CutoffSettings
from ajive_cli.errors import (
    DimensionMismatchError,
    DistributionKindError,
    EmptySignalError,
    ParameterMismatchError,
    TooFewBlocksError,
)
from ajive_cli.extract import SignalEstimate
from ajive_cli.linalg import Subspace, TruncatedSvd

UNINFORMATIVE_WEDIN = "wedin_bound_uninformative"

_VIEW_KINDS = {
    "angle": (BoundKind.WEDIN_JOINT_ANGLE, BoundKind.RANDOM_ANGLE),
    "ssv": (BoundKind.WEDIN_JOINT_SSV, BoundKind.RANDOM_SSV),
}


@dataclass(frozen=True)
class StackedScores:
    """``M``: the estimated score bases ``V_k^T`` stacked vertically, and its SVD."""

    matrix: np.ndarray
    svd: TruncatedSvd
    ranks: tuple[int, ...]

    @property
    def n_blocks(self) -> int:
        return len(self.ranks)

    @property
    def squared_singular_values(self) -> np.ndarray:
        return self.svd.singular_values**2


class Verdict(StrEnum):
    JOINT = "joint"
    INDIVIDUAL_CORRELATED = "individual_correlated"
    NOISE = "noise"


@dataclass(frozen=True)
class SegmentationDiagnostics:
    view: str
    ranks: tuple[int, ...]
    squared_singular_values: np.ndarray
    principal_angles_deg: np.ndarray | None
    cutoffs: BoundCutoffs
    joint_rank_candidate: int
    verdicts: list[Verdict]
    wedin_summary: dict
    random_summary: dict
    flags: list[str] = field(default_factory=list)
    companion_view: dict | None = None
    """Same decision made in the other view (two blocks only), for comparison."""

    @property
    def wedin_cutoff(self) -> float:
        return self.cutoffs.wedin_cutoff

    @property
    def random_cutoff(self) -> float:
        return self.cutoffs.random_cutoff

    @property
    def wedin_uninformative(self) -> bool:
        return UNINFORMATIVE_WEDIN in self.flags

    def to_dict(self) -> dict:
        return {
            "view": self.view,
            "ranks": list(self.ranks),
            "ssv": self.squared_singular_values.tolist(),
            "angles_deg": self.principal_angles_deg.tolist() if self.principal_angles_deg is not None else None,
            **asdict(self.cutoffs),
            "wedin_samples_summary": self.wedin_summary,
            "random_samples_summary": self.random_summary,
            "verdicts": [str(v) for v in self.verdicts],
            "joint_rank_candidate": self.joint_rank_candidate,
            "flags": list(self.flags),
            "companion_view": self.companion_view,
        }


def stack_scores(estimates: list[SignalEstimate]) -> StackedScores:
    if len(estimates) < 2:
        raise TooFewBlocksError(f"Need at least 2 signal estimates, got {len(estimates)}")
    objects = {e.n_objects for e in estimates}
    if len(objects) != 1:
        raise DimensionMismatchError(f"Signal estimates have different numbers of objects: {sorted(objects)}")
    empty = [e.block_name for e in estimates if e.rank == 0]
    if empty:
        raise EmptySignalError(f"Rank-0 signal estimates cannot be segmented: {', '.join(empty)}")
    matrix = np.vstack([e.svd.right.T for e in estimates])
    return StackedScores(matrix=matrix, svd=linalg.svd(matrix), ranks=tuple(e.rank for e in estimates))


def angles_from_stack(stack: StackedScores) -> np.ndarray:
    """Principal angles (degrees) between two score spaces, ``arccos(σ² - 1)``."""
    if stack.n_blocks != 2:
        raise ParameterMismatchError(f"Principal angles need exactly 2 blocks, got {stack.n_blocks}")
    count = min(stack.ranks)
    cosines = np.clip(stack.squared_singular_values[:count] - 1.0, -1.0, 1.0)
    return np.degrees(np.arccos(cosines))


def _check_distribution(dist: BoundDistribution, expected: BoundKind, stack: StackedScores, n: int) -> None:
    if dist.kind != expected:
        raise DistributionKindError(f"Expected a {expected} distribution, got {dist.kind}")
    if dist.n_objects is not None and dist.n_objects != n:
        raise ParameterMismatchError(f"{dist.kind} was simulated for n={dist.n_objects}, the data has n={n}")
    if dist.ranks and tuple(dist.ranks) != stack.ranks:
        raise ParameterMismatchError(f"{dist.kind} was simulated for ranks {dist.ranks}, the estimates have {stack.ranks}")


def segment_joint(
    estimates: list[SignalEstimate],
    wedin_dist: BoundDistribution,
    random_dist: BoundDistribution,
    settings: CutoffSettings | None = None,
) -> tuple[SegmentationDiagnostics, Subspace]:
    """Decide how many stacked components are joint and return their score basis.

    The view (angles or squared singular values) follows the kind of
    ``wedin_dist``; angles are only available for two blocks.
    """
    stack = stack_scores(estimates)
    n = estimates[0].n_objects
    view = "angle" if wedin_dist.kind.is_angle else "ssv"
    wedin_kind, random_kind = _VIEW_KINDS[view]
    if view == "angle" and stack.n_blocks != 2:
        raise ParameterMismatchError(f"The angle view needs exactly 2 blocks, got {stack.n_blocks}")
    _check_distribution(wedin_dist, wedin_kind, stack, n)
    _check_distribution(random_dist, random_kind, stack, n)

    cutoffs = BoundCutoffs.from_distributions(wedin_dist, random_dist, settings)
    count = min(stack.ranks)
    angles = angles_from_stack(stack) if stack.n_blocks == 2 else None
    if view == "angle":
        assert angles is not None
        statistic = angles
        passes_wedin = statistic < cutoffs.wedin_cutoff
        passes_random = statistic < cutoffs.random_cutoff
        uninformative = cutoffs.wedin_cutoff >= cutoffs.random_cutoff
    else:
        statistic = stack.squared_singular_values[:count]
        passes_wedin = statistic > cutoffs.wedin_cutoff
        passes_random = statistic > cutoffs.random_cutoff
        uninformative = cutoffs.wedin_cutoff <= cutoffs.random_cutoff

    verdicts = [
        Verdict.NOISE if not r else Verdict.JOINT if w else Verdict.INDIVIDUAL_CORRELATED
        for w, r in zip(passes_wedin, passes_random)
    ]
    # statistics are monotone in the component index, so joint components lead
    joint_rank = verdicts.count(Verdict.JOINT)

    flags = []
    if uninformative:
        flags.append(UNINFORMATIVE_WEDIN)
        logger.warning(
            f"Wedin cutoff {cutoffs.wedin_cutoff:.4g} is weaker than the random-direction cutoff "
            f"{cutoffs.random_cutoff:.4g} for ranks {stack.ranks}; consider smaller initial ranks"
        )
    logger.debug(f"Ranks {stack.ranks}: {view} statistics {np.round(statistic, 4).tolist()}, joint candidate {joint_rank}")

    diagnostics = SegmentationDiagnostics(
        view=view,
        ranks=stack.ranks,
        squared_singular_values=stack.squared_singular_values,
        principal_angles_deg=angles,
        cutoffs=cutoffs,
        joint_rank_candidate=joint_rank,
        verdicts=verdicts,
        wedin_summary=wedin_dist.summary(),
        random_summary=random_dist.summary(),
        flags=flags,
    )
    return diagnostics, Subspace(stack.svd.right[:, :joint_rank])
