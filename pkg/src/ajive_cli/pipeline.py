"""End-to-end AJIVE runs: signal extraction, segmentation, final decomposition."""

from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, replace
from enum import StrEnum

from loguru import logger

from ajive_cli.blocks import MultiBlockDataset
from ajive_cli.bounds import (
    BoundDistribution,
    CutoffSettings,
    Stream,
    combine_wedin_multiblock,
    combine_wedin_two_block,
    random_direction_angle,
    random_direction_ssv,
    resample_wedin_block,
)
from ajive_cli.config import DEFAULT_REPLICATES
from ajive_cli.decompose import AjiveDecomposition, DroppedComponent, finalize, recheck_joint
from ajive_cli.errors import ParameterMismatchError, RankSpecError
from ajive_cli.extract import RankSpec, SignalEstimate, initial_extract
from ajive_cli.linalg import Subspace, derive_seed, substream
from ajive_cli.segment import SegmentationDiagnostics, segment_joint


class View(StrEnum):
    AUTO = "auto"
    ANGLE = "angle"
    SSV = "ssv"


@dataclass(frozen=True)
class PipelineSettings:
    n_replicates: int = DEFAULT_REPLICATES
    seed: int = 0
    wedin_percentile: float = 95.0
    """Percentile of the Wedin angle distribution; the ssv view reads ``100 - p``."""
    random_percentile: float = 5.0
    view: View = View.AUTO
    shuffle_pairing: bool = False
    """Shuffle which block replicates are combined instead of pairing them by index."""
    n_jobs: int | None = None

    def __post_init__(self) -> None:
        if self.n_replicates < 1:
            raise ParameterMismatchError(f"Need at least one replicate, got {self.n_replicates}")

    @property
    def cutoffs(self) -> CutoffSettings:
        return CutoffSettings(wedin_percentile=self.wedin_percentile, random_percentile=self.random_percentile)

    def resolve_view(self, n_blocks: int) -> View:
        if self.view == View.AUTO:
            return View.ANGLE if n_blocks == 2 else View.SSV
        if self.view == View.ANGLE and n_blocks != 2:
            raise ParameterMismatchError(f"The angle view needs exactly 2 blocks, got {n_blocks}")
        return self.view

    def to_dict(self) -> dict:
        return {k: str(v) if isinstance(v, StrEnum) else v for k, v in asdict(self).items()}


@dataclass(frozen=True)
class Diagnosis:
    """Everything Step 1 and Step 2 produce for one choice of initial ranks."""

    estimates: list[SignalEstimate]
    block_bounds: list[BoundDistribution] = field(default_factory=list)
    wedin: BoundDistribution | None = None
    random: BoundDistribution | None = None
    diagnostics: SegmentationDiagnostics | None = None
    """``None`` when some block has no signal above its threshold."""
    candidate: Subspace | None = None

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(e.rank for e in self.estimates)

    @property
    def joint_rank_candidate(self) -> int:
        return self.diagnostics.joint_rank_candidate if self.diagnostics is not None else 0

    def to_dict(self) -> dict:
        return {
            "ranks": list(self.ranks),
            "thresholds": {e.block_name: e.threshold for e in self.estimates},
            "warnings": [w for e in self.estimates for w in e.warnings],
            **(self.diagnostics.to_dict() if self.diagnostics is not None else {"joint_rank_candidate": 0, "skipped": True}),
        }


@dataclass(frozen=True)
class AnalysisResult:
    diagnosis: Diagnosis
    decomposition: AjiveDecomposition
    dropped: list[DroppedComponent]
    settings: PipelineSettings

    def summary(self) -> dict:
        return {
            "candidate_joint_rank": self.diagnosis.joint_rank_candidate,
            **self.decomposition.summary(),
            "initial_ranks": list(self.diagnosis.ranks),
            "dropped_components": [d.to_dict() for d in self.dropped],
            "settings": self.settings.to_dict(),
        }


def extract_all(dataset: MultiBlockDataset, rank_specs: Sequence[RankSpec]) -> list[SignalEstimate]:
    if len(rank_specs) != len(dataset):
        raise RankSpecError(f"{len(rank_specs)} rank specifications for {len(dataset)} blocks")
    return [initial_extract(block, spec) for block, spec in zip(dataset, rank_specs)]


def _view_distributions(
    view: View,
    estimates: list[SignalEstimate],
    block_bounds: list[BoundDistribution],
    settings: PipelineSettings,
) -> tuple[BoundDistribution, BoundDistribution]:
    n = estimates[0].n_objects
    ranks = [e.rank for e in estimates]
    pairing = substream(settings.seed, Stream.PAIRING) if settings.shuffle_pairing else None
    random_seed = derive_seed(settings.seed, Stream.RANDOM)
    if view == View.ANGLE:
        wedin = combine_wedin_two_block(block_bounds[0], block_bounds[1], rng=pairing)
        random = random_direction_angle(n, ranks[0], ranks[1], settings.n_replicates, random_seed, n_jobs=settings.n_jobs)
    else:
        wedin = combine_wedin_multiblock(block_bounds, rng=pairing)
        random = random_direction_ssv(n, ranks, settings.n_replicates, random_seed, n_jobs=settings.n_jobs)
    return wedin, random


def diagnose(
    dataset: MultiBlockDataset,
    rank_specs: Sequence[RankSpec],
    settings: PipelineSettings | None = None,
) -> Diagnosis:
    """Run Step 1 and Step 2 for one set of initial ranks.

    Block ``k`` resamples its Wedin bound from seed ``(seed, WEDIN, k)`` and the
    random-direction bound uses ``(seed, RANDOM)``, so a run is reproducible
    from the settings alone.
    """
    settings = settings or PipelineSettings()
    estimates = extract_all(dataset, rank_specs)
    empty = [e.block_name for e in estimates if e.rank == 0]
    if empty:
        logger.warning(f"Skipping segmentation: no signal in {', '.join(empty)}; the joint rank is 0")
        return Diagnosis(estimates=estimates, candidate=Subspace.empty(dataset.n_objects))

    view = settings.resolve_view(len(dataset))
    block_bounds = [
        resample_wedin_block(
            estimate,
            block,
            settings.n_replicates,
            seed=derive_seed(settings.seed, Stream.WEDIN, k),
            n_jobs=settings.n_jobs,
        )
        for k, (estimate, block) in enumerate(zip(estimates, dataset))
    ]
    wedin, random = _view_distributions(view, estimates, block_bounds, settings)
    diagnostics, candidate = segment_joint(estimates, wedin, random, settings.cutoffs)

    if len(dataset) == 2:
        other = View.SSV if view == View.ANGLE else View.ANGLE
        other_wedin, other_random = _view_distributions(other, estimates, block_bounds, settings)
        companion, _ = segment_joint(estimates, other_wedin, other_random, settings.cutoffs)
        diagnostics = replace(
            diagnostics,
            companion_view={
                "view": companion.view,
                "wedin_cutoff": companion.wedin_cutoff,
                "random_cutoff": companion.random_cutoff,
                "joint_rank_candidate": companion.joint_rank_candidate,
                "verdicts": [str(v) for v in companion.verdicts],
                "flags": companion.flags,
            },
        )

    logger.info(f"Initial ranks {diagnostics.ranks}: joint rank candidate {diagnostics.joint_rank_candidate}")
    return Diagnosis(
        estimates=estimates,
        block_bounds=block_bounds,
        wedin=wedin,
        random=random,
        diagnostics=diagnostics,
        candidate=candidate,
    )


def analyze(
    dataset: MultiBlockDataset,
    rank_specs: Sequence[RankSpec],
    settings: PipelineSettings | None = None,
) -> AnalysisResult:
    """Full decomposition: :func:`diagnose`, then the Step 3 recheck and projection."""
    settings = settings or PipelineSettings()
    diagnosis = diagnose(dataset, rank_specs, settings)
    assert diagnosis.candidate is not None
    joint, dropped = recheck_joint(dataset, diagnosis.estimates, diagnosis.candidate)
    decomposition = finalize(dataset, diagnosis.estimates, joint)
    logger.info(
        f"Joint rank {decomposition.joint_rank} (candidate {diagnosis.joint_rank_candidate}), "
        f"individual ranks {decomposition.individual_ranks}"
    )
    return AnalysisResult(diagnosis=diagnosis, decomposition=decomposition, dropped=dropped, settings=settings)
