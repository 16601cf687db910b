"""Step 1: per-block signal extraction by thresholding singular values."""

import re
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from ajive_cli import linalg
from ajive_cli.blocks import DataBlock
from ajive_cli.errors import RankSpecError
from ajive_cli.linalg import Subspace, TruncatedSvd


@dataclass(frozen=True)
class RankSpec:
    """Either a target rank or a singular-value threshold; exactly one is set."""

    rank: int | None = None
    threshold: float | None = None

    def __post_init__(self) -> None:
        if (self.rank is None) == (self.threshold is None):
            raise RankSpecError("Give exactly one of a rank or a threshold")
        if self.rank is not None and self.rank < 1:
            raise RankSpecError(f"Rank must be a positive integer, got {self.rank}")
        if self.threshold is not None and not self.threshold > 0:
            raise RankSpecError(f"Threshold must be positive, got {self.threshold}")

    @classmethod
    def parse(cls, text: str) -> "RankSpec":
        """``"3"`` is a rank, ``"t=12.5"`` (or any non-integer number) a threshold."""
        text = text.strip()
        if m := re.fullmatch(r"t\s*=\s*(.+)", text):
            return cls(threshold=_to_float(m.group(1)))
        if re.fullmatch(r"[+]?\d+", text):
            return cls(rank=int(text))
        return cls(threshold=_to_float(text))

    def __str__(self) -> str:
        return str(self.rank) if self.rank is not None else f"t={self.threshold:g}"


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise RankSpecError(f"Cannot parse rank specification {text!r}") from e


def parse_rank_specs(text: str) -> list[RankSpec]:
    """Parse a comma-separated list such as ``2,3`` or ``2,t=40``."""
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise RankSpecError("Empty rank specification")
    return [RankSpec.parse(p) for p in parts]


@dataclass(frozen=True)
class SignalEstimate:
    """Low-rank approximation of one block and what was left over."""

    block_name: str
    svd: TruncatedSvd
    threshold: float
    residual: np.ndarray
    all_singular_values: np.ndarray
    warnings: list[str] = field(default_factory=list)

    @property
    def rank(self) -> int:
        return self.svd.rank

    @property
    def n_objects(self) -> int:
        return self.residual.shape[1]

    @property
    def approximation(self) -> np.ndarray:
        return self.svd.reconstruct()

    @property
    def score_space(self) -> Subspace:
        """Estimated row space of the signal, a subspace of R^n."""
        return Subspace(self.svd.right)

    @property
    def loading_space(self) -> Subspace:
        return Subspace(self.svd.left)


def scree(block: DataBlock) -> np.ndarray:
    """All singular values of a block, nonincreasing."""
    return linalg.singular_values(block.values)


def _numerical_rank(values: np.ndarray, shape: tuple[int, int]) -> int:
    if values.size == 0 or values[0] == 0:
        return 0
    tol = max(shape) * np.finfo(np.float64).eps * values[0]
    return int(np.count_nonzero(values > tol))


def resolve_threshold(values: np.ndarray, shape: tuple[int, int], spec: RankSpec) -> float:
    """Turn a rank into the midpoint threshold between the kept and the first dropped value."""
    if spec.threshold is not None:
        return spec.threshold
    rank = spec.rank
    assert rank is not None
    if rank > min(shape):
        raise RankSpecError(f"Rank {rank} exceeds min(d, n) = {min(shape)}")
    if rank > _numerical_rank(values, shape):
        raise RankSpecError(f"Rank {rank} exceeds the numerical rank {_numerical_rank(values, shape)} of the block")
    below = values[rank] if rank < values.size else 0.0
    if values[rank - 1] <= below:
        raise RankSpecError(f"Singular values {rank} and {rank + 1} are tied; rank {rank} is not separable")
    return float((values[rank - 1] + below) / 2)


def initial_extract(block: DataBlock, spec: RankSpec) -> SignalEstimate:
    """Keep the components of ``block`` whose singular value exceeds the resolved threshold."""
    full = linalg.svd(block.values)
    threshold = resolve_threshold(full.singular_values, block.shape, spec)
    kept = linalg.truncate(full, threshold)

    warnings = []
    if kept.rank == 0:
        message = f"Block {block.name!r}: no singular value above threshold {threshold:g}; signal rank is 0"
        logger.warning(message)
        warnings.append(message)
    logger.debug(f"Block [bold]{block.name}[/]: rank {kept.rank}, threshold {threshold:.6g}")

    residual = np.asarray(block.values) - kept.reconstruct()
    return SignalEstimate(
        block_name=block.name,
        svd=kept,
        threshold=threshold,
        residual=residual,
        all_singular_values=full.singular_values,
        warnings=warnings,
    )
