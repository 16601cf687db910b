"""Random datasets that follow the joint/individual population model exactly."""

from collections.abc import Sequence

import numpy as np

from ajive_cli import linalg
from ajive_cli.blocks import MultiBlockDataset
from ajive_cli.errors import AmbientDimensionError
from ajive_cli.linalg import Subspace
from ajive_cli.synth.toy import dataset_from_truth
from ajive_cli.synth.truth import BlockTruth, GroundTruth


def make_model(
    n: int,
    joint_rank: int,
    individual_ranks: Sequence[int],
    features: Sequence[int] | None = None,
    noise_scale: float = 0.0,
    rng: np.random.Generator | int | None = None,
) -> tuple[MultiBlockDataset, GroundTruth]:
    """Draw a K-block dataset with known joint and individual parts.

    The joint score space and every block's individual score space are
    uniformly random and mutually orthogonal, which makes the individual
    spaces intersect trivially. Loadings are standard Gaussian.

    Args:
        n: Number of objects.
        joint_rank: Rank of the shared score space.
        individual_ranks: One individual rank per block.
        features: Row counts per block; default ``n`` each.
        noise_scale: Standard deviation of the additive Gaussian noise.
        rng: Generator or seed.
    """
    rng = np.random.default_rng(rng)
    k = len(individual_ranks)
    features = list(features) if features is not None else [n] * k
    if len(features) != k:
        raise AmbientDimensionError(f"{len(features)} feature counts for {k} blocks")
    if joint_rank + sum(individual_ranks) > n:
        raise AmbientDimensionError(
            f"Joint rank {joint_rank} plus individual ranks {list(individual_ranks)} exceed n = {n}"
        )
    for d, r in zip(features, individual_ranks):
        if joint_rank + r > d:
            raise AmbientDimensionError(f"A block with {d} features cannot hold rank {joint_rank + r}")

    taken = linalg.random_orthonormal(n, joint_rank, rng=rng)
    joint_space = taken
    individual_spaces = []
    for r in individual_ranks:
        space = linalg.random_orthonormal(n, r, orthogonal_to=taken, rng=rng)
        individual_spaces.append(space)
        taken = Subspace.spanned_by(np.hstack([taken.basis, space.basis]))

    blocks = []
    for index, (d, space) in enumerate(zip(features, individual_spaces)):
        joint = rng.standard_normal((d, joint_rank)) @ joint_space.basis.T
        individual = rng.standard_normal((d, space.rank)) @ space.basis.T
        noise = noise_scale * rng.standard_normal((d, n))
        blocks.append(
            BlockTruth(
                name=f"block{index + 1}",
                joint=joint,
                individual=individual,
                noise=noise,
                joint_rank=joint_rank,
                individual_rank=space.rank,
            )
        )
    truth = GroundTruth(blocks=tuple(blocks), joint_space=joint_space, individual_spaces=tuple(individual_spaces))
    return dataset_from_truth(truth), truth
