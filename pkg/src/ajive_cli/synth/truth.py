"""Known signal, joint, individual and noise parts of a simulated dataset."""

from dataclasses import dataclass

import numpy as np

from ajive_cli import linalg
from ajive_cli.linalg import Subspace, TruncatedSvd


@dataclass(frozen=True)
class BlockTruth:
    """Population decomposition ``X_k = J_k + I_k + E_k`` of one simulated block."""

    name: str
    joint: np.ndarray
    individual: np.ndarray
    noise: np.ndarray
    joint_rank: int
    individual_rank: int

    @property
    def signal(self) -> np.ndarray:
        return self.joint + self.individual

    @property
    def data(self) -> np.ndarray:
        return self.signal + self.noise

    @property
    def signal_rank(self) -> int:
        return self.joint_rank + self.individual_rank

    def signal_svd(self) -> TruncatedSvd:
        """SVD of ``A_k`` truncated to its true rank."""
        return linalg.svd(self.signal).head(self.signal_rank)

    def split_signal(self, rank: int) -> tuple[np.ndarray, np.ndarray]:
        """``(A_{k,1}, A_{k,0})``: the rank-``rank`` SVD part of the signal and the rest."""
        head = self.signal_svd().head(rank).reconstruct()
        return head, self.signal - head


@dataclass(frozen=True)
class GroundTruth:
    blocks: tuple[BlockTruth, ...]
    joint_space: Subspace
    individual_spaces: tuple[Subspace, ...]

    def __getitem__(self, name: str) -> BlockTruth:
        for block in self.blocks:
            if block.name == name:
                return block
        raise KeyError(name)

    @property
    def joint_rank(self) -> int:
        return self.joint_space.rank

    @property
    def individual_ranks(self) -> tuple[int, ...]:
        return tuple(s.rank for s in self.individual_spaces)

    def individual_angles(self, i: int, j: int) -> np.ndarray:
        """Principal angles (degrees) between two blocks' individual score spaces."""
        return linalg.principal_angles(self.individual_spaces[i], self.individual_spaces[j])
