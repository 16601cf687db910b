"""Step 3: final joint, individual and noise matrices for every block."""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from ajive_cli import linalg
from ajive_cli.blocks import MultiBlockDataset
from ajive_cli.errors import DimensionMismatchError
from ajive_cli.extract import SignalEstimate
from ajive_cli.linalg import Subspace, TruncatedSvd


@dataclass(frozen=True)
class DroppedComponent:
    """A candidate joint direction that some block does not carry above its threshold."""

    index: int
    failing_blocks: list[str]
    projection_norms: dict[str, float]

    def to_dict(self) -> dict:
        return {"index": self.index, "failing_blocks": self.failing_blocks, "projection_norms": self.projection_norms}


@dataclass(frozen=True)
class BlockDecomposition:
    name: str
    threshold: float
    joint_svd: TruncatedSvd
    """SVD of ``J_k``; the right vectors span the joint score space."""
    individual_svd: TruncatedSvd
    noise: np.ndarray
    cns_loadings: np.ndarray
    """``J_k V_J`` with unit columns, one per joint score vector."""

    @property
    def joint(self) -> np.ndarray:
        return self.joint_svd.reconstruct()

    @property
    def individual(self) -> np.ndarray:
        return self.individual_svd.reconstruct()

    @property
    def joint_rank(self) -> int:
        return self.joint_svd.rank

    @property
    def individual_rank(self) -> int:
        return self.individual_svd.rank

    @property
    def rank(self) -> int:
        return self.joint_rank + self.individual_rank

    @property
    def bss_joint_scores(self) -> np.ndarray:
        """Block specific joint scores ``Σ_J V_J^T``."""
        return self.joint_svd.singular_values[:, None] * self.joint_svd.right.T

    @property
    def bss_joint_loadings(self) -> np.ndarray:
        return self.joint_svd.left

    @property
    def bss_individual_scores(self) -> np.ndarray:
        return self.individual_svd.singular_values[:, None] * self.individual_svd.right.T

    @property
    def bss_individual_loadings(self) -> np.ndarray:
        return self.individual_svd.left

    @property
    def ins_scores(self) -> np.ndarray:
        """Individual normalized scores, an orthonormal basis of the individual score space."""
        return self.individual_svd.right.T


@dataclass(frozen=True)
class AjiveDecomposition:
    joint_basis: Subspace
    blocks: tuple[BlockDecomposition, ...]

    @property
    def joint_rank(self) -> int:
        return self.joint_basis.rank

    @property
    def cns_scores(self) -> np.ndarray:
        """Common normalized scores, ``V_J^T``."""
        return self.joint_basis.basis.T

    @property
    def individual_ranks(self) -> list[int]:
        return [b.individual_rank for b in self.blocks]

    def __getitem__(self, name: str) -> BlockDecomposition:
        for block in self.blocks:
            if block.name == name:
                return block
        raise KeyError(name)

    def summary(self) -> dict:
        return {
            "joint_rank": self.joint_rank,
            "blocks": {
                b.name: {
                    "threshold": b.threshold,
                    "joint_rank": b.joint_rank,
                    "individual_rank": b.individual_rank,
                    "rank": b.rank,
                    "individual_singular_values": b.individual_svd.singular_values.tolist(),
                }
                for b in self.blocks
            },
        }


def recheck_joint(
    dataset: MultiBlockDataset,
    estimates: Sequence[SignalEstimate],
    candidate: Subspace,
) -> tuple[Subspace, list[DroppedComponent]]:
    """Keep a candidate direction ``v`` only if ``||X_k v|| > t_k`` in every block.

    Candidates are checked as unit columns in the order Step 2 produced them.
    """
    kept, dropped = [], []
    for i in range(candidate.rank):
        v = candidate.basis[:, i]
        norms = {b.name: float(np.linalg.norm(np.asarray(b.values) @ v)) for b in dataset}
        failing = [e.block_name for e in estimates if not norms[e.block_name] > e.threshold]
        if failing:
            logger.warning(f"Dropping candidate joint component {i + 1}: below threshold in {', '.join(failing)}")
            dropped.append(DroppedComponent(index=i, failing_blocks=failing, projection_norms=norms))
        else:
            kept.append(i)
    return candidate.columns(kept), dropped


def _cns_loadings(name: str, projected: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(projected, axis=0)
    zero = norms == 0
    if zero.any():
        logger.warning(f"Block {name!r} has no energy along joint components {np.flatnonzero(zero) + 1}")
    return projected / np.where(zero, 1.0, norms)


def finalize(
    dataset: MultiBlockDataset,
    estimates: Sequence[SignalEstimate],
    joint: Subspace,
) -> AjiveDecomposition:
    """Project every block onto the joint space and rethreshold what is left."""
    if joint.ambient_dim != dataset.n_objects:
        raise DimensionMismatchError(f"Joint basis lives in R^{joint.ambient_dim}, blocks have {dataset.n_objects} objects")
    v = joint.basis
    blocks = []
    for block, estimate in zip(dataset, estimates):
        x = np.asarray(block.values)
        projected = x @ v
        cross = linalg.svd(projected)
        # J_k = (X_k V_J) V_J^T, so the SVD of the thin product gives the SVD of J_k
        left, right = linalg.align_signs(cross.left, v @ cross.right)
        joint_svd = TruncatedSvd(left=left, singular_values=cross.singular_values, right=right)
        orthogonal = x - projected @ v.T
        individual_svd = linalg.truncate(linalg.svd(orthogonal), estimate.threshold)
        noise = x - joint_svd.reconstruct() - individual_svd.reconstruct()
        blocks.append(
            BlockDecomposition(
                name=block.name,
                threshold=estimate.threshold,
                joint_svd=joint_svd,
                individual_svd=individual_svd,
                noise=noise,
                cns_loadings=_cns_loadings(block.name, projected),
            )
        )
        logger.debug(f"Block [bold]{block.name}[/]: joint rank {joint_svd.rank}, individual rank {individual_svd.rank}")
    return AjiveDecomposition(joint_basis=joint, blocks=tuple(blocks))


@dataclass
class InvariantReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def expect(self, condition: bool, message: str) -> None:
        if not condition:
            self.violations.append(message)


def check_invariants(
    names: Sequence[str],
    data: Sequence[np.ndarray],
    joint: Sequence[np.ndarray],
    individual: Sequence[np.ndarray],
    noise: Sequence[np.ndarray],
    joint_basis: np.ndarray,
    cns_loadings: Sequence[np.ndarray],
    tol: float = 1e-10,
) -> InvariantReport:
    """Check the defining properties of a decomposition.

    Tolerances are relative to the Frobenius norm of each block.
    """
    report = InvariantReport()
    r = joint_basis.shape[1]
    report.expect(
        r == 0 or np.allclose(joint_basis.T @ joint_basis, np.eye(r), atol=1e-8),
        "joint score basis is not orthonormal",
    )
    for name, x, j, i, e, loadings in zip(names, data, joint, individual, noise, cns_loadings):
        scale = max(float(np.linalg.norm(x)), 1.0)
        report.expect(np.linalg.norm(x - j - i - e) <= tol * scale, f"{name}: X != J + I + E")
        report.expect(
            np.linalg.norm(j - (j @ joint_basis) @ joint_basis.T) <= tol * scale,
            f"{name}: joint matrix leaves the joint score space",
        )
        report.expect(np.linalg.norm(i @ joint_basis) <= tol * scale, f"{name}: individual matrix is not orthogonal to the joint space")
        report.expect(np.linalg.matrix_rank(j, tol=tol * scale) <= r, f"{name}: joint matrix rank exceeds {r}")
        norms = np.linalg.norm(loadings, axis=0)
        report.expect(
            bool(np.all((np.abs(norms - 1.0) <= tol) | (norms == 0))),
            f"{name}: CNS loadings are not unit vectors",
        )
    return report


def check_decomposition(dataset: MultiBlockDataset, decomposition: AjiveDecomposition, tol: float = 1e-10) -> InvariantReport:
    report = check_invariants(
        names=dataset.names,
        data=[np.asarray(b.values) for b in dataset],
        joint=[b.joint for b in decomposition.blocks],
        individual=[b.individual for b in decomposition.blocks],
        noise=[b.noise for b in decomposition.blocks],
        joint_basis=decomposition.joint_basis.basis,
        cns_loadings=[b.cns_loadings for b in decomposition.blocks],
        tol=tol,
    )
    for block in decomposition.blocks:
        report.expect(
            bool(np.all(block.individual_svd.singular_values > block.threshold)),
            f"{block.name}: individual singular value at or below threshold {block.threshold:g}",
        )
    return report
