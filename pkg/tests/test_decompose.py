"""Tests for the Step 3 recheck and the final decomposition."""

import numpy as np
import pytest

from ajive_cli.blocks import DataBlock, MultiBlockDataset
from ajive_cli.bounds import cutoff, random_direction_angle
from ajive_cli.decompose import check_decomposition, check_invariants, finalize, recheck_joint
from ajive_cli.extract import RankSpec, initial_extract
from ajive_cli.linalg import Subspace, principal_angles
from ajive_cli.synth.model import make_model


def _exact(dataset: MultiBlockDataset, truth):
    """Signal estimates at the true ranks; the candidate is the true joint space."""
    estimates = [
        initial_extract(block, RankSpec(rank=part.signal_rank)) for block, part in zip(dataset, truth.blocks)
    ]
    return estimates, truth.joint_space


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


class TestRecheck:
    def test_keeps_true_joint(self, noiseless_model):
        dataset, truth = noiseless_model
        estimates, candidate = _exact(dataset, truth)
        joint, dropped = recheck_joint(dataset, estimates, candidate)
        assert joint.rank == 1
        assert dropped == []

    def test_drops_direction_missing_from_a_block(self, noiseless_model):
        dataset, truth = noiseless_model
        estimates, _ = _exact(dataset, truth)
        candidate = Subspace(np.hstack([truth.joint_space.basis, truth.individual_spaces[0].basis]))
        joint, dropped = recheck_joint(dataset, estimates, candidate)
        assert joint.rank == 1
        assert len(dropped) == 1
        assert dropped[0].index == 1
        assert dropped[0].failing_blocks == ["block2"]
        assert dropped[0].projection_norms["block2"] == pytest.approx(0.0, abs=1e-9)
        assert dropped[0].to_dict()["failing_blocks"] == ["block2"]


class TestFinalize:
    def test_recovers_truth(self, noiseless_model):
        dataset, truth = noiseless_model
        estimates, candidate = _exact(dataset, truth)
        decomposition = finalize(dataset, estimates, candidate)
        assert decomposition.joint_rank == 1
        assert decomposition.individual_ranks == [1, 2]
        for part in truth.blocks:
            block = decomposition[part.name]
            assert _relative(block.joint, part.joint) < 1e-8
            assert _relative(block.individual, part.individual) < 1e-8
            assert np.linalg.norm(block.noise) < 1e-8 * np.linalg.norm(part.signal)

    def test_score_representations(self, noiseless_model):
        dataset, truth = noiseless_model
        estimates, candidate = _exact(dataset, truth)
        block = finalize(dataset, estimates, candidate)["block2"]
        assert np.allclose(block.bss_joint_loadings @ block.bss_joint_scores, block.joint)
        assert np.allclose(block.bss_individual_loadings @ block.bss_individual_scores, block.individual)
        assert np.allclose(block.ins_scores @ block.ins_scores.T, np.eye(2))
        assert np.allclose(np.linalg.norm(block.cns_loadings, axis=0), 1.0)

    def test_sign_convention(self, noiseless_model):
        dataset, truth = noiseless_model
        estimates, candidate = _exact(dataset, truth)
        for block in finalize(dataset, estimates, candidate).blocks:
            for column in block.joint_svd.right.T:
                assert column[np.flatnonzero(np.abs(column) > 1e-12)[0]] > 0

    def test_empty_joint(self, noiseless_model):
        dataset, truth = noiseless_model
        estimates, _ = _exact(dataset, truth)
        decomposition = finalize(dataset, estimates, Subspace.empty(dataset.n_objects))
        assert decomposition.joint_rank == 0
        assert decomposition.cns_scores.shape == (0, 40)
        assert decomposition.individual_ranks == [2, 3]
        assert check_decomposition(dataset, decomposition).ok

    def test_summary(self, noiseless_model):
        dataset, truth = noiseless_model
        estimates, candidate = _exact(dataset, truth)
        summary = finalize(dataset, estimates, candidate).summary()
        assert summary["joint_rank"] == 1
        assert summary["blocks"]["block2"]["individual_rank"] == 2

    def test_refinalizing_signal_is_stable(self):
        dataset, truth = make_model(60, 1, (2, 2), features=(40, 30), noise_scale=0.05, rng=3)
        estimates, candidate = _exact(dataset, truth)
        first = finalize(dataset, estimates, candidate)
        rebuilt = MultiBlockDataset(blocks=tuple(DataBlock(name=b.name, values=b.joint + b.individual) for b in first.blocks))
        second = finalize(rebuilt, estimates, first.joint_basis)
        assert second.individual_ranks == first.individual_ranks
        for a, b in zip(first.blocks, second.blocks):
            assert _relative(b.joint, a.joint) < 1e-10
            assert _relative(b.individual, a.individual) < 1e-10
            assert np.linalg.norm(b.noise) < 1e-10 * np.linalg.norm(a.joint + a.individual)


class TestInvariants:
    def test_random_models(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            k = int(rng.integers(2, 5))
            n = int(rng.integers(20, 40))
            joint_rank = int(rng.integers(0, 3))
            ranks = [int(r) for r in rng.integers(1, 4, size=k)]
            features = [int(d) for d in rng.integers(joint_rank + 4, 30, size=k)]
            dataset, truth = make_model(n, joint_rank, ranks, features=features, rng=rng)
            estimates, candidate = _exact(dataset, truth)
            joint, dropped = recheck_joint(dataset, estimates, candidate)
            assert dropped == []
            decomposition = finalize(dataset, estimates, joint)
            report = check_decomposition(dataset, decomposition)
            assert report.ok, report.violations
            for part in truth.blocks:
                block = decomposition[part.name]
                if joint_rank:
                    assert _relative(block.joint, part.joint) < 1e-8
                assert _relative(block.individual, part.individual) < 1e-8

    def test_individual_spaces_intersect_trivially(self):
        dataset, truth = make_model(40, 1, (2, 3), features=(30, 25), rng=5)
        estimates, candidate = _exact(dataset, truth)
        first, second = finalize(dataset, estimates, candidate).blocks
        smallest = principal_angles(Subspace(first.individual_svd.right), Subspace(second.individual_svd.right))[0]
        null = random_direction_angle(40, first.individual_rank, second.individual_rank, 200, seed=0)
        assert smallest > cutoff(null, 5)

    def test_detects_broken_additivity(self, noiseless_model):
        dataset, truth = noiseless_model
        estimates, candidate = _exact(dataset, truth)
        decomposition = finalize(dataset, estimates, candidate)
        report = check_invariants(
            names=dataset.names,
            data=[np.asarray(b.values) for b in dataset],
            joint=[b.joint for b in decomposition.blocks],
            individual=[b.individual for b in decomposition.blocks],
            noise=[b.noise + 1.0 for b in decomposition.blocks],
            joint_basis=decomposition.joint_basis.basis,
            cns_loadings=[b.cns_loadings for b in decomposition.blocks],
        )
        assert not report.ok
        assert any("X != J + I + E" in v for v in report.violations)

    def test_detects_individual_in_joint_space(self, noiseless_model):
        dataset, truth = noiseless_model
        estimates, candidate = _exact(dataset, truth)
        decomposition = finalize(dataset, estimates, candidate)
        leak = [b.joint for b in decomposition.blocks]
        report = check_invariants(
            names=dataset.names,
            data=[np.asarray(b.values) for b in dataset],
            joint=[np.zeros_like(j) for j in leak],
            individual=[b.individual + j for b, j in zip(decomposition.blocks, leak)],
            noise=[b.noise for b in decomposition.blocks],
            joint_basis=decomposition.joint_basis.basis,
            cns_loadings=[b.cns_loadings for b in decomposition.blocks],
        )
        assert any("orthogonal" in v for v in report.violations)
