"""Tests for resampled Wedin bounds, random-direction bounds and the Wedin oracle."""

import numpy as np
import pytest
from scipy import stats

from ajive_cli.blocks import DataBlock
from ajive_cli.bounds import (
    BoundDistribution,
    BoundKind,
    CutoffSettings,
    RankCase,
    combine_wedin_multiblock,
    combine_wedin_two_block,
    cutoff,
    random_direction_angle,
    random_direction_ssv,
    rank_case,
    resample_wedin_block,
    wedin_oracle,
)
from ajive_cli.errors import (
    AjiveError,
    AmbientDimensionError,
    DistributionKindError,
    EmptySignalError,
    OracleCaseError,
    ParameterMismatchError,
)
from ajive_cli.extract import RankSpec, initial_extract
from ajive_cli.linalg import Subspace, principal_angles, random_orthonormal, substream
from ajive_cli.synth.toy import make_toy
from ajive_cli.synth.truth import BlockTruth


def _constant(value: float, n: int = 10, kind: BoundKind = BoundKind.WEDIN_BLOCK_SIN, n_objects: int = 20) -> BoundDistribution:
    return BoundDistribution(kind=kind, samples=np.full(n, value), n_replicates=n, n_objects=n_objects, ranks=(1,))


def _known_block(noise_scale: float, seed: int = 0) -> BlockTruth:
    """8x8 block with rank-2 signal of singular values 10 and 5."""
    rng = np.random.default_rng(seed)
    left, _ = np.linalg.qr(rng.standard_normal((8, 2)))
    right, _ = np.linalg.qr(rng.standard_normal((8, 2)))
    return BlockTruth(
        "a",
        joint=left @ np.diag([10.0, 5.0]) @ right.T,
        individual=np.zeros((8, 8)),
        noise=noise_scale * rng.standard_normal((8, 8)),
        joint_rank=2,
        individual_rank=0,
    )


class TestCutoff:
    def test_linear_interpolation(self):
        dist = BoundDistribution(kind=BoundKind.RANDOM_ANGLE, samples=np.arange(1.0, 101.0), n_replicates=100)
        assert cutoff(dist, 50) == pytest.approx(50.5)
        assert dist.percentile(100) == 100.0

    def test_summary(self):
        summary = _constant(0.3).summary()
        assert summary["kind"] == "wedin_block_sin"
        assert summary["n"] == 10
        assert summary["percentiles"]["95"] == pytest.approx(0.3)

    def test_sample_count_must_match(self):
        with pytest.raises(AjiveError):
            BoundDistribution(kind=BoundKind.RANDOM_SSV, samples=np.ones(3), n_replicates=4)

    def test_percentile_convention(self):
        settings = CutoffSettings()
        assert settings.for_kind(BoundKind.WEDIN_JOINT_ANGLE) == (95.0, 5.0)
        assert settings.for_kind(BoundKind.WEDIN_JOINT_SSV) == (5.0, 95.0)
        with pytest.raises(AjiveError):
            CutoffSettings(wedin_percentile=100.0)


class TestCombine:
    def test_two_block_adds_angles(self):
        combined = combine_wedin_two_block(_constant(0.5), _constant(0.5))
        assert combined.kind == BoundKind.WEDIN_JOINT_ANGLE
        assert np.allclose(combined.samples, 60.0)
        assert combined.ranks == (1, 1)

    def test_two_block_caps_at_ninety(self):
        combined = combine_wedin_two_block(_constant(1.0), _constant(0.9))
        assert np.allclose(combined.samples, 90.0)

    def test_multiblock(self):
        combined = combine_wedin_multiblock([_constant(0.6), _constant(0.8)])
        assert combined.kind == BoundKind.WEDIN_JOINT_SSV
        assert np.allclose(combined.samples, 1.0)

    def test_multiblock_without_noise(self):
        combined = combine_wedin_multiblock([_constant(0.0)] * 3)
        assert np.allclose(combined.samples, 3.0)

    def test_pairs_by_index(self):
        d1 = BoundDistribution(kind=BoundKind.WEDIN_BLOCK_SIN, samples=np.array([0.0, 1.0]), n_replicates=2, n_objects=5)
        d2 = BoundDistribution(kind=BoundKind.WEDIN_BLOCK_SIN, samples=np.array([1.0, 0.0]), n_replicates=2, n_objects=5)
        assert np.allclose(combine_wedin_multiblock([d1, d2]).samples, [1.0, 1.0])

    def test_shuffled_pairing_keeps_marginals(self):
        d1 = BoundDistribution(kind=BoundKind.WEDIN_BLOCK_SIN, samples=np.linspace(0, 1, 50), n_replicates=50, n_objects=5)
        combined = combine_wedin_two_block(d1, _constant(0.0, n=50, n_objects=5), rng=np.random.default_rng(0))
        assert np.allclose(np.sort(combined.samples), np.degrees(np.arcsin(np.linspace(0, 1, 50))))

    def test_wrong_kind(self):
        with pytest.raises(DistributionKindError):
            combine_wedin_two_block(_constant(0.5), _constant(0.5, kind=BoundKind.RANDOM_ANGLE))

    def test_length_mismatch(self):
        with pytest.raises(ParameterMismatchError):
            combine_wedin_multiblock([_constant(0.5, n=10), _constant(0.5, n=11)])

    def test_ambient_mismatch(self):
        with pytest.raises(ParameterMismatchError):
            combine_wedin_two_block(_constant(0.5, n_objects=20), _constant(0.5, n_objects=21))


class TestRandomDirection:
    def test_full_space_gives_two(self):
        dist = random_direction_ssv(6, (6, 1), 20, seed=0)
        assert dist.kind == BoundKind.RANDOM_SSV
        assert np.allclose(dist.samples, 2.0)

    def test_ssv_and_angle_agree(self):
        ssv = random_direction_ssv(30, (2, 3), 50, seed=11)
        angle = random_direction_angle(30, 2, 3, 50, seed=11)
        assert np.allclose(ssv.samples, 1 + np.cos(np.radians(angle.samples)), atol=1e-10)

    def test_reproducible(self):
        first = random_direction_angle(20, 1, 2, 30, seed=5)
        second = random_direction_angle(20, 1, 2, 30, seed=5)
        assert np.array_equal(first.samples, second.samples)
        assert not np.array_equal(first.samples, random_direction_angle(20, 1, 2, 30, seed=6).samples)

    def test_independent_of_workers(self):
        serial = random_direction_ssv(20, (2, 2), 40, seed=3, n_jobs=1)
        parallel = random_direction_ssv(20, (2, 2), 40, seed=3, n_jobs=2)
        assert np.array_equal(serial.samples, parallel.samples)

    def test_range(self):
        dist = random_direction_angle(50, 2, 2, 100, seed=0)
        assert np.all((dist.samples >= 0) & (dist.samples <= 90))

    def test_full_space_gives_zero_angle(self):
        dist = random_direction_angle(6, 6, 2, 20, seed=0)
        assert np.allclose(dist.samples, 0.0, atol=1e-4)

    def test_lines_moment(self):
        # for two random lines, largest ssv - 1 = |cos|, and E[cos^2] = 1/n
        dist = random_direction_ssv(100, (1, 1), 1000, seed=0)
        squared = (dist.samples - 1) ** 2
        standard_error = squared.std(ddof=1) / np.sqrt(squared.size)
        assert abs(squared.mean() - 0.01) < 3 * standard_error

    def test_lines_in_plane_are_uniform(self):
        # the angle between two random lines in R^2 is uniform on [0, 90] degrees
        dist = random_direction_angle(2, 1, 1, 5000, seed=0)
        assert stats.kstest(dist.samples, "uniform", args=(0.0, 90.0)).pvalue > 0.01

    def test_invalid_ranks(self):
        with pytest.raises(EmptySignalError):
            random_direction_ssv(10, (0, 2), 5, seed=0)
        with pytest.raises(AmbientDimensionError):
            random_direction_angle(3, 4, 1, 5, seed=0)


class TestResampleWedin:
    def _block(self) -> DataBlock:
        rng = np.random.default_rng(0)
        signal = rng.standard_normal((30, 2)) @ rng.standard_normal((2, 25)) * 5
        return DataBlock(name="x", values=signal + 0.1 * rng.standard_normal((30, 25)))

    def test_samples(self):
        block = self._block()
        dist = resample_wedin_block(initial_extract(block, RankSpec(rank=2)), block, 50, seed=1)
        assert dist.kind == BoundKind.WEDIN_BLOCK_SIN
        assert dist.n_objects == 25
        assert dist.ranks == (2,)
        assert np.all((dist.samples >= 0) & (dist.samples <= 1))
        assert np.median(dist.samples) < 0.5

    def test_reproducible(self):
        block = self._block()
        estimate = initial_extract(block, RankSpec(rank=2))
        first = resample_wedin_block(estimate, block, 20, seed=4)
        assert np.array_equal(first.samples, resample_wedin_block(estimate, block, 20, seed=4).samples)
        assert np.array_equal(first.samples, resample_wedin_block(estimate, block, 20, seed=4, n_jobs=2).samples)

    def test_rank_zero(self):
        block = self._block()
        with pytest.raises(EmptySignalError):
            resample_wedin_block(initial_extract(block, RankSpec(threshold=1e9)), block, 10, seed=0)

    def test_no_room(self):
        block = DataBlock(name="x", values=np.random.default_rng(0).standard_normal((5, 5)))
        with pytest.raises(AmbientDimensionError):
            resample_wedin_block(initial_extract(block, RankSpec(rank=3)), block, 10, seed=0)

    def test_noise_only_energy_is_small(self, toy):
        dataset, _ = toy
        block = dataset["Y"]
        dist = resample_wedin_block(initial_extract(block, RankSpec(rank=3)), block, 50, seed=0)
        # noise operator norm near 110 against a smallest signal value near 1466
        assert 0.03 < np.median(dist.samples) < 0.12

    def test_noiseless_block(self):
        rng = np.random.default_rng(0)
        block = DataBlock(name="x", values=rng.standard_normal((30, 2)) @ rng.standard_normal((2, 25)))
        dist = resample_wedin_block(initial_extract(block, RankSpec(rank=2)), block, 20, seed=0)
        assert np.all(dist.samples < 1e-10)

    def test_matches_direct_evaluation(self):
        rng = np.random.default_rng(8)
        values = 3 * rng.standard_normal((6, 2)) @ rng.standard_normal((2, 6)) + 0.2 * rng.standard_normal((6, 6))
        block = DataBlock(name="x", values=values)
        dist = resample_wedin_block(initial_extract(block, RankSpec(rank=2)), block, 3, seed=21, n_jobs=1)

        u, s, vt = np.linalg.svd(values)
        expected = []
        for i in range(3):
            stream = substream(21, i)
            v_star = random_orthonormal(6, 2, orthogonal_to=Subspace(vt[:2].T), rng=stream).basis
            u_star = random_orthonormal(6, 2, orthogonal_to=Subspace(u[:, :2]), rng=stream).basis
            energy = max(np.linalg.norm(values @ v_star, 2), np.linalg.norm(values.T @ u_star, 2))
            expected.append(min(energy / s[1], 1.0))
        assert np.allclose(dist.samples, expected, rtol=1e-9, atol=0)

    @pytest.mark.slow
    def test_joint_angle_coverage(self):
        """The 95th-percentile two-block cutoff covers the realized joint angle of the toy.

        Uses 200 replicates per block instead of the default 1000 to keep
        200 noise realizations affordable.
        """
        covered = 0
        for seed in range(200):
            dataset, _ = make_toy(rng=seed)
            estimates = [initial_extract(dataset["X"], RankSpec(rank=2)), initial_extract(dataset["Y"], RankSpec(rank=3))]
            bounds = [
                resample_wedin_block(estimate, block, 200, seed=2 * seed + k, n_jobs=1)
                for k, (estimate, block) in enumerate(zip(estimates, dataset))
            ]
            bound = cutoff(combine_wedin_two_block(*bounds), 95)
            covered += principal_angles(estimates[0].score_space, estimates[1].score_space)[0] <= bound
        assert covered >= 170


class TestRankCase:
    def test_cases(self):
        assert rank_case(2, 1) == RankCase.UNDER
        assert rank_case(2, 2) == RankCase.CORRECT
        assert rank_case(2, 3) == RankCase.OVER


class TestWedinOracle:
    @pytest.mark.parametrize("block_name,ranks", [("X", (1, 2, 3)), ("Y", (2, 3, 4))])
    def test_bound_holds(self, block_name, ranks):
        violations = 0
        for seed in range(5):
            dataset, truth = make_toy(rng=seed)
            for rank in ranks:
                oracle = wedin_oracle(truth, initial_extract(dataset[block_name], RankSpec(rank=rank)))
                violations += not oracle.holds
        assert violations == 0

    def test_cases_follow_rank(self, toy):
        dataset, truth = toy
        cases = [wedin_oracle(truth, initial_extract(dataset["Y"], RankSpec(rank=r))).case for r in (2, 3, 4)]
        assert cases == [RankCase.UNDER, RankCase.CORRECT, RankCase.OVER]

    def test_correct_case_angles(self, toy):
        dataset, truth = toy
        oracle = wedin_oracle(truth["X"], initial_extract(dataset["X"], RankSpec(rank=2)))
        assert oracle.true_angles.shape == (2,)
        assert oracle.largest_angle <= oracle.bound_angle + 1e-9
        assert oracle.distance == pytest.approx(np.sin(np.radians(oracle.largest_angle)), abs=1e-6)

    def test_wrong_case(self, toy):
        dataset, truth = toy
        with pytest.raises(OracleCaseError):
            wedin_oracle(truth, initial_extract(dataset["X"], RankSpec(rank=2)), case=RankCase.OVER)

    def test_zero_noise(self):
        part = _known_block(noise_scale=0.0)
        oracle = wedin_oracle(part, initial_extract(DataBlock(name="a", values=part.data), RankSpec(rank=2)))
        assert oracle.case == RankCase.CORRECT
        assert oracle.theoretical_bound == 0.0
        assert oracle.distance < 1e-10
        assert np.allclose(oracle.true_angles, 0.0, atol=1e-4)

    @pytest.mark.parametrize("rank", [1, 2, 3])
    def test_matches_direct_formula(self, rank):
        part = _known_block(noise_scale=0.05, seed=4)
        signal_left, signal_values, signal_right = np.linalg.svd(part.signal)
        left, right = signal_left[:, :2], signal_right[:2].T
        if rank == 1:
            # the dropped second signal component counts as noise
            perturbation = part.noise + signal_values[1] * np.outer(left[:, 1], right[:, 1])
            reference = right[:, :1]
        elif rank == 2:
            perturbation = part.noise
            reference = right
        else:
            outside = (np.eye(8) - left @ left.T) @ part.noise @ (np.eye(8) - right @ right.T)
            o_left, o_values, o_right = np.linalg.svd(outside)
            perturbation = part.noise - o_values[0] * np.outer(o_left[:, 0], o_right[0])
            reference = right

        u, s, vt = np.linalg.svd(part.data)
        u, s, v = u[:, :rank], s[:rank], vt[:rank].T
        expected = min(max(np.linalg.norm(perturbation @ v, 2), np.linalg.norm(perturbation.T @ u, 2)) / s[-1], 1.0)
        cosines = np.linalg.svd(reference.T @ v, compute_uv=False)

        oracle = wedin_oracle(part, initial_extract(DataBlock(name="a", values=part.data), RankSpec(rank=rank)))
        assert oracle.case == rank_case(2, rank)
        assert oracle.theoretical_bound == pytest.approx(expected, rel=1e-9)
        assert np.allclose(oracle.true_angles, np.degrees(np.arccos(np.clip(cosines, -1.0, 1.0))), atol=1e-6)
        assert oracle.holds

    @pytest.mark.slow
    def test_bound_holds_over_many_realizations(self):
        violations = 0
        for seed in range(100):
            dataset, truth = make_toy(rng=seed)
            for name, ranks in (("X", (1, 2, 3)), ("Y", (2, 3, 4))):
                for rank in ranks:
                    violations += not wedin_oracle(truth, initial_extract(dataset[name], RankSpec(rank=rank))).holds
        assert violations == 0
