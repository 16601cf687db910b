"""Tests for the toy generator, random models and the coverage simulation."""

import numpy as np
import pytest

from ajive_cli.errors import AjiveError, AmbientDimensionError
from ajive_cli.linalg import principal_angles
from ajive_cli.synth.coverage import coverage_simulation
from ajive_cli.synth.model import make_model
from ajive_cli.synth.toy import ToyConfig, make_toy, score_patterns


class TestToy:
    def test_shapes(self, toy):
        dataset, truth = toy
        assert dataset.names == ["X", "Y"]
        assert dataset["X"].shape == (100, 100)
        assert dataset["Y"].shape == (10_000, 100)
        assert truth.joint_rank == 1
        assert truth.individual_ranks == (1, 2)

    def test_data_is_sum_of_parts(self, toy):
        dataset, truth = toy
        for part in truth.blocks:
            assert np.array_equal(np.asarray(dataset[part.name].values), part.data)

    def test_signal_ranks(self, toy):
        _, truth = toy
        assert np.linalg.matrix_rank(truth["X"].signal) == 2
        assert np.linalg.matrix_rank(truth["Y"].signal) == 3

    def test_individual_angle(self, toy):
        _, truth = toy
        assert truth.individual_angles(0, 1)[0] == pytest.approx(45.0, abs=1e-8)

    def test_other_individual_angle(self):
        _, truth = make_toy(ToyConfig(individual_angle=30.0), rng=0)
        assert truth.individual_angles(0, 1)[0] == pytest.approx(30.0, abs=1e-8)

    def test_joint_space_orthogonal_to_individual(self, toy):
        _, truth = toy
        for space in truth.individual_spaces:
            assert principal_angles(truth.joint_space, space) == pytest.approx([90.0])

    def test_patterns(self):
        patterns = score_patterns(ToyConfig(n_objects=200))
        for name, v in patterns.items():
            assert v.shape == (200,), name
            assert np.linalg.norm(v) == pytest.approx(1.0)
            assert v.sum() == pytest.approx(0.0, abs=1e-12)
        assert patterns["joint"] @ patterns["x_individual"] == pytest.approx(0.0, abs=1e-12)
        assert patterns["joint"] @ patterns["y_three_level"] == pytest.approx(0.0, abs=1e-12)
        assert patterns["y_three_level"] @ patterns["y_two_group"] == pytest.approx(0.0, abs=1e-12)

    def test_noise_depends_on_seed_only(self):
        first, _ = make_toy(rng=5)
        second, _ = make_toy(rng=5)
        other, _ = make_toy(rng=6)
        assert np.array_equal(np.asarray(first["Y"].values), np.asarray(second["Y"].values))
        assert not np.array_equal(np.asarray(first["Y"].values), np.asarray(other["Y"].values))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_objects": 150},
            {"individual_angle": 0.0},
            {"individual_angle": 120.0},
            {"x_joint": -1.0},
            {"y_noise": -0.5},
            {"y_features": 9},
        ],
    )
    def test_invalid_config(self, kwargs):
        with pytest.raises(AjiveError):
            ToyConfig(**kwargs)


class TestMakeModel:
    def test_spaces_mutually_orthogonal(self):
        _, truth = make_model(30, 2, (2, 3, 1), rng=0)
        spaces = [truth.joint_space, *truth.individual_spaces]
        for i, a in enumerate(spaces):
            for b in spaces[i + 1 :]:
                assert np.abs(a.basis.T @ b.basis).max() < 1e-12

    def test_block_parts(self):
        dataset, truth = make_model(25, 1, (2, 2), features=(10, 12), noise_scale=0.1, rng=0)
        assert dataset.names == ["block1", "block2"]
        assert dataset["block2"].shape == (12, 25)
        for part in truth.blocks:
            assert np.linalg.matrix_rank(part.joint) == 1
            assert np.linalg.matrix_rank(part.individual) == 2
            assert np.allclose(part.joint @ truth.individual_spaces[0].basis, 0.0)

    def test_deterministic(self):
        first, _ = make_model(20, 1, (1, 1), noise_scale=1.0, rng=3)
        second, _ = make_model(20, 1, (1, 1), noise_scale=1.0, rng=3)
        assert np.array_equal(np.asarray(first["block1"].values), np.asarray(second["block1"].values))

    def test_too_many_directions(self):
        with pytest.raises(AmbientDimensionError):
            make_model(5, 2, (2, 2))

    def test_block_too_narrow(self):
        with pytest.raises(AmbientDimensionError):
            make_model(20, 2, (2, 2), features=(3, 10))

    def test_feature_count_mismatch(self):
        with pytest.raises(AmbientDimensionError):
            make_model(20, 1, (1, 1), features=(10,))


class TestCoverage:
    def test_table_layout(self):
        result = coverage_simulation(2, rank_specs={"X": (1, 2)}, percentiles=(50, 95), seed=0, n_replicates=20)
        assert result.blocks == ["X"]
        table = result.table("X")
        assert table.columns == ["nominal", "1", "2"]
        assert table.get_column("nominal").to_list() == [50.0, 95.0]
        values = table.select(["1", "2"]).to_numpy()
        assert np.all((values >= 0) & (values <= 100))
        assert result.metadata()["n_trials"] == 2

    def test_unknown_block(self):
        result = coverage_simulation(1, rank_specs={"X": (2,)}, seed=0, n_replicates=5)
        with pytest.raises(KeyError):
            result.table("Y")

    def test_jobs_do_not_change_result(self):
        kwargs = dict(rank_specs={"X": (2,)}, percentiles=(90,), seed=4, n_replicates=10)
        serial = coverage_simulation(3, n_jobs=1, **kwargs)
        parallel = coverage_simulation(3, n_jobs=2, **kwargs)
        assert serial.frame.equals(parallel.frame)

    def test_needs_trials(self):
        with pytest.raises(AjiveError):
            coverage_simulation(0)

    @pytest.mark.slow
    def test_correct_rank_is_near_nominal(self):
        """Coverage of the correct-rank bound at the default 1000 replicates per trial.

        Runs 500 trials rather than a larger table; the 5 point tolerance
        absorbs the Monte Carlo error of that trial count.
        """
        result = coverage_simulation(500, rank_specs={"X": (2,), "Y": (3,)}, percentiles=(90, 95, 99), seed=0)
        x = result.table("X").get_column("2").to_list()
        for observed, expected in zip(x, (89.6, 93.7, 98.0)):
            assert observed == pytest.approx(expected, abs=5.0)
        assert result.table("Y").get_column("3").to_list() == [100.0, 100.0, 100.0]
