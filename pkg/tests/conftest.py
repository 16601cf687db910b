"""Shared fixtures: toy data, small random models, manifests on disk."""

import os

import numpy as np
import pytest

from ajive_cli.blocks import DataBlock, MultiBlockDataset
from ajive_cli.handlers.base import OutputDirectory, write_toy
from ajive_cli.synth.model import make_model
from ajive_cli.synth.toy import make_toy


@pytest.fixture(scope="session")
def toy():
    """``(dataset, truth)`` of the default toy example, noise seed 0."""
    return make_toy(rng=0)


@pytest.fixture(scope="session")
def toy_dir(tmp_path_factory, toy):
    """The toy dataset written to disk; returns the manifest path."""
    dataset, truth = toy
    out = OutputDirectory(str(tmp_path_factory.mktemp("toy")))
    return write_toy(out, dataset, truth, {"kind": "toy", "seed": 0})


@pytest.fixture
def noiseless_model():
    return make_model(40, 1, (1, 2), features=(30, 25), rng=1)


@pytest.fixture
def strong_joint_three_blocks():
    """Three noisy blocks whose joint signal is ten times stronger than their individual signals."""
    dataset, truth = make_model(100, 1, (1, 1, 1), features=(50, 50, 50), noise_scale=0.05, rng=7)
    blocks = [DataBlock(name=b.name, values=10 * b.joint + b.individual + b.noise) for b in truth.blocks]
    return MultiBlockDataset(blocks=tuple(blocks)), truth


@pytest.fixture
def small_blocks(tmp_path):
    """Two labeled CSV blocks on 6 objects."""
    rng = np.random.default_rng(3)
    objects = [f"s{j}" for j in range(6)]
    paths = []
    for name, d in (("a", 4), ("b", 5)):
        path = os.path.join(tmp_path, f"{name}.csv")
        with open(path, "w") as f:
            f.write(",".join(["feature", *objects]) + "\n")
            for i, row in enumerate(rng.standard_normal((d, 6))):
                f.write(",".join([f"{name}{i}", *(repr(float(v)) for v in row)]) + "\n")
        paths.append(path)
    return paths
