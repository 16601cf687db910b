"""The two-block toy dataset: a wide block X and a tall block Y.

Both blocks share one joint score pattern (left half against right half of
the objects). X has one individual pattern, Y has two, and the individual
score spaces of X and Y meet at a configurable angle (45 degrees by default).
Amplitudes are the singular values of the individual components.
"""

from dataclasses import dataclass, field

import numpy as np

from ajive_cli.blocks import DataBlock, MultiBlockDataset
from ajive_cli.errors import AjiveError
from ajive_cli.linalg import Subspace
from ajive_cli.synth.truth import BlockTruth, GroundTruth

_BASE_OBJECTS = 100
_QUARTER = _BASE_OBJECTS // 4


@dataclass(frozen=True)
class ToyConfig:
    x_features: int = 100
    y_features: int = 10_000
    n_objects: int = 100
    x_noise: float = 5000.0
    y_noise: float = 1.0
    x_joint: float = 5e5
    x_individual: float = 9e5
    y_joint: float = 2000.0
    y_individual: tuple[float, float] = field(default=(2500.0, 4000.0))
    """Three-level pattern on the top half of Y, two-group pattern on the bottom half."""
    individual_angle: float = 45.0
    """Smallest principal angle between the individual score spaces, in degrees."""

    def __post_init__(self) -> None:
        amplitudes = [self.x_joint, self.x_individual, self.y_joint, *self.y_individual]
        if any(a <= 0 for a in amplitudes):
            raise AjiveError(f"Signal amplitudes must be positive, got {amplitudes}")
        if self.x_noise < 0 or self.y_noise < 0:
            raise AjiveError("Noise scales must be non-negative")
        if not 0 < self.individual_angle <= 90:
            raise AjiveError(f"Individual angle must lie in (0, 90], got {self.individual_angle}")
        if self.n_objects % _BASE_OBJECTS:
            raise AjiveError(f"The toy patterns need a multiple of {_BASE_OBJECTS} objects, got {self.n_objects}")
        if self.x_features < 2 or self.y_features < 10 or self.y_features % 2:
            raise AjiveError("X needs at least 2 features; Y needs an even count of at least 10")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _quarters(signs: tuple[int, int, int, int]) -> np.ndarray:
    return np.repeat(np.array(signs, dtype=np.float64), _QUARTER)


def _three_level() -> np.ndarray:
    """Pattern with levels +1, -1 and 0 in each quarter, at 45 degrees to the X individual pattern."""
    pieces = []
    for sign, (same, opposite) in zip((1, -1, 1, -1), ((16, 1), (16, 1), (17, 2), (17, 2))):
        zeros = _QUARTER - same - opposite
        pieces.append(np.concatenate([np.full(same, sign), np.full(opposite, -sign), np.zeros(zeros)]))
    return np.concatenate(pieces).astype(np.float64)


def score_patterns(config: ToyConfig) -> dict[str, np.ndarray]:
    """Unit score vectors in R^n, all with zero mean and mutually orthogonal except as noted."""
    joint = _unit(_quarters((1, 1, -1, -1)))
    x_ind = _unit(_quarters((1, -1, 1, -1)))
    y_two = _unit(_quarters((1, -1, -1, 1)))
    # the three-level pattern sits at exactly 45 degrees to x_ind; rotate within span to hit the target
    raw = _unit(_three_level())
    orth = _unit(raw - (raw @ x_ind) * x_ind)
    theta = np.radians(config.individual_angle)
    y_three = np.cos(theta) * x_ind + np.sin(theta) * orth

    repeat = config.n_objects // _BASE_OBJECTS
    patterns = {"joint": joint, "x_individual": x_ind, "y_three_level": y_three, "y_two_group": y_two}
    return {k: _unit(np.repeat(v, repeat)) for k, v in patterns.items()}


def _rows(d: int, start: int, stop: int) -> np.ndarray:
    u = np.zeros(d)
    u[start:stop] = 1.0
    return _unit(u)


def make_toy_truth(config: ToyConfig, rng: np.random.Generator | int | None = None) -> GroundTruth:
    rng = np.random.default_rng(rng)
    p = score_patterns(config)
    dx, dy, n = config.x_features, config.y_features, config.n_objects

    x_joint = config.x_joint * np.outer(_rows(dx, 0, dx // 2), p["joint"])
    x_ind = config.x_individual * np.outer(_rows(dx, dx // 2, dx), p["x_individual"])
    y_joint = config.y_joint * np.outer(_rows(dy, dy - dy // 5, dy), p["joint"])
    y_ind = config.y_individual[0] * np.outer(_rows(dy, 0, dy // 2), p["y_three_level"]) + config.y_individual[
        1
    ] * np.outer(_rows(dy, dy // 2, dy), p["y_two_group"])

    x_noise = config.x_noise * rng.standard_normal((dx, n))
    y_noise = config.y_noise * rng.standard_normal((dy, n))

    return GroundTruth(
        blocks=(
            BlockTruth("X", joint=x_joint, individual=x_ind, noise=x_noise, joint_rank=1, individual_rank=1),
            BlockTruth("Y", joint=y_joint, individual=y_ind, noise=y_noise, joint_rank=1, individual_rank=2),
        ),
        joint_space=Subspace(p["joint"][:, None]),
        individual_spaces=(
            Subspace(p["x_individual"][:, None]),
            Subspace.spanned_by(np.column_stack([p["y_three_level"], p["y_two_group"]])),
        ),
    )


def dataset_from_truth(truth: GroundTruth) -> MultiBlockDataset:
    return MultiBlockDataset(blocks=tuple(DataBlock(name=b.name, values=b.data) for b in truth.blocks))


def make_toy(
    config: ToyConfig | None = None,
    rng: np.random.Generator | int | None = None,
) -> tuple[MultiBlockDataset, GroundTruth]:
    """Generate the toy dataset and its ground truth.

    Signals are fixed by ``config``; only the noise depends on ``rng``
    (X noise is drawn before Y noise).
    """
    truth = make_toy_truth(config or ToyConfig(), rng)
    return dataset_from_truth(truth), truth
