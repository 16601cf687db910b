"""Competing decompositions that do not separate joint from individual variation."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger

from ajive_cli import linalg
from ajive_cli.blocks import DataBlock, MultiBlockDataset, center_rows
from ajive_cli.errors import AjiveError, RankSpecError
from ajive_cli.linalg import TruncatedSvd


@dataclass(frozen=True)
class ConcatSvdResult:
    svd: TruncatedSvd
    approximations: dict[str, np.ndarray]


def baseline_concat_svd(blocks: MultiBlockDataset | Sequence[DataBlock], rank: int) -> ConcatSvdResult:
    """Rank-``rank`` SVD of the blocks stacked on top of each other, split back per block."""
    blocks = list(blocks)
    stacked = np.vstack([np.asarray(b.values) for b in blocks])
    if not 1 <= rank <= min(stacked.shape):
        raise RankSpecError(f"Rank must lie in [1, {min(stacked.shape)}], got {rank}")
    svd = linalg.svd(stacked).head(rank)
    approximation = svd.reconstruct()
    bounds = np.cumsum([0] + [b.n_features for b in blocks])
    return ConcatSvdResult(
        svd=svd,
        approximations={b.name: approximation[start:stop] for b, start, stop in zip(blocks, bounds[:-1], bounds[1:])},
    )


@dataclass(frozen=True)
class PlsResult:
    x_weights: np.ndarray
    """d_1 x c direction vectors a_i."""
    y_weights: np.ndarray
    x_scores: np.ndarray
    """c x n score vectors a_i^T X_1 (of the deflated blocks)."""
    y_scores: np.ndarray
    covariances: np.ndarray
    approximations: dict[str, np.ndarray]


def _leading_pair(x: np.ndarray, y: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Power iteration for the top singular pair of ``x @ y.T`` without forming it."""
    a = np.zeros(x.shape[0])
    a[np.argmax(np.linalg.norm(x, axis=1))] = 1.0
    b = np.zeros(y.shape[0])
    b[np.argmax(np.linalg.norm(y, axis=1))] = 1.0
    value = 0.0
    for _ in range(max_iter):
        b_new = y @ (x.T @ a)
        norm_b = np.linalg.norm(b_new)
        if norm_b == 0:
            return a, b, 0.0
        b_new /= norm_b
        a_new = x @ (y.T @ b_new)
        value = float(np.linalg.norm(a_new))
        a_new /= value
        converged = np.linalg.norm(a_new - a) < tol and np.linalg.norm(b_new - b) < tol
        a, b = a_new, b_new
        if converged:
            break
    else:
        logger.warning(f"PLS power iteration did not converge in {max_iter} steps")
    return a, b, value


def _deflate(block: np.ndarray, score: np.ndarray) -> np.ndarray:
    energy = score @ score
    if energy == 0:
        return block
    return block - np.outer(block @ score, score) / energy


def _project_rows(block: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Least squares fit of every row on the score vectors."""
    if scores.shape[0] == 0:
        return np.zeros_like(block)
    basis, _ = np.linalg.qr(scores.T)
    return (block @ basis) @ basis.T


def baseline_pls(
    dataset: MultiBlockDataset,
    n_components: int,
    center: bool = True,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> PlsResult:
    """Sequential covariance-maximizing direction pairs with score deflation.

    Each pair ``(a, b)`` maximizes ``a^T X_1 X_2^T b`` over unit vectors;
    both blocks are then deflated by their own score, which keeps scores
    of the same block mutually orthogonal.
    """
    if len(dataset) != 2:
        raise AjiveError(f"PLS needs exactly 2 blocks, got {len(dataset)}")
    first, second = (center_rows(b) if center else b for b in dataset)
    x, y = np.asarray(first.values), np.asarray(second.values)
    max_rank = min(np.linalg.matrix_rank(x), np.linalg.matrix_rank(y))
    if not 1 <= n_components <= max_rank:
        raise RankSpecError(f"PLS components must lie in [1, {max_rank}], got {n_components}")

    n = x.shape[1]
    x_weights, y_weights, x_scores, y_scores, covariances = [], [], [], [], []
    x_left, y_left = x, y
    for _ in range(n_components):
        a, b, value = _leading_pair(x_left, y_left, tol, max_iter)
        t, u = a @ x_left, b @ y_left
        x_weights.append(a)
        y_weights.append(b)
        x_scores.append(t)
        y_scores.append(u)
        covariances.append(value / (n - 1))
        x_left, y_left = _deflate(x_left, t), _deflate(y_left, u)

    x_scores_arr, y_scores_arr = np.array(x_scores), np.array(y_scores)
    return PlsResult(
        x_weights=np.column_stack(x_weights),
        y_weights=np.column_stack(y_weights),
        x_scores=x_scores_arr,
        y_scores=y_scores_arr,
        covariances=np.array(covariances),
        approximations={
            first.name: _project_rows(x, x_scores_arr[np.linalg.norm(x_scores_arr, axis=1) > 0]),
            second.name: _project_rows(y, y_scores_arr[np.linalg.norm(y_scores_arr, axis=1) > 0]),
        },
    )


def relative_error(truth: np.ndarray, estimate: np.ndarray) -> float:
    """``||truth - estimate||_F / ||truth||_F``."""
    scale = np.linalg.norm(truth)
    if scale == 0:
        raise AjiveError("Relative error against a zero matrix is undefined")
    return float(np.linalg.norm(truth - estimate) / scale)
