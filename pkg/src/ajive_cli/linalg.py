"""Dense SVD and subspace primitives shared by every AJIVE step.

Angles are returned in degrees; everything else works in radians internally.
Random draws always take an explicit ``numpy.random.Generator`` so that
callers control reproducibility.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from loguru import logger

from ajive_cli.errors import AjiveError, AmbientDimensionError, SvdConvergenceError

_ORTHONORMAL_TOL = 1e-8


@dataclass(frozen=True)
class TruncatedSvd:
    """A (possibly truncated) SVD ``left @ diag(singular_values) @ right.T``."""

    left: np.ndarray
    """d x r matrix with orthonormal columns."""

    singular_values: np.ndarray
    """Length-r nonincreasing vector."""

    right: np.ndarray
    """n x r matrix with orthonormal columns (score directions)."""

    @property
    def rank(self) -> int:
        return int(self.singular_values.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.left.shape[0], self.right.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right.T

    def head(self, rank: int) -> "TruncatedSvd":
        """Keep the leading ``rank`` components."""
        return TruncatedSvd(
            left=self.left[:, :rank],
            singular_values=self.singular_values[:rank],
            right=self.right[:, :rank],
        )


@dataclass(frozen=True)
class Subspace:
    """A subspace of R^n represented by an orthonormal basis (n x r)."""

    basis: np.ndarray

    def __post_init__(self) -> None:
        if self.basis.ndim != 2:
            raise AmbientDimensionError(f"Subspace basis must be 2-D, got shape {self.basis.shape}")
        n, r = self.basis.shape
        if r > n:
            raise AmbientDimensionError(f"Subspace rank {r} exceeds ambient dimension {n}")
        if r and not np.allclose(self.basis.T @ self.basis, np.eye(r), atol=_ORTHONORMAL_TOL):
            raise AjiveError("Subspace basis columns are not orthonormal")

    @property
    def ambient_dim(self) -> int:
        return int(self.basis.shape[0])

    @property
    def rank(self) -> int:
        return int(self.basis.shape[1])

    @classmethod
    def empty(cls, ambient_dim: int) -> "Subspace":
        return cls(np.zeros((ambient_dim, 0)))

    @classmethod
    def spanned_by(cls, vectors: np.ndarray) -> "Subspace":
        """Orthonormal basis for the column span of ``vectors`` (assumed full column rank)."""
        if vectors.shape[1] == 0:
            return cls.empty(vectors.shape[0])
        q, _ = np.linalg.qr(vectors)
        return cls(q)

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def columns(self, indices: list[int]) -> "Subspace":
        return Subspace(self.basis[:, indices])


def align_signs(left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Make the first nonzero coordinate of every right vector positive."""
    if right.shape[1] == 0:
        return left, right
    scale = np.abs(right).max(axis=0)
    significant = np.abs(right) > 1e-10 * np.where(scale > 0, scale, 1.0)
    first = significant.argmax(axis=0)
    signs = np.sign(right[first, np.arange(right.shape[1])])
    signs[signs == 0] = 1.0
    return left * signs, right * signs


def svd(matrix: np.ndarray) -> TruncatedSvd:
    """Thin SVD with singular values sorted nonincreasing and deterministic signs."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise AjiveError(f"Expected a 2-D matrix, got shape {matrix.shape}")
    d, n = matrix.shape
    if min(d, n) == 0:
        return TruncatedSvd(np.zeros((d, 0)), np.zeros(0), np.zeros((n, 0)))
    if not np.all(np.isfinite(matrix)):
        raise AjiveError("Matrix contains non-finite entries")

    for driver in ("gesdd", "gesvd"):
        try:
            u, s, vt = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver=driver, check_finite=False)
            break
        except np.linalg.LinAlgError as e:
            logger.debug("SVD driver {} failed on {}x{} matrix: {}", driver, d, n, e)
    else:
        raise SvdConvergenceError(f"SVD did not converge for a {d}x{n} matrix")

    left, right = align_signs(u, vt.T)
    return TruncatedSvd(left=left, singular_values=s, right=right)


def truncate(decomposition: TruncatedSvd, threshold: float) -> TruncatedSvd:
    """Keep exactly the components whose singular value is strictly above ``threshold``."""
    if threshold <= 0:
        raise AjiveError(f"Threshold must be positive, got {threshold}")
    keep = int(np.count_nonzero(decomposition.singular_values > threshold))
    return decomposition.head(keep)


def singular_values(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if min(matrix.shape) == 0:
        return np.zeros(0)
    try:
        return scipy.linalg.svdvals(matrix, check_finite=False)
    except np.linalg.LinAlgError:
        return svd(matrix).singular_values


def operator_norm(matrix: np.ndarray) -> float:
    """Largest singular value; 0 for empty matrices."""
    values = singular_values(matrix)
    return float(values[0]) if values.size else 0.0


def _check_same_space(a: Subspace, b: Subspace) -> None:
    if a.ambient_dim != b.ambient_dim:
        raise AmbientDimensionError(
            f"Subspaces live in different spaces: R^{a.ambient_dim} vs R^{b.ambient_dim}"
        )


def principal_angles(a: Subspace, b: Subspace) -> np.ndarray:
    """Principal angles in degrees, nondecreasing, length ``min(a.rank, b.rank)``."""
    _check_same_space(a, b)
    if a.rank == 0 or b.rank == 0:
        return np.zeros(0)
    cosines = singular_values(a.basis.T @ b.basis)
    return np.degrees(np.arccos(np.clip(cosines, -1.0, 1.0)))


def principal_vectors(a: Subspace, b: Subspace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairs of principal vectors ``(p_i, q_i)`` as columns, with their cosines."""
    _check_same_space(a, b)
    cross = svd(a.basis.T @ b.basis)
    return a.basis @ cross.left, b.basis @ cross.right, cross.singular_values


def subspace_distance(a: Subspace, b: Subspace) -> float:
    """Sine of the largest principal angle, i.e. the projection pseudometric."""
    _check_same_space(a, b)
    if a.rank == 0 or b.rank == 0:
        return 0.0
    small, large = (a, b) if a.rank <= b.rank else (b, a)
    residual = small.basis - large.basis @ (large.basis.T @ small.basis)
    return min(operator_norm(residual), 1.0)


def _project_out(vectors: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return vectors - basis @ (basis.T @ vectors)


def random_orthonormal(
    ambient_dim: int,
    rank: int,
    orthogonal_to: Subspace | None = None,
    rng: np.random.Generator | None = None,
) -> Subspace:
    """Draw a uniformly distributed ``rank``-dimensional subspace of R^ambient_dim.

    Gaussian columns are projected off ``orthogonal_to`` (twice, to keep the
    cross products at rounding level) and then orthonormalized.
    """
    if rng is None:
        rng = np.random.default_rng()
    taken = 0
    if orthogonal_to is not None:
        if orthogonal_to.ambient_dim != ambient_dim:
            raise AmbientDimensionError(
                f"Constraint subspace lives in R^{orthogonal_to.ambient_dim}, expected R^{ambient_dim}"
            )
        taken = orthogonal_to.rank
    if rank < 0 or rank + taken > ambient_dim:
        raise AmbientDimensionError(
            f"Cannot draw a {rank}-dimensional subspace of R^{ambient_dim} orthogonal to a {taken}-dimensional one"
        )
    if rank == 0:
        return Subspace.empty(ambient_dim)

    gaussian = rng.standard_normal((ambient_dim, rank))
    if taken:
        gaussian = _project_out(_project_out(gaussian, orthogonal_to.basis), orthogonal_to.basis)
    q, _ = np.linalg.qr(gaussian)
    return Subspace(q)


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def derive_seed(seed: int, *keys: int) -> int:
    """Integer seed for a child stream, stable across runs and platforms."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])
