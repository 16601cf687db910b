"""Base format handler interface."""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import polars as pl

from ajive_cli.errors import ParseError


@dataclass(frozen=True)
class IngestionOptions:
    """How a matrix file is parsed. ``None`` means auto-detect."""

    separator: str | None = None
    header: bool | None = None
    """Whether the first row holds object labels."""
    label_column: bool | None = None
    """Whether the first column holds feature labels."""


@dataclass(frozen=True)
class LabeledMatrix:
    """A parsed matrix (features x objects) with optional labels."""

    values: np.ndarray
    feature_labels: list[str] | None = None
    object_labels: list[str] | None = None

    def to_frame(self) -> pl.DataFrame:
        """Lay the matrix out as a frame: optional ``feature`` column, then one column per object."""
        d, n = self.values.shape
        names = self.object_labels if self.object_labels is not None else [f"column_{j}" for j in range(n)]
        frame = pl.DataFrame(self.values, schema=[(name, pl.Float64) for name in names], orient="row")
        if self.feature_labels is not None:
            frame = frame.insert_column(0, pl.Series("feature", self.feature_labels, dtype=pl.String))
        return frame


def parse_string_frame(frame: pl.DataFrame, options: IngestionOptions, source: str) -> LabeledMatrix:
    """Turn an all-string frame (no header consumed) into a numeric matrix with labels."""
    if frame.height == 0 or frame.width == 0:
        raise ParseError(f"{source}: file is empty")
    stripped = frame.select([pl.col(c).str.strip_chars() for c in frame.columns])
    missing = stripped.select([(pl.col(c).is_null() | (pl.col(c) == "")).alias(c) for c in frame.columns]).to_numpy()
    parsed = stripped.select([pl.col(c).cast(pl.Float64, strict=False) for c in frame.columns])
    numeric = parsed.select([pl.col(c).is_not_null() for c in frame.columns]).to_numpy()
    non_numeric = ~numeric & ~missing
    values = parsed.to_numpy().astype(np.float64)
    raw = stripped.to_numpy()

    first_data_col = 1 if frame.width > 1 else 0
    header = options.header
    if header is None:
        header = bool(non_numeric[0, first_data_col:].any())
    body_start = 1 if header else 0
    label_column = options.label_column
    if label_column is None:
        label_column = frame.width > 1 and bool(non_numeric[body_start:, 0].any())
    col_start = 1 if label_column else 0

    body = slice(body_start, None)
    cols = slice(col_start, None)
    block_missing = missing[body, cols]
    block_non_numeric = non_numeric[body, cols]
    if block_missing.any():
        r, c = np.argwhere(block_missing)[0]
        raise ParseError(f"{source}: missing value at line {r + body_start + 1}, column {c + col_start + 1}")
    if block_non_numeric.any():
        r, c = np.argwhere(block_non_numeric)[0]
        cell = raw[r + body_start, c + col_start]
        raise ParseError(f"{source}: non-numeric cell {cell!r} at line {r + body_start + 1}, column {c + col_start + 1}")
    matrix = values[body, cols]
    if not np.all(np.isfinite(matrix)):
        r, c = np.argwhere(~np.isfinite(matrix))[0]
        raise ParseError(f"{source}: non-finite value at line {r + body_start + 1}, column {c + col_start + 1}")
    if matrix.size == 0:
        raise ParseError(f"{source}: no numeric cells")

    object_labels = [str(v) if v is not None else "" for v in raw[0, col_start:]] if header else None
    feature_labels = [str(v) if v is not None else "" for v in raw[body_start:, 0]] if label_column else None
    return LabeledMatrix(values=np.ascontiguousarray(matrix), feature_labels=feature_labels, object_labels=object_labels)


class FormatHandler(ABC):
    """Handles reading and writing matrices in a specific file format."""

    @abstractmethod
    def extension(self) -> str:
        """Return the file extension (e.g., 'parquet')."""
        pass

    @abstractmethod
    def read_matrix(self, path: str, options: IngestionOptions) -> LabeledMatrix:
        """Read a features x objects matrix from ``path``."""
        pass

    @abstractmethod
    def write_matrix(self, matrix: LabeledMatrix, path: str) -> None:
        """Write a matrix so that ``read_matrix`` recovers its values and labels."""
        pass
