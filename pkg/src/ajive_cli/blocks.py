"""Data model for multi-block datasets: K matrices (features x objects) sharing their columns."""

import os
import tomllib
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field, replace

import numpy as np
import tomli_w
from loguru import logger

from ajive_cli.errors import AjiveError, DimensionMismatchError, ParseError, TooFewBlocksError
from ajive_cli.formats.base import IngestionOptions, LabeledMatrix
from ajive_cli.handlers import infer_format


@dataclass(frozen=True)
class DataBlock:
    """One d_k x n data matrix; rows are features, columns are the shared objects."""

    name: str
    values: np.ndarray
    feature_labels: tuple[str, ...] | None = None
    object_labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatchError(f"Block {self.name!r}: expected a 2-D matrix, got shape {values.shape}")
        d, n = values.shape
        if d < 1 or n < 2:
            raise DimensionMismatchError(f"Block {self.name!r}: need at least 1 feature and 2 objects, got {d}x{n}")
        if not np.all(np.isfinite(values)):
            raise ParseError(f"Block {self.name!r}: contains NaN or infinite values")
        if self.feature_labels is not None and len(self.feature_labels) != d:
            raise DimensionMismatchError(
                f"Block {self.name!r}: {len(self.feature_labels)} feature labels for {d} rows"
            )
        if self.object_labels is not None and len(self.object_labels) != n:
            raise DimensionMismatchError(
                f"Block {self.name!r}: {len(self.object_labels)} object labels for {n} columns"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.feature_labels is not None:
            object.__setattr__(self, "feature_labels", tuple(self.feature_labels))
        if self.object_labels is not None:
            object.__setattr__(self, "object_labels", tuple(self.object_labels))

    @property
    def n_features(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_objects(self) -> int:
        return int(self.values.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_features, self.n_objects

    def with_values(self, values: np.ndarray) -> "DataBlock":
        return replace(self, values=values)

    def to_labeled(self) -> LabeledMatrix:
        return LabeledMatrix(
            values=np.asarray(self.values),
            feature_labels=list(self.feature_labels) if self.feature_labels is not None else None,
            object_labels=list(self.object_labels) if self.object_labels is not None else None,
        )


@dataclass(frozen=True)
class MultiBlockDataset:
    """An ordered collection of K >= 2 blocks measured on the same n objects."""

    blocks: tuple[DataBlock, ...]
    object_labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        blocks = tuple(self.blocks)
        if len(blocks) < 2:
            raise TooFewBlocksError(f"AJIVE needs at least 2 data blocks, got {len(blocks)}")
        counts = {b.name: b.n_objects for b in blocks}
        if len(set(counts.values())) != 1:
            detail = ", ".join(f"{name}: {n}" for name, n in counts.items())
            raise DimensionMismatchError(f"Blocks disagree on the number of objects ({detail})")
        names = [b.name for b in blocks]
        if len(set(names)) != len(names):
            raise AjiveError(f"Block names must be unique, got {names}")

        labels = self.object_labels
        for block in blocks:
            if block.object_labels is None:
                continue
            if labels is None:
                labels = block.object_labels
            elif tuple(labels) != tuple(block.object_labels):
                raise DimensionMismatchError(f"Object labels of block {block.name!r} disagree with the other blocks")
        if labels is not None and len(labels) != blocks[0].n_objects:
            raise DimensionMismatchError(f"{len(labels)} object labels for {blocks[0].n_objects} objects")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "object_labels", tuple(labels) if labels is not None else None)

    def __iter__(self) -> Iterator[DataBlock]:
        return iter(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, key: int | str) -> DataBlock:
        if isinstance(key, str):
            for block in self.blocks:
                if block.name == key:
                    return block
            raise KeyError(key)
        return self.blocks[key]

    @property
    def n_objects(self) -> int:
        return self.blocks[0].n_objects

    @property
    def names(self) -> list[str]:
        return [b.name for b in self.blocks]

    def map(self, fn: Callable[[DataBlock], DataBlock]) -> "MultiBlockDataset":
        return MultiBlockDataset(blocks=tuple(fn(b) for b in self.blocks), object_labels=self.object_labels)


def center_rows(block: DataBlock) -> DataBlock:
    """Subtract each row's mean so every feature is centered across objects."""
    values = np.asarray(block.values)
    return block.with_values(values - values.mean(axis=1, keepdims=True))


def _block_name(path: str) -> str:
    return os.path.splitext(os.path.basename(path.rstrip("/")))[0]


def load_block(
    path: str,
    name: str | None = None,
    options: IngestionOptions | None = None,
    format: str | None = None,
) -> DataBlock:
    """Read one matrix file into a DataBlock."""
    options = options or IngestionOptions()
    matrix = infer_format(path, format).read_matrix(path, options)
    block = DataBlock(
        name=name or _block_name(path),
        values=matrix.values,
        feature_labels=tuple(matrix.feature_labels) if matrix.feature_labels is not None else None,
        object_labels=tuple(matrix.object_labels) if matrix.object_labels is not None else None,
    )
    logger.debug(f"Loaded block [bold]{block.name}[/] ({block.n_features}x{block.n_objects}) from {path}")
    return block


def load_dataset(
    paths: Sequence[str],
    options: IngestionOptions | None = None,
    names: Sequence[str] | None = None,
    formats: Sequence[str | None] | None = None,
    center: Sequence[str] = (),
) -> MultiBlockDataset:
    """Load K >= 2 matrix files sharing their object columns.

    Args:
        paths: One file per block.
        options: Parsing options applied to every file.
        names: Block names; default to the file stems.
        formats: Per-file format overrides; default from extensions.
        center: Names of blocks to row-center after loading.
    """
    if len(paths) < 2:
        raise TooFewBlocksError(f"AJIVE needs at least 2 data blocks, got {len(paths)}")
    names = list(names) if names is not None else [_block_name(p) for p in paths]
    if len(set(names)) != len(names):
        names = [f"{name}_{k + 1}" for k, name in enumerate(names)]
    formats = list(formats) if formats is not None else [None] * len(paths)

    blocks = []
    for path, name, fmt in zip(paths, names, formats):
        block = load_block(path, name=name, options=options, format=fmt)
        if name in center:
            block = center_rows(block)
            logger.debug(f"Row-centered block [bold]{name}[/]")
        blocks.append(block)
    return MultiBlockDataset(blocks=tuple(blocks))


def export_block(block: DataBlock, path: str, format: str | None = None) -> None:
    """Write a block (with its labels) so that load_block recovers it."""
    infer_format(path, format).write_matrix(block.to_labeled(), path)


@dataclass(frozen=True)
class ManifestEntry:
    """One ``[blocks.<name>]`` table of a dataset manifest."""

    name: str
    path: str
    center: bool = False
    format: str | None = None


@dataclass(frozen=True)
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def with_centering(self, overrides: dict[str, bool]) -> "Manifest":
        unknown = set(overrides) - {e.name for e in self.entries}
        if unknown:
            raise AjiveError(f"Centering given for unknown blocks: {', '.join(sorted(unknown))}")
        return Manifest([replace(e, center=overrides.get(e.name, e.center)) for e in self.entries])


def read_manifest(path: str) -> Manifest:
    """Parse a TOML manifest; relative block paths resolve against its directory."""
    with open(path, "rb") as f:
        try:
            document = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise AjiveError(f"{path}: invalid manifest: {e}") from e
    tables = document.get("blocks", {})
    if not isinstance(tables, dict):
        raise AjiveError(f"{path}: 'blocks' must be a table of block tables")
    root = os.path.dirname(os.path.abspath(path))
    entries = []
    for name, table in tables.items():
        if "path" not in table:
            raise AjiveError(f"{path}: block {name!r} has no 'path'")
        block_path = table["path"]
        if not os.path.isabs(block_path):
            block_path = os.path.join(root, block_path)
        entries.append(
            ManifestEntry(name=name, path=block_path, center=bool(table.get("center", False)), format=table.get("format"))
        )
    return Manifest(entries)


def write_manifest(manifest: Manifest, path: str) -> None:
    tables = {}
    for entry in manifest.entries:
        table: dict[str, str | bool] = {"path": entry.path, "center": entry.center}
        if entry.format is not None:
            table["format"] = entry.format
        tables[entry.name] = table
    with open(path, "wb") as f:
        tomli_w.dump({"blocks": tables}, f)


def load_manifest(
    path: str,
    options: IngestionOptions | None = None,
    center_overrides: dict[str, bool] | None = None,
) -> MultiBlockDataset:
    """Load every block listed in a manifest, applying its centering flags."""
    manifest = read_manifest(path).with_centering(center_overrides or {})
    return load_dataset(
        [e.path for e in manifest.entries],
        options=options,
        names=[e.name for e in manifest.entries],
        formats=[e.format for e in manifest.entries],
        center=[e.name for e in manifest.entries if e.center],
    )
