"""Parquet format handler."""

import numpy as np
import polars as pl

from ajive_cli.errors import ParseError
from ajive_cli.formats.base import FormatHandler, IngestionOptions, LabeledMatrix


class ParquetFormat(FormatHandler):
    """Handler for Parquet matrices: one column per object, optional leading string column of feature labels."""

    def extension(self) -> str:
        return "parquet"

    def read_matrix(self, path: str, options: IngestionOptions) -> LabeledMatrix:
        try:
            frame = pl.read_parquet(path)
        except pl.exceptions.PolarsError as e:
            raise ParseError(f"{path}: {e}") from e
        if frame.width == 0 or frame.height == 0:
            raise ParseError(f"{path}: file is empty")

        label_column = options.label_column
        if label_column is None:
            label_column = frame.dtypes[0] == pl.String
        feature_labels = frame.to_series(0).cast(pl.String).to_list() if label_column else None
        data = frame.drop(frame.columns[0]) if label_column else frame

        if data.null_count().sum_horizontal().item() > 0:
            raise ParseError(f"{path}: missing values are not supported")
        try:
            values = data.select(pl.all().cast(pl.Float64, strict=True)).to_numpy()
        except pl.exceptions.PolarsError as e:
            raise ParseError(f"{path}: non-numeric column: {e}") from e
        if not np.all(np.isfinite(values)):
            raise ParseError(f"{path}: non-finite values are not supported")
        object_labels = data.columns if options.header is not False else None
        return LabeledMatrix(values=values, feature_labels=feature_labels, object_labels=object_labels)

    def write_matrix(self, matrix: LabeledMatrix, path: str) -> None:
        matrix.to_frame().write_parquet(path)
