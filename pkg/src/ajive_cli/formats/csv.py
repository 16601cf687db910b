"""Delimited text (CSV/TSV) format handler."""

import polars as pl

from ajive_cli.errors import ParseError
from ajive_cli.formats.base import FormatHandler, IngestionOptions, LabeledMatrix, parse_string_frame


def sniff_separator(path: str) -> str:
    """Tab if the first line contains one, comma otherwise."""
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    return "\t" if "\t" in first else ","


class CsvFormat(FormatHandler):
    """Handler for comma- or tab-delimited matrices."""

    def __init__(self, separator: str | None = ","):
        self.separator = separator

    def extension(self) -> str:
        return "tsv" if self.separator == "\t" else "csv"

    def read_matrix(self, path: str, options: IngestionOptions) -> LabeledMatrix:
        separator = options.separator or self.separator or sniff_separator(path)
        try:
            frame = pl.read_csv(path, has_header=False, separator=separator, infer_schema=False)
        except pl.exceptions.PolarsError as e:
            raise ParseError(f"{path}: {e}") from e
        return parse_string_frame(frame, options, source=path)

    def write_matrix(self, matrix: LabeledMatrix, path: str) -> None:
        matrix.to_frame().write_csv(
            path,
            separator=self.separator or ",",
            include_header=matrix.object_labels is not None,
        )
