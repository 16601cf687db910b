"""Format handlers for reading and writing matrix files."""

from ajive_cli.formats.base import FormatHandler, IngestionOptions, LabeledMatrix
from ajive_cli.formats.csv import CsvFormat
from ajive_cli.formats.parquet import ParquetFormat

__all__ = [
    "FormatHandler",
    "IngestionOptions",
    "LabeledMatrix",
    "CsvFormat",
    "ParquetFormat",
]
