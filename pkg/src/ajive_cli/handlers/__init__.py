"""Format handler registration and inference."""

import os

from ajive_cli.errors import ParseError
from ajive_cli.formats import CsvFormat, ParquetFormat
from ajive_cli.formats.base import FormatHandler

# Format handlers
_FORMAT_MAP: dict[str, FormatHandler] = {
    "csv": CsvFormat(","),
    "tsv": CsvFormat("\t"),
    "txt": CsvFormat(None),
    "parquet": ParquetFormat(),
}


def _get_extension(path: str) -> str:
    """Extract the lower-cased file extension from a path."""
    basename = os.path.basename(path.rstrip("/"))
    return os.path.splitext(basename)[1][1:].lower()


def infer_format(path: str, format: str | None = None) -> FormatHandler:
    """Infer the format handler for a matrix file.

    Args:
        path: Path to the file.
        format: Explicit format override. If None, inferred from extension.

    Returns:
        FormatHandler for the format. Unknown extensions fall back to
        delimited text with a sniffed separator.
    """
    if format is not None:
        fmt = _FORMAT_MAP.get(format.lower())
        if fmt is None:
            raise ParseError(f"Unknown format: {format}. Supported: {', '.join(_FORMAT_MAP)}")
        return fmt
    return _FORMAT_MAP.get(_get_extension(path), _FORMAT_MAP["txt"])
