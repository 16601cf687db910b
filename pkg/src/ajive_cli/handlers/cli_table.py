"""Rich renderables for the terminal reports of every command."""

from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np
import polars as pl
from rich import box
from rich.table import Table
from rich.text import Text

from ajive_cli.pipeline import AnalysisResult, Diagnosis
from ajive_cli.style import _ALT_ROW_STYLE_0, _ALT_ROW_STYLE_1, _FLAG_STYLE, _KEY_STYLE, _VAL_STYLE, _VERDICT_STYLES


def _format_value(value: object, precision: int = 4) -> str:
    if value is None:
        return ""
    if isinstance(value, float | np.floating):
        return f"{value:.{precision}g}"
    return str(value)


def _table(show_header: bool = True) -> Table:
    return Table(
        show_header=show_header,
        header_style=_KEY_STYLE,
        box=box.SIMPLE_HEAD,
        row_styles=[_ALT_ROW_STYLE_0, _ALT_ROW_STYLE_1],
    )


def frame_table(frame: pl.DataFrame, limit: int | None = None, max_cell_len: int | None = None) -> Table:
    """A DataFrame as a table; rows past ``limit`` are replaced by one ``...`` row."""

    def truncate(value: str) -> str:
        if max_cell_len is not None and len(value) > max_cell_len:
            return value[:max_cell_len] + "..."
        return value

    table = _table()
    for col in frame.columns:
        table.add_column(col)
    shown = frame if limit is None else frame.head(limit)
    for row in shown.iter_rows():
        table.add_row(*[truncate(_format_value(v)) for v in row])
    if limit is not None and frame.height > limit:
        table.add_row(*["..." for _ in frame.columns])
    return table


@dataclass
class KeyValueSummary:
    """Two-column key/value listing."""

    rows: list[tuple[str, object]] = field(default_factory=list)

    def add(self, key: str, value: object) -> "KeyValueSummary":
        self.rows.append((key, value))
        return self

    def __rich__(self) -> Table:
        table = _table(show_header=False)
        table.add_column(style=_KEY_STYLE)
        table.add_column(style=_VAL_STYLE)
        for key, value in self.rows:
            table.add_row(key, _format_value(value, precision=6))
        return table


def scree_table(name: str, values: np.ndarray, limit: int = 10) -> Table:
    table = frame_table(
        pl.DataFrame({"index": np.arange(1, values.size + 1), "singular_value": values}),
        limit=limit,
    )
    table.title = f"Scree: {name}"
    return table


def components_table(diagnosis: Diagnosis) -> Table:
    """Per stacked component: squared singular value, angle when defined, verdict."""
    diagnostics = diagnosis.diagnostics
    table = _table()
    table.title = f"Ranks {', '.join(str(r) for r in diagnosis.ranks)}"
    if diagnostics is not None and diagnostics.flags:
        table.caption = Text(", ".join(diagnostics.flags), style=_FLAG_STYLE)
    if diagnostics is None:
        table.add_column("result")
        table.add_row("no signal in some block; segmentation skipped")
        return table
    table.add_column("component")
    table.add_column("ssv")
    has_angles = diagnostics.principal_angles_deg is not None
    if has_angles:
        table.add_column("angle (deg)")
    table.add_column("verdict")
    for i, verdict in enumerate(diagnostics.verdicts):
        row = [str(i + 1), _format_value(float(diagnostics.squared_singular_values[i]))]
        if has_angles:
            row.append(_format_value(float(diagnostics.principal_angles_deg[i])))
        table.add_row(*row, Text(str(verdict), style=_VERDICT_STYLES[str(verdict)]))
    return table


def rank_grid_table(diagnoses: Iterable[Diagnosis]) -> Table:
    """One row per rank tuple of a ``diagnose`` sweep."""
    table = _table()
    for col in ["ranks", "view", "wedin cutoff", "random cutoff", "joint candidate", "flags"]:
        table.add_column(col)
    for diagnosis in diagnoses:
        ranks = ",".join(str(r) for r in diagnosis.ranks)
        diagnostics = diagnosis.diagnostics
        if diagnostics is None:
            table.add_row(ranks, "", "", "", "0", "skipped")
            continue
        table.add_row(
            ranks,
            diagnostics.view,
            _format_value(diagnostics.wedin_cutoff),
            _format_value(diagnostics.random_cutoff),
            str(diagnostics.joint_rank_candidate),
            Text(", ".join(diagnostics.flags), style=_FLAG_STYLE),
        )
    return table


def analysis_summary(result: AnalysisResult) -> KeyValueSummary:
    decomposition = result.decomposition
    summary = KeyValueSummary()
    summary.add("Initial ranks", ", ".join(str(r) for r in result.diagnosis.ranks))
    summary.add("Joint rank candidate", result.diagnosis.joint_rank_candidate)
    summary.add("Joint rank", decomposition.joint_rank)
    for part in decomposition.blocks:
        summary.add(f"Individual rank ({part.name})", part.individual_rank)
    for dropped in result.dropped:
        summary.add(f"Dropped component {dropped.index + 1}", ", ".join(dropped.failing_blocks))
    return summary


def coverage_table(frame: pl.DataFrame, block: str) -> Table:
    """Coverage percentages with nominal levels as rows and ranks as columns."""
    table = frame_table(frame)
    table.title = f"Coverage: {block}"
    return table
