"""Columnar text files: metadata headers, CSV-style rows, atomic writes.

Format, shared by every file the toolkit emits:

    # key=value            (any number of metadata lines)
    col_a,col_b            (one header line naming the columns)
    1,0.5                  (data rows)

Floats are serialized with 17 significant digits so write -> read -> write
is byte-stable. Histogram files use a fixed two-column layout
(bin_start_ns,counts) with no column header line; their metadata keys are
bin_width_ns, rep_rate_hz, integration_s and channel.

All writes go through a temp file in the target directory followed by an
atomic rename.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .histogram import TcspcHistogram

_INT_RE = re.compile(r"^[+-]?\d+$")

HISTOGRAM_KEYS = ("bin_width_ns", "rep_rate_hz", "integration_s", "channel")


def _format_cell(value) -> str:
    if isinstance(value, bool):
        raise ValueError("boolean cells are ambiguous; use 0/1")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    text = str(value)
    if "," in text or "\n" in text or "#" in text:
        raise ValueError(f"string cell {text!r} may not contain comma, newline or '#'")
    return text


def _parse_cell(text: str):
    if _INT_RE.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


@dataclass(frozen=True)
class ColumnarReport:
    """Rectangular table plus ordered key=value metadata."""

    metadata: dict[str, str]
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        meta = {}
        for key, value in dict(self.metadata).items():
            key = str(key)
            value = str(value)
            if "=" in key or "\n" in key or "\n" in value:
                raise ValueError(f"invalid metadata entry {key!r}")
            meta[key] = value
        object.__setattr__(self, "metadata", meta)
        columns = tuple(str(c) for c in self.columns)
        if not columns or any("," in c or "\n" in c for c in columns):
            raise ValueError("columns must be non-empty, comma-free names")
        object.__setattr__(self, "columns", columns)
        rows = tuple(tuple(r) for r in self.rows)
        for r in rows:
            if len(r) != len(columns):
                raise ValueError(
                    f"ragged row: {len(r)} cells against {len(columns)} columns"
                )
        object.__setattr__(self, "rows", rows)


def atomic_write_text(path: str, text: str) -> None:
    """Write text via a same-directory temp file and atomic rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(path: str, report: ColumnarReport) -> None:
    lines = [f"# {k}={v}" for k, v in report.metadata.items()]
    lines.append(",".join(report.columns))
    for row in report.rows:
        lines.append(",".join(_format_cell(cell) for cell in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _read_lines(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read().splitlines()


def _split_metadata(lines: list[str]):
    """Leading '# key=value' lines -> (metadata, first body line index)."""
    meta: dict[str, str] = {}
    body_start = len(lines)
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        entry = line.lstrip("#").strip()
        if "=" not in entry:
            raise ParseError(f"metadata line lacks '=': {line!r}", line=i + 1)
        key, value = entry.split("=", 1)
        meta[key.strip()] = value.strip()
    return meta, body_start


def read_report(path: str) -> ColumnarReport:
    lines = _read_lines(path)
    meta, start = _split_metadata(lines)
    if start >= len(lines) or not lines[start].strip():
        raise ParseError("missing column header line", line=start + 1)
    columns = tuple(c.strip() for c in lines[start].split(","))
    rows = []
    for i in range(start + 1, len(lines)):
        if not lines[i].strip():
            continue
        cells = lines[i].split(",")
        if len(cells) != len(columns):
            raise ParseError(
                f"ragged row: {len(cells)} cells against {len(columns)} columns",
                line=i + 1,
            )
        rows.append(tuple(_parse_cell(c.strip()) for c in cells))
    return ColumnarReport(metadata=meta, columns=columns, rows=tuple(rows))


def write_histogram(path: str, hist: TcspcHistogram) -> None:
    lines = [
        f"# bin_width_ns={format(hist.bin_width, '.17g')}",
        f"# rep_rate_hz={format(hist.rep_rate, '.17g')}",
        f"# integration_s={format(hist.integration_time, '.17g')}",
        f"# channel={hist.channel}",
    ]
    starts = hist.bin_starts
    integral = np.issubdtype(hist.counts.dtype, np.integer)
    for i in range(hist.n_bins):
        count = int(hist.counts[i]) if integral else float(hist.counts[i])
        lines.append(f"{_format_cell(float(starts[i]))},{_format_cell(count)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_histogram(path: str) -> TcspcHistogram:
    lines = _read_lines(path)
    meta, start = _split_metadata(lines)
    for key in HISTOGRAM_KEYS:
        if key not in meta:
            raise ParseError(f"missing metadata key '{key}'", line=start + 1)
    try:
        bin_width = float(meta["bin_width_ns"])
        rep_rate = float(meta["rep_rate_hz"])
        integration = float(meta["integration_s"])
    except ValueError as exc:
        raise ParseError(f"non-numeric metadata: {exc}", line=1) from exc
    channel = meta["channel"]

    starts: list[float] = []
    counts: list[float] = []
    count_lines: list[int] = []
    previous = None
    for i in range(start, len(lines)):
        line = lines[i].strip()
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise ParseError(f"expected 'bin_start_ns,counts', got {line!r}", line=i + 1)
        try:
            t = float(cells[0])
            c = float(cells[1])
        except ValueError as exc:
            raise ParseError(f"non-numeric cell: {exc}", line=i + 1) from exc
        if previous is not None and t <= previous:
            raise ParseError(f"non-monotone bin start {t}", line=i + 1)
        expected = len(starts) * bin_width
        if abs(t - expected) > 1e-9 * max(abs(expected), bin_width):
            raise ParseError(
                f"bin start {t} does not sit on the {bin_width} ns grid", line=i + 1
            )
        if c < 0:
            raise ParseError(f"negative counts {cells[1]}", line=i + 1)
        previous = t
        starts.append(t)
        counts.append(c)
        count_lines.append(i + 1)
    if not counts:
        raise ParseError("no data rows", line=len(lines) + 1)
    values = np.array(counts)
    if np.all(values == np.floor(values)):
        values = values.astype(np.int64)
    try:
        return TcspcHistogram(
            bin_width=bin_width,
            counts=values,
            channel=channel,
            integration_time=integration,
            rep_rate=rep_rate,
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
