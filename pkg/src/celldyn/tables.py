"""Row-table serialization shared by the reports (CSV, JSON, markdown)."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence


def format_cell(value) -> str:
    """Text form of a cell: empty for missing values, lowercase booleans."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def json_safe(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    return value


def json_text(obj) -> str:
    return json.dumps(json_safe(obj), indent=2, allow_nan=False) + "\n"


def markdown_text(columns: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Pipe table with columns padded to a common width."""
    cells = [list(columns)] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    lines = []
    for k, r in enumerate(cells):
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(r, widths)) + " |")
        if k == 0:
            lines.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
    return "\n".join(lines) + "\n"


def write_table(path, columns: Sequence[str], rows: Sequence[dict], fmt: str = "csv") -> Path:
    """Write rows as ``path`` with the extension matching ``fmt``."""
    path = Path(path).with_suffix("." + fmt)
    if fmt == "csv":
        text = csv_text(columns, rows)
    elif fmt == "json":
        text = json_text([{c: r.get(c) for c in columns} for r in rows])
    elif fmt == "md":
        text = markdown_text(columns, [[format_cell(r.get(c)) for c in columns] for r in rows])
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path.write_text(text)
    return path


def read_table(path) -> list[dict]:
    """Rows of a CSV or JSON table as dicts (CSV values stay strings)."""
    path = Path(path)
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        if not isinstance(data, list):
            raise ValueError(f"{path}: expected a JSON list of rows")
        return data
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def to_float(value):
    """Parse a table cell into a float; empty and missing cells become None."""
    if value is None or value == "":
        return None
    if isinstance(value, bool):
        return float(value)
    return float(value)
