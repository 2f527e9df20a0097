"""Deterministic CSV helpers (17 significant digits, header row always present)."""
from __future__ import annotations

import csv
import io
import math


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    v = float(value)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def write_csv(target, header, rows):
    """Write ``rows`` under ``header`` to a path or text stream."""
    if hasattr(target, "write"):
        _write(target, header, rows)
        return
    with open(target, "w", newline="", encoding="utf-8") as fh:
        _write(fh, header, rows)


def _write(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def to_csv_string(header, rows):
    buf = io.StringIO()
    _write(buf, header, rows)
    return buf.getvalue()


def read_matrix_csv(path):
    """Read a numeric CSV into a list of float rows; a non-numeric first row is a header."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                if i == 0:
                    continue
                raise
    return rows
