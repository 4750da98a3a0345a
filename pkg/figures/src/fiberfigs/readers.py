"""CSV readers with schema validation."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import SchemaError


def read_table(path, required: list[str]) -> dict[str, np.ndarray]:
    """Read a CSV with a header row into named float columns.

    Columns listed in ``required`` must be present; extra columns are kept.
    The special column ``class`` stays as strings.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}, found {header}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    cols: dict[str, list] = {name: [] for name in header}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, "
                              f"got {len(row)}")
        for name, value in zip(header, row):
            cols[name].append(value)
    out: dict[str, np.ndarray] = {}
    for name, values in cols.items():
        if name == "class":
            out[name] = np.array(values)
            continue
        try:
            out[name] = np.array([float(v) for v in values])
        except ValueError as exc:
            raise SchemaError(f"{path}: column {name!r}: {exc}") from None
    return out
