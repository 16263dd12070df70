"""CSV loading against the training-log schemas, with column-level validation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

__all__ = ["SchemaError", "ParamsTable", "ValueErrorTable", "load_params", "load_value_error"]


class SchemaError(ValueError):
    """A CSV does not match the expected schema; the message names the column."""


@dataclass(frozen=True)
class ParamsTable:
    """Parsed params.csv: episode index plus one column group per parameter family."""

    n: np.ndarray
    groups: Dict[str, np.ndarray]  # name -> (rows, components)

    def columns(self, group: str) -> List[str]:
        k = self.groups[group].shape[1]
        return [f"{group}_{i + 1}" for i in range(k)]


@dataclass(frozen=True)
class ValueErrorTable:
    n: np.ndarray
    l1_error: np.ndarray
    stderr: np.ndarray


def _read_rows(path) -> List[List[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file, expected a header row")
    return rows


def load_params(path) -> ParamsTable:
    rows = _read_rows(path)
    header = rows[0]
    if not header or header[0] != "n":
        raise SchemaError(f"{path}: first column must be 'n', got {header[:1]}")
    if header[-1] != "wall_ms":
        raise SchemaError(f"{path}: last column must be 'wall_ms', got {header[-1]!r}")
    group_cols: Dict[str, List[int]] = {}
    for idx, name in enumerate(header[1:-1], start=1):
        parts = name.rsplit("_", 1)
        if len(parts) != 2 or not parts[1].isdigit():
            raise SchemaError(f"{path}: unrecognized parameter column {name!r}")
        group_cols.setdefault(parts[0], []).append(idx)
    for group, cols in group_cols.items():
        expected = [f"{group}_{i + 1}" for i in range(len(cols))]
        actual = [header[i] for i in cols]
        if actual != expected:
            raise SchemaError(f"{path}: {group} columns out of order: {actual}")
    body = rows[1:]
    try:
        n = np.array([int(r[0]) for r in body])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-integer value in column 'n'") from exc
    groups = {}
    for group, cols in group_cols.items():
        try:
            groups[group] = np.array([[float(r[i]) for i in cols] for r in body])
        except ValueError as exc:
            raise SchemaError(f"{path}: non-numeric value in a {group} column") from exc
    return ParamsTable(n=n, groups=groups)


def load_value_error(path) -> Optional[ValueErrorTable]:
    """Parse value_error.csv; returns None (caller warns) when there are no rows."""
    rows = _read_rows(path)
    if rows[0] != ["n", "l1_error", "stderr"]:
        bad = next((c for c, e in zip(rows[0], ["n", "l1_error", "stderr"]) if c != e), rows[0])
        raise SchemaError(f"{path}: unexpected column {bad!r}")
    if len(rows) == 1:
        return None
    try:
        n = np.array([int(r[0]) for r in rows[1:]])
        l1 = np.array([float(r[1]) for r in rows[1:]])
        se = np.array([float(r[2]) for r in rows[1:]])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric row in value_error table") from exc
    return ValueErrorTable(n, l1, se)
