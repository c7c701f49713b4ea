"""Small file helpers: atomic writes and strict numeric CSV parsing."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError


class CsvParseError(DomainError):
    """Malformed CSV input; ``line`` is the 1-based line number."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def fmt(x) -> str:
    """Round-trip float formatting (reloads bit-identically)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    atomic_write_text(path, csv_text(header, rows))


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def matrix_csv_text(matrix: np.ndarray) -> str:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    header = [f"c{j}" for j in range(matrix.shape[1])]
    return csv_text(header, matrix.tolist())


def read_numeric_csv(path, header: Sequence[str] | None = None) -> np.ndarray:
    """Read a headered numeric CSV into a 2-D float array.

    If ``header`` is given the file's header row must match it exactly.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise CsvParseError(path, 1, "empty file") from None
        first = [c.strip() for c in first]
        if header is not None and first != list(header):
            raise CsvParseError(path, 1, f"expected header {','.join(header)!r}, got {','.join(first)!r}")
        width = len(first)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise CsvParseError(path, lineno, f"expected {width} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise CsvParseError(path, lineno, f"non-numeric field in {row!r}") from None
    return np.array(rows, dtype=float).reshape(len(rows), width)
