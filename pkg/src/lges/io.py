"""Datasets, graph files and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .errors import InvalidDataError
from .graph import Pdag, from_text, to_text


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header row of variable names followed by numeric rows.

    Raises :class:`InvalidDataError` naming the offending line.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidDataError(f"{path}: empty file") from None
        names = [h.strip() for h in header]
        if not names or any(not n for n in names):
            raise InvalidDataError(f"{path}: line 1: empty variable name in header")
        if len(set(names)) != len(names):
            raise InvalidDataError(f"{path}: line 1: duplicate variable names")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(names):
                raise InvalidDataError(f"{path}: line {line}: expected {len(names)} fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise InvalidDataError(f"{path}: line {line}: {exc}") from None
            if not all(math.isfinite(v) for v in vals):
                raise InvalidDataError(f"{path}: line {line}: non-finite value")
            rows.append(vals)
    if not rows:
        raise InvalidDataError(f"{path}: no data rows")
    return names, np.asarray(rows, dtype=float)


def write_csv(path, names: Sequence[str], data: np.ndarray) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in np.asarray(data):
            w.writerow([repr(float(v)) for v in row])


def read_graph(path, names: Sequence[str] | None = None) -> tuple[Pdag, list[str]]:
    return from_text(Path(path).read_text(), names)


def write_graph(path, e: Pdag, names: Sequence[str] | None = None) -> None:
    Path(path).write_text(to_text(e, names))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")
