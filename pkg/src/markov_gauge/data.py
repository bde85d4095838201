"""Column-named datasets, CSV ingestion and seeded subsampling."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

_MISSING = {"", "na", "nan", "n/a", "null", "none", "?", "*"}


@dataclass(frozen=True, eq=False)
class Dataset:
    column_names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        names = tuple(str(c) for c in self.column_names)
        if len(set(names)) != len(names):
            raise DataError("column names must be unique")
        values = np.array(self.values, dtype=float, order="C")
        if values.ndim != 2 or values.shape[1] != len(names):
            raise DataError(f"expected a 2-D array with {len(names)} columns, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise DataError("dataset contains missing or non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "values", values)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise DataError(f"no column named {name!r}") from None

    def column_indices(self, names: Sequence[str]) -> list[int]:
        missing = [n for n in names if n not in self.column_names]
        if missing:
            raise DataError(f"graph nodes missing from dataset: {missing}")
        lookup = {n: i for i, n in enumerate(self.column_names)}
        return [lookup[n] for n in names]

    def take_rows(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.column_names, self.values[rows])

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.column_names)
        for row in self.values:
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.csv_text(), encoding="utf-8")


def load_csv(path: str | Path) -> Dataset:
    """Read a numeric CSV with a header row of unique column names."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        seen = set()
        for h in header:
            if h in seen:
                raise DataError(f"{path}: duplicate column {h!r}")
            seen.add(h)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{line_no}: expected {len(header)} cells, got {len(row)}")
            parsed = []
            for name, cell in zip(header, row):
                cell = cell.strip()
                if cell.lower() in _MISSING:
                    raise DataError(f"{path}:{line_no}: missing value in column {name!r}")
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}:{line_no}: non-numeric value {cell!r} in column {name!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{line_no}: missing value in column {name!r}")
                parsed.append(v)
            rows.append(parsed)
    values = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return Dataset(tuple(header), values)


def subsample_rows(n_rows: int, fraction: float, rng: np.random.Generator, min_rows: int = 1) -> np.ndarray:
    """Sorted row indices of a uniform subsample without replacement."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    m = int(math.floor(fraction * n_rows))
    if m < max(min_rows, 1):
        raise DataError(f"subsample of {m} rows is below the minimum of {min_rows}")
    if m == n_rows:
        return np.arange(n_rows)
    return np.sort(rng.choice(n_rows, size=m, replace=False))


def subsample(d: Dataset, fraction: float, seed, min_rows: int = 1) -> Dataset:
    """``floor(fraction * n_rows)`` distinct rows, original order kept."""
    rows = subsample_rows(d.n_rows, fraction, np.random.default_rng(seed), min_rows)
    return d.take_rows(rows)
