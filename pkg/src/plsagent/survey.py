"""Likert survey ingestion and descriptive statistics.

Responses are kept as a float matrix with ``NaN`` marking a missing answer so
that numpy reductions can skip them explicitly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd


class SurveyError(ValueError):
    """Raised for malformed survey files or matrices."""


class SchemaError(SurveyError):
    pass


class OutOfRangeError(SurveyError):
    def __init__(self, row: int, column: str, value: str):
        self.row, self.column, self.value = row, column, value
        super().__init__(f"value {value!r} out of range at row {row}, column {column!r}")


@dataclass(frozen=True)
class SurveySpec:
    blocks: tuple[tuple[str, tuple[str, ...]], ...]
    scale_min: int = 1
    scale_max: int = 5

    def __post_init__(self):
        object.__setattr__(
            self, "blocks", tuple((code, tuple(items)) for code, items in self.blocks)
        )
        if self.scale_min >= self.scale_max:
            raise ValueError("scale_min must be below scale_max")
        seen = set()
        for code, items in self.blocks:
            if not items:
                raise ValueError(f"block {code!r} has no items")
            for item in items:
                if item in seen:
                    raise ValueError(f"duplicate item code {item!r}")
                seen.add(item)

    @property
    def items(self) -> tuple[str, ...]:
        return tuple(item for _, items in self.blocks for item in items)

    @property
    def n_points(self) -> int:
        return self.scale_max - self.scale_min + 1


def paper_survey_spec() -> SurveySpec:
    """The five-block, 25-item questionnaire (PBL, learning, cooperation,
    self-esteem, self-realization)."""
    return SurveySpec(
        tuple((prefix, tuple(f"{prefix}{i}" for i in range(1, 6))) for prefix in "PCGER")
    )


@dataclass(frozen=True)
class ResponseMatrix:
    """N respondents by P items; ``NaN`` marks a missing answer."""

    items: tuple[str, ...]
    rows: np.ndarray
    scale_min: int = 1
    scale_max: int = 5

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.items):
            raise SurveyError(
                f"expected a 2-D matrix with {len(self.items)} columns, got shape {rows.shape}"
            )
        finite = rows[~np.isnan(rows)]
        if finite.size and (finite.min() < self.scale_min or finite.max() > self.scale_max):
            raise SurveyError("entries outside the response scale")
        rows.setflags(write=False)
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "rows", rows)

    @property
    def n_respondents(self) -> int:
        return self.rows.shape[0]

    def column(self, item: str) -> np.ndarray:
        return self.rows[:, self.items.index(item)]

    def select(self, items: Sequence[str]) -> "ResponseMatrix":
        idx = [self.items.index(i) for i in items]
        return ResponseMatrix(tuple(items), self.rows[:, idx], self.scale_min, self.scale_max)

    def complete_rows(self, items: Sequence[str] | None = None) -> np.ndarray:
        """Boolean mask of respondents with no missing answer among ``items``."""
        sub = self.rows if items is None else self.select(items).rows
        return ~np.isnan(sub).any(axis=1)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=list(self.items))


def load_responses(path: str | Path, spec: SurveySpec) -> ResponseMatrix:
    """Read a comma-separated response file.

    The header must name only items declared in ``spec`` (in any order);
    columns are reordered to the spec's item order. Empty cells are missing.
    Items of the spec that are absent from the header are a schema error.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SurveyError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if not header or any(not h for h in header):
            raise SchemaError(f"{path}: malformed header {header!r}")
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}: duplicate columns in header")
        unknown = [h for h in header if h not in spec.items]
        if unknown:
            raise SchemaError(f"{path}: unknown columns {unknown}")
        missing = [i for i in spec.items if i not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")

        allowed = {str(v): float(v) for v in range(spec.scale_min, spec.scale_max + 1)}
        data = []
        for lineno, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != len(header):
                raise SchemaError(
                    f"{path}: row {lineno} has {len(record)} cells, expected {len(header)}"
                )
            values = []
            for col, cell in zip(header, record):
                cell = cell.strip()
                if cell == "":
                    values.append(np.nan)
                elif cell in allowed:
                    values.append(allowed[cell])
                else:
                    raise OutOfRangeError(lineno, col, cell)
            data.append(values)

    if not data:
        raise SurveyError(f"{path}: no response rows")
    order = [header.index(i) for i in spec.items]
    rows = np.array(data, dtype=float)[:, order]
    return ResponseMatrix(spec.items, rows, spec.scale_min, spec.scale_max)


def save_responses(data: ResponseMatrix, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(data.items)
        for row in data.rows:
            writer.writerow("" if np.isnan(v) else str(int(v)) for v in row)


def _round_half_up(x: float, ndigits: int = 2) -> float:
    q = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class FrequencyTable:
    """Per-item response percentages over all N respondents.

    ``percent`` has one column per scale point. Internals are full precision;
    use :meth:`to_frame` for the rounded presentation.
    """

    items: tuple[str, ...]
    percent: np.ndarray
    missing_pct: np.ndarray
    n_respondents: int
    scale_points: tuple[int, ...] = field(default=(1, 2, 3, 4, 5))

    @property
    def neg_pct(self) -> np.ndarray:
        return self.percent[:, :2].sum(axis=1)

    @property
    def indif_pct(self) -> np.ndarray:
        return self.percent[:, 2]

    @property
    def pos_pct(self) -> np.ndarray:
        return self.percent[:, 3:].sum(axis=1)

    def row(self, item: str) -> dict:
        i = self.items.index(item)
        out = {str(p): self.percent[i, k] for k, p in enumerate(self.scale_points)}
        out.update(neg=self.neg_pct[i], indif=self.indif_pct[i], pos=self.pos_pct[i])
        out["missing"] = self.missing_pct[i]
        return out

    def to_frame(self, decimals: int | None = 2) -> pd.DataFrame:
        cols = {str(p): self.percent[:, k] for k, p in enumerate(self.scale_points)}
        cols.update(neg=self.neg_pct, indif=self.indif_pct, pos=self.pos_pct, missing=self.missing_pct)
        df = pd.DataFrame(cols, index=pd.Index(self.items, name="item"))
        if decimals is not None:
            df = df.apply(lambda col: col.map(lambda v: _round_half_up(v, decimals)))
        return df


def frequency_summary(data: ResponseMatrix) -> FrequencyTable:
    n = data.n_respondents
    if n == 0:
        raise SurveyError("no respondents")
    if data.scale_max - data.scale_min != 4:
        raise SurveyError("frequency summary expects a five-point scale")
    points = np.arange(data.scale_min, data.scale_max + 1)
    counts = (data.rows[:, :, None] == points[None, None, :]).sum(axis=0)
    percent = 100.0 * counts / n
    missing = 100.0 * np.isnan(data.rows).sum(axis=0) / n
    return FrequencyTable(data.items, percent, missing, n, tuple(int(p) for p in points))


def standardize(data: ResponseMatrix | np.ndarray, items: Sequence[str] | None = None) -> np.ndarray:
    """Center each column and scale it to unit standard deviation.

    The standard deviation uses denominator N, so the covariance between an
    indicator and a standardized score equals their correlation. Missing
    values must be removed beforehand.
    """
    if isinstance(data, ResponseMatrix):
        items = data.items
        x = data.rows
    else:
        x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise SurveyError("cannot standardize an empty matrix")
    if np.isnan(x).any():
        raise SurveyError("standardize requires complete data; drop missing rows first")
    mean = x.mean(axis=0)
    centered = x - mean
    sd = np.sqrt((centered**2).mean(axis=0))
    scale = np.maximum(np.abs(mean), 1.0)
    zero = sd <= 1e-12 * scale
    if zero.any():
        names = [items[i] if items else str(i) for i in np.flatnonzero(zero)]
        raise SurveyError(f"zero-variance column(s): {names}")
    return centered / sd
