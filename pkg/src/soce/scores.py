"""Benchmark score ingestion and category correlation structure.

A score table is a dense models x categories matrix of leaderboard-style
percentages. Correlating category columns across the model population
reveals which categories move together and which are nearly independent;
the weakly correlated ones are where distinct expert models exist.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

#: Default threshold below which |rho| counts as "weakly correlated".
DEFAULT_TAU = 0.5


@dataclass(frozen=True)
class ScoreMatrix:
    """Dense models x categories score table.

    Rows follow ``model_ids``, columns follow ``category_ids``. All cells
    are finite floats; missing data is rejected at ingestion.
    """

    model_ids: tuple[str, ...]
    category_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "model_ids", tuple(self.model_ids))
        object.__setattr__(self, "category_ids", tuple(self.category_ids))
        object.__setattr__(self, "values", values)
        if len(set(self.model_ids)) != len(self.model_ids):
            raise ValidationError("duplicate model id")
        if len(set(self.category_ids)) != len(self.category_ids):
            raise ValidationError("duplicate category id")
        if values.shape != (len(self.model_ids), len(self.category_ids)):
            raise ValidationError(
                f"score matrix shape {values.shape} does not match "
                f"{len(self.model_ids)} models x {len(self.category_ids)} categories"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("non-finite score")

    def column(self, category_id: str) -> np.ndarray:
        try:
            j = self.category_ids.index(category_id)
        except ValueError:
            raise ValidationError(f"unknown category {category_id!r}") from None
        return self.values[:, j]

    def row(self, model_id: str) -> np.ndarray:
        try:
            i = self.model_ids.index(model_id)
        except ValueError:
            raise ValidationError(f"unknown model {model_id!r}") from None
        return self.values[i, :]


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric category x category Pearson matrix.

    Undefined cells (a zero-variance column involved) are stored as NaN and
    surfaced as ``None`` by :meth:`cell` and as ``null`` in JSON reports.
    """

    category_ids: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "category_ids", tuple(self.category_ids))
        object.__setattr__(self, "values", values)
        k = len(self.category_ids)
        if values.shape != (k, k):
            raise ValidationError("correlation matrix must be square over category_ids")
        defined = np.isfinite(values)
        if not np.array_equal(defined, defined.T):
            raise ValidationError("correlation matrix definedness must be symmetric")
        if not np.allclose(values[defined & defined.T], values.T[defined & defined.T], atol=0):
            raise ValidationError("correlation matrix must be symmetric")
        if np.any(np.abs(values[defined]) > 1.0 + 1e-12):
            raise ValidationError("correlation coefficient outside [-1, 1]")

    def cell(self, i: int, j: int) -> float | None:
        v = self.values[i, j]
        return None if math.isnan(v) else float(v)

    def to_lists(self) -> list[list[float | None]]:
        k = len(self.category_ids)
        return [[self.cell(i, j) for j in range(k)] for i in range(k)]


def pearson(x, y) -> float | None:
    """Pearson correlation of two equal-length vectors.

    Two-pass (mean, then centered moments) in double precision. Returns
    ``None`` when either vector has zero variance: a constant column
    carries no correlation evidence.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ValidationError("pearson requires two 1-d vectors of equal length")
    if x.size < 2:
        raise ValidationError("pearson requires at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        return None
    # sqrt before multiplying: sxx * syy can underflow for tiny vectors.
    r = float(np.dot(dx, dy)) / (math.sqrt(sxx) * math.sqrt(syy))
    # Clamp tiny excursions past +/-1 from rounding; anything larger is a bug.
    return max(-1.0, min(1.0, r))


def category_correlations(m: ScoreMatrix) -> CorrelationMatrix:
    """Pearson matrix over all category-column pairs of a score table."""
    if len(m.model_ids) < 2:
        raise ValidationError("category correlations need at least 2 models")
    k = len(m.category_ids)
    out = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            r = pearson(m.values[:, i], m.values[:, j])
            if r is not None:
                out[i, j] = out[j, i] = r
    return CorrelationMatrix(m.category_ids, out)


def low_correlation_categories(c: CorrelationMatrix, tau: float = DEFAULT_TAU) -> list[str]:
    """Categories having at least one other category with |rho| < tau.

    Undefined cells never qualify a pair. Output order follows
    ``c.category_ids``.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValidationError("tau must lie in [0, 1]")
    k = len(c.category_ids)
    members = []
    for i in range(k):
        for j in range(k):
            if j == i:
                continue
            r = c.cell(i, j)
            if r is not None and abs(r) < tau:
                members.append(c.category_ids[i])
                break
    return members


def mean_offdiagonal(c: CorrelationMatrix) -> float:
    """Mean of defined off-diagonal cells, each unordered pair counted once."""
    k = len(c.category_ids)
    if k < 2:
        raise ValidationError("need at least 2 categories")
    cells = [
        c.cell(i, j)
        for i in range(k)
        for j in range(i + 1, k)
        if c.cell(i, j) is not None
    ]
    if not cells:
        raise ValidationError("no defined off-diagonal correlations")
    return float(np.mean(cells))


def _parse_cell(raw: str, where: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ValidationError(f"non-numeric score {raw!r} at {where}") from None
    if not math.isfinite(v):
        raise ValidationError(f"non-finite score at {where}")
    return v


def load_scores(source, format: str = "csv") -> ScoreMatrix:
    """Load a score table from a path or readable stream.

    CSV: header row ``model,<category>,...``; one row per model.
    JSON: ``{"models": [...], "categories": [...], "scores": [[...]]}``.
    """
    if format not in ("csv", "json"):
        raise ValidationError(f"unknown score format {format!r}")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_scores(fh, format)
    if isinstance(source, (bytes, bytearray)):
        return load_scores(io.StringIO(source.decode("utf-8")), format)

    if format == "json":
        try:
            obj = json.load(source)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed score JSON: {exc}") from None
        for key in ("models", "categories", "scores"):
            if key not in obj:
                raise ValidationError(f"score JSON missing key {key!r}")
        rows = obj["scores"]
        if any(len(row) != len(obj["categories"]) for row in rows):
            raise ValidationError("ragged score rows")
        if len(rows) != len(obj["models"]):
            raise ValidationError("score row count does not match model count")
        values = [
            [_parse_cell(str(cell), f"({mi},{ci})") for ci, cell in enumerate(row)]
            for mi, row in enumerate(rows)
        ]
        return ScoreMatrix(obj["models"], obj["categories"], np.array(values, dtype=np.float64).reshape(len(rows), len(obj["categories"])))

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty score CSV") from None
    if not header or header[0].strip().lower() != "model":
        raise ValidationError('score CSV header must start with "model"')
    categories = [h.strip() for h in header[1:]]
    if not categories:
        raise ValidationError("score CSV has no category columns")
    models, values = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(categories) + 1:
            raise ValidationError(f"ragged row at line {lineno}")
        models.append(row[0].strip())
        values.append([_parse_cell(cell, f"line {lineno}") for cell in row[1:]])
    if not models:
        raise ValidationError("score CSV has no model rows")
    return ScoreMatrix(models, categories, np.array(values, dtype=np.float64))


def correlation_report(m: ScoreMatrix, tau: float = DEFAULT_TAU) -> dict:
    """Assemble the correlation report emitted by the CLI."""
    c = category_correlations(m)
    return {
        "categories": list(c.category_ids),
        "matrix": c.to_lists(),
        "mean_offdiagonal": mean_offdiagonal(c),
        "low_correlation_set": low_correlation_categories(c, tau),
        "tau": tau,
    }
