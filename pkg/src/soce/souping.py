"""Weighted parameter averaging across same-architecture checkpoints.

Accumulation is always float64 in a fixed model order (i = 1..n), then a
single rounding to the common storage dtype, so a recipe reproduces
bit-identically on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .checkpoint import TensorEntry, TensorMap
from .errors import CompatibilityError, ValidationError
from .weightgrid import Recipe


@dataclass(frozen=True)
class CompatibilityReport:
    compatible: bool
    mismatches: tuple[tuple[str, str, str], ...]  # (tensor name, kind, details)

    def to_report(self) -> dict:
        return {
            "compatible": self.compatible,
            "mismatches": [
                {"tensor": t, "kind": k, "details": d} for t, k, d in self.mismatches
            ],
        }


def check_compatible(models: Sequence[TensorMap]) -> CompatibilityReport:
    """Report every tensor missing from some model or differing in shape/dtype."""
    if len(models) < 2:
        raise ValidationError("compatibility check needs at least 2 models")
    all_names = sorted(set().union(*(m.tensors.keys() for m in models)))
    mismatches = []
    for name in all_names:
        entries = [m.tensors.get(name) for m in models]
        missing = [i for i, e in enumerate(entries) if e is None]
        if missing:
            mismatches.append(
                (name, "missing", f"absent from model index(es) {missing}")
            )
            continue
        shapes = {e.shape for e in entries}
        if len(shapes) > 1:
            mismatches.append((name, "shape", f"shapes {sorted(shapes)}"))
        dtypes = {e.dtype for e in entries}
        if len(dtypes) > 1:
            mismatches.append((name, "dtype", f"dtypes {sorted(dtypes)}"))
    return CompatibilityReport(not mismatches, tuple(mismatches))


def soup(models: Sequence[TensorMap], weights: Sequence, metadata=None) -> TensorMap:
    """Elementwise weighted average of compatible checkpoints.

    Weights must be nonnegative and sum to 1 (1e-9 slack); zeros are
    allowed here so degenerate coalition recipes can be expressed.
    """
    models = list(models)
    weights = [float(w) for w in weights]
    if len(models) != len(weights):
        raise ValidationError("one weight per model required")
    if not models:
        raise ValidationError("cannot soup zero models")
    if any(w < 0 for w in weights):
        raise ValidationError("weights must be nonnegative")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValidationError(f"weights sum to {sum(weights)}, not 1")
    if len(models) >= 2:
        report = check_compatible(models)
        if not report.compatible:
            raise CompatibilityError(
                f"{len(report.mismatches)} incompatible tensor(s)", report.mismatches
            )

    out: dict[str, TensorEntry] = {}
    for name, first in models[0].tensors.items():
        acc = np.zeros(first.shape, dtype=np.float64)
        for w, model in zip(weights, models):
            acc += w * model.tensors[name].to_f64()
        out[name] = TensorEntry.from_f64(acc, first.dtype)
    return TensorMap(out, dict(metadata or {}))


def soup_recipe(recipe: Recipe, checkpoints: dict[str, TensorMap]) -> TensorMap:
    """Soup per a recipe, recording it in the output metadata."""
    try:
        models = [checkpoints[m] for m in recipe.model_ids]
    except KeyError as exc:
        raise ValidationError(f"no checkpoint for model {exc.args[0]!r}") from None
    weights = [Fraction(w) for _, w in recipe.entries]
    meta = {
        "soup_recipe": ";".join(f"{m}={w}" for m, w in recipe.entries),
    }
    return soup(models, [float(w) for w in weights], metadata=meta)
