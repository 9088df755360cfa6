"""Weight lattice on the probability simplex and exhaustive soup search.

The lattice holds every vector whose components are integer multiples of
the step (default 0.1) inside [min_w, max_w] and sum to exactly 1, plus
the equal-weights special case when it is off-lattice. Weights are exact
Fractions throughout; floats appear only when a soup is materialized, so
recipes deduplicate and reproduce exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import math

from .errors import EvaluatorError, ValidationError

WeightVector = tuple[Fraction, ...]


@dataclass(frozen=True)
class Recipe:
    """Ordered (model id, weight) pairs with weights summing to 1."""

    entries: tuple[tuple[str, Fraction], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple((str(m), Fraction(w)) for m, w in self.entries)
        )
        ids = [m for m, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate model id in recipe")
        if any(w <= 0 for _, w in self.entries):
            raise ValidationError("recipe weights must be positive")
        if sum((w for _, w in self.entries), Fraction(0)) != 1:
            raise ValidationError("recipe weights must sum to 1")

    @property
    def model_ids(self) -> tuple[str, ...]:
        return tuple(m for m, _ in self.entries)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(float(w) for _, w in self.entries)

    def canonical_key(self) -> tuple[tuple[str, Fraction], ...]:
        """Order-independent identity used for caching and dedup."""
        return tuple(sorted(self.entries))

    def to_json(self) -> dict:
        return {
            "entries": [
                {
                    "model": m,
                    "weight_numerator": w.numerator,
                    "weight_denominator": w.denominator,
                }
                for m, w in self.entries
            ]
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Recipe":
        try:
            entries = [
                (e["model"], Fraction(int(e["weight_numerator"]), int(e["weight_denominator"])))
                for e in obj["entries"]
            ]
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"malformed recipe JSON: {exc}") from None
        return cls(tuple(entries))

    @classmethod
    def uniform(cls, model_ids: Sequence[str]) -> "Recipe":
        ids = list(model_ids)
        if not ids:
            raise ValidationError("uniform recipe needs at least one model")
        w = Fraction(1, len(ids))
        return cls(tuple((m, w) for m in ids))


@dataclass(frozen=True)
class SearchResult:
    best: Recipe
    best_objective: float
    evaluated: tuple[tuple[Recipe, dict[str, float], float], ...]
    evaluation_count: int = field(default=0)

    def to_report(self) -> dict:
        return {
            "best": self.best.to_json(),
            "best_objective": self.best_objective,
            "evaluation_count": self.evaluation_count,
            "evaluated": [
                {
                    "recipe": r.to_json(),
                    "scores": dict(scores),
                    "objective": obj,
                }
                for r, scores, obj in self.evaluated
            ],
        }


def generate_grid(
    l: int,
    step: Fraction = Fraction(1, 10),
    min_w: Fraction = Fraction(1, 10),
    max_w: Fraction = Fraction(9, 10),
) -> list[WeightVector]:
    """All lattice vectors of length l, lexicographically ordered."""
    step, min_w, max_w = Fraction(step), Fraction(min_w), Fraction(max_w)
    if l < 2:
        raise ValidationError("grid needs at least 2 candidates")
    if step <= 0 or (1 / step).denominator != 1:
        raise ValidationError("step must divide 1 exactly")
    if min_w < step:
        raise ValidationError("min_w must be at least step")
    if l * min_w > 1:
        raise ValidationError(f"infeasible grid: {l} models with min weight {min_w}")
    units = int(1 / step)
    lo = math.ceil(min_w / step)
    hi = math.floor(max_w / step)

    out: list[WeightVector] = []

    def extend(prefix: list[int], remaining: int, slots: int):
        if slots == 1:
            if lo <= remaining <= hi:
                out.append(tuple(Fraction(u, units) for u in prefix + [remaining]))
            return
        for u in range(lo, hi + 1):
            rest = remaining - u
            if rest < lo * (slots - 1) or rest > hi * (slots - 1):
                continue
            extend(prefix + [u], rest, slots - 1)

    extend([], units, l)
    return out


def with_equal_case(grid: list[WeightVector], l: int) -> list[WeightVector]:
    """Append the uniform vector unless it already lies on the lattice."""
    equal = tuple([Fraction(1, l)] * l)
    if equal in grid:
        return list(grid)
    return list(grid) + [equal]


def macro_objective(scores: Mapping[str, float]) -> float:
    """Unweighted mean over all categories: the search objective."""
    if not scores:
        raise ValidationError("cannot average an empty score map")
    return float(sum(scores.values()) / len(scores))


def optimize_weights(
    experts: Sequence[str],
    evaluator: Callable[[Recipe], Mapping[str, float]],
    objective: Callable[[Mapping[str, float]], float] = macro_objective,
    step: Fraction = Fraction(1, 10),
    min_w: Fraction = Fraction(1, 10),
    max_w: Fraction = Fraction(9, 10),
) -> SearchResult:
    """Exhaustive sweep of the weight lattice plus the equal case.

    Ties break toward the earlier vector in enumeration order; every
    evaluation is kept in the result for audit.
    """
    experts = list(experts)
    if len(experts) < 2:
        raise ValidationError("weight search needs at least 2 experts")
    vectors = with_equal_case(generate_grid(len(experts), step, min_w, max_w), len(experts))
    evaluated = []
    best_idx, best_obj = -1, -math.inf
    for idx, vec in enumerate(vectors):
        recipe = Recipe(tuple(zip(experts, vec)))
        try:
            scores = dict(evaluator(recipe))
        except EvaluatorError as exc:
            if exc.recipe is None:
                exc.recipe = recipe
            raise
        except Exception as exc:
            raise EvaluatorError(f"evaluator failed: {exc}", recipe=recipe) from exc
        if any(not math.isfinite(v) for v in scores.values()):
            raise EvaluatorError("evaluator returned non-finite scores", recipe=recipe)
        obj = objective(scores)
        evaluated.append((recipe, scores, obj))
        if obj > best_obj:
            best_idx, best_obj = idx, obj
    best_recipe = evaluated[best_idx][0]
    return SearchResult(
        best=best_recipe,
        best_objective=best_obj,
        evaluated=tuple(evaluated),
        evaluation_count=len(evaluated),
    )
