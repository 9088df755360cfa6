"""Per-category expert selection over the low-correlation set.

For each weakly correlated category, the expert is the argmax model for
that column; ties break toward the earlier row so recipes are
reproducible. Experts are deduplicated in first-appearance order, which
is why a benchmark with many low-correlation categories can still yield a
three-model soup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .scores import ScoreMatrix


@dataclass(frozen=True)
class ExpertAssignment:
    per_category: dict[str, str]
    experts: tuple[str, ...]

    def to_report(self, low_correlation_set: list[str]) -> dict:
        return {
            "low_correlation_set": list(low_correlation_set),
            "per_category": dict(self.per_category),
            "experts": list(self.experts),
        }


def select_experts(m: ScoreMatrix, low_correlation_set) -> ExpertAssignment:
    """Pick the best-scoring model per category and deduplicate.

    Raises ValidationError when the set is empty; the pipeline treats that
    as the degenerate no-weak-correlation case rather than guessing here.
    """
    categories = list(low_correlation_set)
    if not categories:
        raise ValidationError("no weakly-correlated categories: expert selection degenerates")
    per_category: dict[str, str] = {}
    experts: list[str] = []
    for cat in categories:
        col = m.column(cat)
        winner = m.model_ids[int(np.argmax(col))]  # argmax takes the first maximum
        per_category[cat] = winner
        if winner not in experts:
            experts.append(winner)
    return ExpertAssignment(per_category, tuple(experts))
