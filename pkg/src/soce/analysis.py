"""Post-hoc analyses of souping outcomes.

Win-rate set algebra over per-task pass/fail tables (what the soup keeps,
newly solves, and rescues), the shift in mean category correlation
between a model population and its souped counterparts, and per-category
gain counts.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .scores import CorrelationMatrix, ScoreMatrix, category_correlations, pearson


@dataclass(frozen=True)
class TaskOutcomes:
    """Boolean pass vectors per model over a shared task list."""

    task_ids: tuple[str, ...]
    per_model: dict[str, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "task_ids", tuple(self.task_ids))
        if len(set(self.task_ids)) != len(self.task_ids):
            raise ValidationError("duplicate task id")
        per_model = {}
        for mid, vec in self.per_model.items():
            arr = np.asarray(vec, dtype=bool)
            if arr.shape != (len(self.task_ids),):
                raise ValidationError(
                    f"outcome vector for {mid!r} has length {arr.size}, "
                    f"expected {len(self.task_ids)}"
                )
            arr.setflags(write=False)
            per_model[mid] = arr
        object.__setattr__(self, "per_model", per_model)

    def solved(self, model_id: str) -> np.ndarray:
        try:
            return self.per_model[model_id]
        except KeyError:
            raise ValidationError(f"unknown model {model_id!r}") from None

    @classmethod
    def from_json(cls, obj: dict) -> "TaskOutcomes":
        try:
            return cls(tuple(obj["tasks"]), {m: v for m, v in obj["results"].items()})
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed task outcome JSON: {exc}") from None


def load_outcomes(source) -> TaskOutcomes:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_outcomes(fh)
    try:
        obj = json.load(source)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed task outcome JSON: {exc}") from None
    return TaskOutcomes.from_json(obj)


def retention_rate(outcomes: TaskOutcomes, soup_id: str, candidate_id: str) -> float:
    """Fraction of the candidate's solved tasks the soup also solves."""
    soup = outcomes.solved(soup_id)
    cand = outcomes.solved(candidate_id)
    denom = int(cand.sum())
    if denom == 0:
        raise ValidationError(f"candidate {candidate_id!r} solves zero tasks")
    return float((soup & cand).sum()) / denom


def new_solve_rate(outcomes: TaskOutcomes, soup_id: str, candidate_ids) -> tuple[float, int, int]:
    """Over tasks every candidate fails: (soup solve fraction, solved, universe)."""
    soup = outcomes.solved(soup_id)
    all_fail = np.ones(len(outcomes.task_ids), dtype=bool)
    for cid in candidate_ids:
        all_fail &= ~outcomes.solved(cid)
    universe = int(all_fail.sum())
    if universe == 0:
        raise ValidationError("no tasks failed by every candidate")
    solved = int((soup & all_fail).sum())
    return solved / universe, solved, universe


def single_failure_completion(outcomes: TaskOutcomes, soup_id: str, candidate_ids) -> float:
    """Over tasks where exactly one candidate fails: fraction the soup solves."""
    soup = outcomes.solved(soup_id)
    fails = np.stack([~outcomes.solved(cid) for cid in candidate_ids])
    exactly_one = fails.sum(axis=0) == 1
    universe = int(exactly_one.sum())
    if universe == 0:
        raise ValidationError("no tasks with exactly one candidate failure")
    return float((soup & exactly_one).sum()) / universe


@dataclass(frozen=True)
class CorrelationShiftReport:
    pre_mean: float
    post_mean: float
    delta: float
    per_pair: dict[tuple[str, str], tuple[float, float]]

    def to_report(self) -> dict:
        return {
            "pre_mean": self.pre_mean,
            "post_mean": self.post_mean,
            "delta": self.delta,
            "per_pair": {
                f"{a}|{b}": {"pre": pre, "post": post}
                for (a, b), (pre, post) in self.per_pair.items()
            },
        }


def correlation_shift(pre: ScoreMatrix, post: ScoreMatrix) -> CorrelationShiftReport:
    """Mean off-diagonal correlation before vs after souping.

    Pairs undefined in either population are dropped from both means so
    the two averages cover the same pair set.
    """
    if pre.category_ids != post.category_ids:
        raise ValidationError("pre and post score matrices must share categories")
    c_pre = category_correlations(pre)
    c_post = category_correlations(post)
    per_pair: dict[tuple[str, str], tuple[float, float]] = {}
    k = len(pre.category_ids)
    for i in range(k):
        for j in range(i + 1, k):
            a, b = c_pre.cell(i, j), c_post.cell(i, j)
            if a is None or b is None:
                continue
            per_pair[(pre.category_ids[i], pre.category_ids[j])] = (a, b)
    if not per_pair:
        raise ValidationError("no category pair with defined pre and post correlation")
    pre_mean = float(np.mean([p for p, _ in per_pair.values()]))
    post_mean = float(np.mean([q for _, q in per_pair.values()]))
    return CorrelationShiftReport(pre_mean, post_mean, post_mean - pre_mean, per_pair)


def category_gains(soup_scores, candidate_scores) -> tuple[int, int, int, float]:
    """(improved, regressed, unchanged, mean soup-candidate delta) per category."""
    if set(soup_scores) != set(candidate_scores):
        raise ValidationError("soup and candidate score maps must share categories")
    if not soup_scores:
        raise ValidationError("empty score maps")
    deltas = [soup_scores[c] - candidate_scores[c] for c in soup_scores]
    improved = sum(1 for d in deltas if d > 0)
    regressed = sum(1 for d in deltas if d < 0)
    unchanged = len(deltas) - improved - regressed
    return improved, regressed, unchanged, float(np.mean(deltas))
