"""End-to-end orchestration: correlations -> experts -> weight search -> soup.

Every intermediate is retained in the run report so a soup can be audited
and reproduced from the report alone.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .errors import ValidationError
from .evaluator import macro_average
from .scores import (
    CorrelationMatrix,
    ScoreMatrix,
    category_correlations,
    low_correlation_categories,
    DEFAULT_TAU,
)
from .selection import ExpertAssignment, select_experts
from .souping import soup_recipe
from .weightgrid import Recipe, SearchResult, optimize_weights


@dataclass(frozen=True)
class SoceRun:
    tau: float
    status: str  # "ok", "single_expert", or "degenerate_no_weak_correlation"
    correlations: CorrelationMatrix
    low_correlation_set: tuple[str, ...]
    assignment: ExpertAssignment | None
    search: SearchResult | None
    recipe: Recipe
    final_scores: dict[str, float]
    final_objective: float
    evaluation_count: int
    elapsed_seconds: float
    soup_path: str | None = None
    grid_params: dict = field(default_factory=dict)

    def to_report(self) -> dict:
        return {
            "tau": self.tau,
            "status": self.status,
            "grid": dict(self.grid_params),
            "correlations": {
                "categories": list(self.correlations.category_ids),
                "matrix": self.correlations.to_lists(),
            },
            "low_correlation_set": list(self.low_correlation_set),
            "assignment": (
                self.assignment.to_report(list(self.low_correlation_set))
                if self.assignment
                else None
            ),
            "search": self.search.to_report() if self.search else None,
            "recipe": self.recipe.to_json(),
            "final_scores": dict(self.final_scores),
            "final_objective": self.final_objective,
            # elapsed_seconds stays off the report: report bytes must be
            # identical across reruns on identical inputs.
            "evaluation_count": self.evaluation_count,
            "soup_path": self.soup_path,
        }


def _best_macro_model(scores: ScoreMatrix) -> str:
    macros = scores.values.mean(axis=1)
    return scores.model_ids[int(np.argmax(macros))]


def run_soce(
    scores: ScoreMatrix,
    evaluator,
    tau: float = DEFAULT_TAU,
    step: Fraction = Fraction(1, 10),
    min_w: Fraction = Fraction(1, 10),
    max_w: Fraction = Fraction(9, 10),
    checkpoints: dict | None = None,
    soup_out=None,
) -> SoceRun:
    """Execute the four pipeline steps and return the full run record.

    When no weakly correlated categories exist the run degenerates,
    explicitly, to the single best macro-average model at weight 1; a
    single surviving expert likewise short-circuits the grid search.
    """
    t0 = time.perf_counter()
    correlations = category_correlations(scores)
    low_set = low_correlation_categories(correlations, tau)

    assignment = None
    search = None
    if not low_set:
        status = "degenerate_no_weak_correlation"
        recipe = Recipe(((_best_macro_model(scores), Fraction(1)),))
    else:
        assignment = select_experts(scores, low_set)
        if len(assignment.experts) == 1:
            status = "single_expert"
            recipe = Recipe(((assignment.experts[0], Fraction(1)),))
        else:
            status = "ok"
            search = optimize_weights(
                assignment.experts, evaluator.evaluate, step=step, min_w=min_w, max_w=max_w
            )
            recipe = search.best

    final_scores = evaluator.evaluate(recipe)
    final_objective = macro_average(final_scores)

    soup_path = None
    if soup_out is not None:
        if checkpoints is None:
            raise ValidationError("soup_out requires checkpoints")
        souped = soup_recipe(recipe, {m: checkpoints[m] for m in recipe.model_ids})
        save_checkpoint(souped, soup_out)
        soup_path = str(Path(soup_out))

    return SoceRun(
        tau=tau,
        status=status,
        correlations=correlations,
        low_correlation_set=tuple(low_set),
        assignment=assignment,
        search=search,
        recipe=recipe,
        final_scores=final_scores,
        final_objective=final_objective,
        evaluation_count=getattr(evaluator, "evaluation_count", 0),
        elapsed_seconds=time.perf_counter() - t0,
        soup_path=soup_path,
        grid_params={
            "step": str(step),
            "min_weight": str(min_w),
            "max_weight": str(max_w),
        },
    )


def run_uniform_baselines(
    scores: ScoreMatrix,
    evaluator,
    tau: float = DEFAULT_TAU,
    step: Fraction = Fraction(1, 10),
    min_w: Fraction = Fraction(1, 10),
    max_w: Fraction = Fraction(9, 10),
) -> dict:
    """The ablation triple: uniform-all vs uniform-selected vs full SoCE."""
    run = run_soce(scores, evaluator, tau=tau, step=step, min_w=min_w, max_w=max_w)

    uniform_all = Recipe.uniform(scores.model_ids)
    all_scores = evaluator.evaluate(uniform_all)

    selected = run.assignment.experts if run.assignment else run.recipe.model_ids
    uniform_selected = Recipe.uniform(selected)
    selected_scores = evaluator.evaluate(uniform_selected)

    return {
        "uniform_all": {
            "recipe": uniform_all.to_json(),
            "scores": all_scores,
            "objective": macro_average(all_scores),
        },
        "uniform_selected": {
            "recipe": uniform_selected.to_json(),
            "scores": selected_scores,
            "objective": macro_average(selected_scores),
        },
        "soce": {
            "recipe": run.recipe.to_json(),
            "scores": run.final_scores,
            "objective": run.final_objective,
        },
        "run": run.to_report(),
    }
