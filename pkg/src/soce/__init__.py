"""SoCE: correlation-aware model selection, weight search, and souping."""

from .errors import CompatibilityError, EvaluatorError, SoceError, ValidationError
from .scores import (
    CorrelationMatrix,
    ScoreMatrix,
    category_correlations,
    load_scores,
    low_correlation_categories,
    mean_offdiagonal,
    pearson,
)
from .selection import ExpertAssignment, select_experts
from .weightgrid import Recipe, SearchResult, generate_grid, optimize_weights, with_equal_case
from .checkpoint import TensorEntry, TensorMap, load_checkpoint, save_checkpoint
from .souping import CompatibilityReport, check_compatible, soup, soup_recipe
from .evaluator import (
    SubprocessRecipeEvaluator,
    SyntheticLandscape,
    SyntheticRecipeEvaluator,
    evaluate_subprocess,
    evaluate_synthetic,
    macro_average,
)
from .shapley import CooperativeGame, ShapleyReport, shapley_permutation, shapley_subset, souping_game
from .analysis import (
    TaskOutcomes,
    category_gains,
    correlation_shift,
    new_solve_rate,
    retention_rate,
    single_failure_completion,
)
from .pipeline import SoceRun, run_soce, run_uniform_baselines

__version__ = "0.1.0"
