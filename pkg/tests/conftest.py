import numpy as np
import pytest

from soce import ScoreMatrix, SyntheticLandscape, SyntheticRecipeEvaluator, evaluate_synthetic

# Analytic values of the 2-category Gaussian fixture (targets (1,0)/(0,1), sigma=1).
SCORE_AT_TARGET = 100.0
SCORE_OFF_TARGET = 100.0 * np.exp(-1.0)  # 36.7879...
SCORE_MIDPOINT = 100.0 * np.exp(-0.25)  # 77.8800...
MACRO_SINGLE = (SCORE_AT_TARGET + SCORE_OFF_TARGET) / 2.0  # 68.3939...
SCORE_FAR = 100.0 * np.exp(-2.5)  # both categories, for models at (2,2) / (-1,-1)


@pytest.fixture
def landscape():
    return SyntheticLandscape(
        dimension=2,
        categories=(("A", np.array([1.0, 0.0]), 1.0), ("B", np.array([0.0, 1.0]), 1.0)),
    )


# Candidate parameter vectors. M1/M2 sit on the category targets; M3/M4 are
# dominated models far from both targets. The far models are needed for the
# desk-scale leaderboard below: with only the two experts, the two category
# columns are perfectly anti-correlated (two points are always collinear) and
# the low-correlation set would be empty.
FIXTURE_PARAMS = {
    "M1": np.array([1.0, 0.0]),
    "M2": np.array([0.0, 1.0]),
    "M3": np.array([2.0, 2.0]),
    "M4": np.array([-1.0, -1.0]),
}


@pytest.fixture
def fixture_params():
    return dict(FIXTURE_PARAMS)


@pytest.fixture
def synthetic_evaluator(landscape, fixture_params):
    return SyntheticRecipeEvaluator(landscape, fixture_params)


def landscape_scores(landscape, params):
    model_ids = list(params)
    rows = [
        [evaluate_synthetic(landscape, params[m])[c] for c in landscape.category_ids]
        for m in model_ids
    ]
    return ScoreMatrix(model_ids, list(landscape.category_ids), np.array(rows))


@pytest.fixture
def fixture_scores(landscape, fixture_params):
    return landscape_scores(landscape, fixture_params)
