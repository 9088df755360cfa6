import numpy as np
import pytest

from soce import ScoreMatrix, ValidationError, select_experts


def matrix(rows, models=None, categories=None):
    rows = np.array(rows, dtype=float)
    models = models or [f"M{i + 1}" for i in range(rows.shape[0])]
    categories = categories or [chr(ord("A") + j) for j in range(rows.shape[1])]
    return ScoreMatrix(models, categories, rows)


def test_strict_maxima():
    m = matrix([[90, 10], [10, 90]])
    a = select_experts(m, ["A", "B"])
    assert a.per_category == {"A": "M1", "B": "M2"}
    assert a.experts == ("M1", "M2")


def test_tie_breaks_to_earlier_row():
    m = matrix([[50], [50]])
    assert select_experts(m, ["A"]).experts == ("M1",)


def test_dedupe_preserves_first_appearance():
    m = matrix([[90, 80], [10, 20]])
    a = select_experts(m, ["A", "B"])
    assert a.experts == ("M1",)
    assert a.per_category == {"A": "M1", "B": "M1"}


def test_expert_dominates_column():
    rng = np.random.default_rng(11)
    m = matrix(rng.uniform(0, 100, (6, 4)))
    a = select_experts(m, list(m.category_ids))
    for cat, expert in a.per_category.items():
        col = m.column(cat)
        assert m.row(expert)[m.category_ids.index(cat)] == col.max()


def test_dominated_model_never_changes_assignment():
    rng = np.random.default_rng(5)
    base = rng.uniform(10, 100, (4, 3))
    m1 = matrix(base)
    with_dominated = matrix(np.vstack([base, np.zeros((1, 3))]))
    assert select_experts(m1, ["A", "B", "C"]).per_category == select_experts(
        with_dominated, ["A", "B", "C"]
    ).per_category


def test_cardinality_bounds():
    rng = np.random.default_rng(2)
    m = matrix(rng.uniform(0, 100, (3, 5)))
    a = select_experts(m, list(m.category_ids))
    assert len(a.experts) <= len(m.category_ids)
    assert len(a.experts) <= len(m.model_ids)


def test_empty_set_rejected():
    with pytest.raises(ValidationError, match="no weakly-correlated"):
        select_experts(matrix([[1]]), [])


def test_unknown_category_rejected():
    with pytest.raises(ValidationError, match="unknown category"):
        select_experts(matrix([[1]]), ["Z"])


def test_report_shape():
    m = matrix([[90, 10], [10, 90]])
    a = select_experts(m, ["A", "B"])
    report = a.to_report(["A", "B"])
    assert report == {
        "low_correlation_set": ["A", "B"],
        "per_category": {"A": "M1", "B": "M2"},
        "experts": ["M1", "M2"],
    }
