import numpy as np
import pytest

from soce import (
    ScoreMatrix,
    TaskOutcomes,
    ValidationError,
    category_gains,
    correlation_shift,
    new_solve_rate,
    retention_rate,
    single_failure_completion,
)


def outcomes(per_model):
    n = len(next(iter(per_model.values())))
    return TaskOutcomes(tuple(f"t{i}" for i in range(n)), per_model)


def random_outcomes(rng, n_tasks, model_ids):
    return outcomes({m: rng.random(n_tasks) < 0.5 for m in model_ids})


class TestRetention:
    def test_full_retention(self):
        o = outcomes({"soup": [1, 1, 1], "cand": [1, 0, 1]})
        assert retention_rate(o, "soup", "cand") == 1.0

    def test_half_retention(self):
        o = outcomes({"soup": [1, 0], "cand": [1, 1]})
        assert retention_rate(o, "soup", "cand") == 0.5

    def test_zero_solver_rejected(self):
        o = outcomes({"soup": [1], "cand": [0]})
        with pytest.raises(ValidationError, match="zero tasks"):
            retention_rate(o, "soup", "cand")

    def test_matches_set_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            o = random_outcomes(rng, 10, ["soup", "cand"])
            cand_solved = {t for t, ok in zip(o.task_ids, o.solved("cand")) if ok}
            if not cand_solved:
                continue
            soup_solved = {t for t, ok in zip(o.task_ids, o.solved("soup")) if ok}
            expected = len(soup_solved & cand_solved) / len(cand_solved)
            assert retention_rate(o, "soup", "cand") == pytest.approx(expected)


class TestNewSolve:
    def test_no_new_solves(self):
        o = outcomes({"soup": [0, 1], "c1": [0, 1], "c2": [0, 0]})
        rate, solved, universe = new_solve_rate(o, "soup", ["c1", "c2"])
        assert (rate, solved, universe) == (0.0, 0, 1)

    def test_constructed_380_task_fixture(self):
        # 380 tasks failed by every candidate, 32 of them solved by the soup.
        n = 400
        c_fail = np.zeros(n, dtype=bool)
        c_fail[:380] = False  # candidates fail the first 380
        cand = np.ones(n, dtype=bool)
        cand[:380] = False
        soup = np.zeros(n, dtype=bool)
        soup[:32] = True
        o = outcomes({"soup": soup, "c1": cand, "c2": cand, "c3": cand})
        rate, solved, universe = new_solve_rate(o, "soup", ["c1", "c2", "c3"])
        assert (solved, universe) == (32, 380)
        assert rate == pytest.approx(32 / 380)
        assert rate == pytest.approx(0.0842, abs=5e-5)

    def test_empty_universe(self):
        o = outcomes({"soup": [1], "c1": [1]})
        with pytest.raises(ValidationError):
            new_solve_rate(o, "soup", ["c1"])

    def test_matches_counting_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            o = random_outcomes(rng, 30, ["soup", "c1", "c2", "c3"])
            all_fail = [
                i
                for i in range(30)
                if not any(o.solved(c)[i] for c in ("c1", "c2", "c3"))
            ]
            if not all_fail:
                continue
            expected_solved = sum(1 for i in all_fail if o.solved("soup")[i])
            rate, solved, universe = new_solve_rate(o, "soup", ["c1", "c2", "c3"])
            assert universe == len(all_fail)
            assert solved == expected_solved


class TestSingleFailure:
    def test_soup_rescues_all(self):
        o = outcomes({"soup": [1, 1], "c1": [0, 1], "c2": [1, 0]})
        assert single_failure_completion(o, "soup", ["c1", "c2"]) == 1.0

    def test_nine_of_ten(self):
        soup = [1] * 9 + [0]
        c1 = [0] * 10  # c1 fails everywhere
        c2 = [1] * 10
        o = outcomes({"soup": soup, "c1": c1, "c2": c2})
        assert single_failure_completion(o, "soup", ["c1", "c2"]) == 0.9

    def test_exactly_one_not_at_least_one(self):
        # Both candidates failing must not enter the universe.
        o = outcomes({"soup": [1, 1], "c1": [0, 0], "c2": [0, 1]})
        assert single_failure_completion(o, "soup", ["c1", "c2"]) == 1.0

    def test_matches_filter_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            o = random_outcomes(rng, 40, ["soup", "c1", "c2", "c3"])
            cands = ("c1", "c2", "c3")
            universe = [
                i
                for i in range(40)
                if sum(not o.solved(c)[i] for c in cands) == 1
            ]
            if not universe:
                continue
            expected = sum(1 for i in universe if o.solved("soup")[i]) / len(universe)
            assert single_failure_completion(o, "soup", list(cands)) == pytest.approx(expected)


class TestRatesInRange:
    def test_all_rates_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            o = random_outcomes(rng, 380, ["soup", "c1", "c2", "c3"])
            cands = ["c1", "c2", "c3"]
            if o.solved("c1").sum():
                assert 0 <= retention_rate(o, "soup", "c1") <= 1
            try:
                rate, _, _ = new_solve_rate(o, "soup", cands)
                assert 0 <= rate <= 1
            except ValidationError:
                pass
            try:
                assert 0 <= single_failure_completion(o, "soup", cands) <= 1
            except ValidationError:
                pass


class TestCorrelationShift:
    def test_identical_matrices_zero_delta(self):
        rng = np.random.default_rng(4)
        m = ScoreMatrix(
            [f"M{i}" for i in range(4)], list("ABC"), rng.uniform(0, 100, (4, 3))
        )
        report = correlation_shift(m, m)
        assert report.delta == 0.0
        for pre, post in report.per_pair.values():
            assert pre == post

    def test_constructed_delta_of_one(self):
        # pre columns orthogonal-ish (rho 0), post columns identical (rho 1).
        pre = ScoreMatrix(
            ["M1", "M2", "M3"], ["A", "B"], [[1, 1], [2, 1 + np.sqrt(3)], [3, 1]]
        )
        post = ScoreMatrix(["M1", "M2", "M3"], ["A", "B"], [[1, 1], [2, 2], [3, 3]])
        report = correlation_shift(pre, post)
        assert report.pre_mean == pytest.approx(0.0, abs=1e-12)
        assert report.post_mean == pytest.approx(1.0, abs=1e-12)
        assert report.delta == pytest.approx(1.0, abs=1e-12)

    def test_category_mismatch(self):
        a = ScoreMatrix(["M1", "M2"], ["A"], [[1], [2]])
        b = ScoreMatrix(["M1", "M2"], ["B"], [[1], [2]])
        with pytest.raises(ValidationError):
            correlation_shift(a, b)

    def test_undefined_pairs_dropped_symmetrically(self):
        # Category B is constant pre-souping: pair (A,B) must vanish from both means.
        pre = ScoreMatrix(["M1", "M2", "M3"], ["A", "B", "C"],
                          [[1, 5, 1], [2, 5, 3], [3, 5, 2]])
        post = ScoreMatrix(["M1", "M2", "M3"], ["A", "B", "C"],
                           [[1, 1, 1], [2, 2, 2], [3, 3, 3]])
        report = correlation_shift(pre, post)
        assert set(report.per_pair) == {("A", "C")}

    def test_all_pairs_undefined(self):
        pre = ScoreMatrix(["M1", "M2"], ["A", "B"], [[1, 1], [1, 1]])
        post = ScoreMatrix(["M1", "M2"], ["A", "B"], [[1, 2], [2, 1]])
        with pytest.raises(ValidationError):
            correlation_shift(pre, post)


class TestCategoryGains:
    def test_identical(self):
        s = {c: 10.0 for c in "ABCD"}
        assert category_gains(s, dict(s)) == (0, 0, 4, 0.0)

    def test_uniform_improvement(self):
        cand = {c: 10.0 for c in "ABC"}
        soup = {c: 11.0 for c in "ABC"}
        assert category_gains(soup, cand) == (3, 0, 0, 1.0)

    def test_mixed_36_categories_matches_oracle(self):
        rng = np.random.default_rng(5)
        cats = [f"c{i}" for i in range(36)]
        cand = {c: float(rng.uniform(0, 100)) for c in cats}
        soup = {c: float(rng.uniform(0, 100)) for c in cats}
        improved, regressed, unchanged, mean_delta = category_gains(soup, cand)
        deltas = [soup[c] - cand[c] for c in cats]
        assert improved == sum(d > 0 for d in deltas)
        assert regressed == sum(d < 0 for d in deltas)
        assert improved + regressed + unchanged == 36
        assert mean_delta == pytest.approx(np.mean(deltas))

    def test_category_mismatch(self):
        with pytest.raises(ValidationError):
            category_gains({"A": 1.0}, {"B": 1.0})


def test_outcome_vector_length_validated():
    with pytest.raises(ValidationError):
        TaskOutcomes(("t1", "t2"), {"m": np.array([True])})


def test_duplicate_task_ids():
    with pytest.raises(ValidationError):
        TaskOutcomes(("t1", "t1"), {"m": np.array([True, False])})
