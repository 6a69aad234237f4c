import itertools

import numpy as np
import pytest
from scipy.stats import mannwhitneyu, rankdata

from app.core.errors import ArgumentError, DataError
from app.services.scoring import (
    Outcome,
    ResultsTable,
    accuracy_scores,
    cec2017_components,
    cec2017_score,
    cec2019_digits,
    cec2019_score,
    cec2020_components,
    cec2020_score,
    combined_scores,
    digit_count,
    exact_rank_sum_pvalue,
    friedman_ranks,
    mann_whitney_wtl,
    mean_ranks,
    min_ratio,
    rank_sum_pvalue,
    resolve_weights,
    score_table,
    wtl_table,
)


def table_of(errors, optima=100.0, dimensions=10):
    errors = np.asarray(errors, dtype=float)
    k, j, _ = errors.shape
    return ResultsTable([f"a{i}" for i in range(k)], [f"p{i}" for i in range(j)], errors, optima, dimensions)


def enumerated_pvalue(a, b):
    """Two-sided rank-sum p-value by listing every split of the pooled ranks"""
    doubled = np.rint(2 * rankdata(np.concatenate([a, b]))).astype(int)
    observed = doubled[: len(a)].sum()
    sums = [doubled[list(c)].sum() for c in itertools.combinations(range(len(doubled)), len(a))]
    sums = np.array(sums)
    p_less = np.mean(sums <= observed)
    p_greater = np.mean(sums >= observed)
    return min(1.0, 2 * min(p_less, p_greater))


# Results table

def test_error_floor():
    table = table_of([[[-1e-15, 5e-15, 1e-13]]])
    assert table.errors.tolist() == [[[0.0, 0.0, 1e-13]]]


def test_shape_validation():
    with pytest.raises(DataError):
        ResultsTable(["a"], ["p", "q"], np.zeros((1, 1, 3)), 100.0)
    with pytest.raises(DataError):
        ResultsTable(["a"], ["p"], np.zeros((1, 3)), 100.0)


def test_best_found_fallback():
    values = np.array([[[5.0, 6.0]], [[4.5, 9.0]]])
    table = ResultsTable.from_values(["a", "b"], ["p"], values, [np.nan])
    assert table.optima[0] == 4.5
    assert table.errors.min() == 0.0
    assert table.errors[0, 0].tolist() == [0.5, 1.5]


def test_unknown_algorithm():
    with pytest.raises(ArgumentError):
        table_of(np.zeros((2, 1, 3))).index("zzz")


# Friedman ranks

def test_full_tie_ranks():
    per_problem, overall = friedman_ranks(table_of(np.ones((4, 3, 5))))
    assert np.all(per_problem == 2.5) and np.all(overall == 2.5)


def test_tie_averaging():
    per_problem, _ = friedman_ranks(table_of([[[1.0]], [[2.0]], [[2.0]]]))
    assert per_problem[:, 0].tolist() == [1.0, 2.5, 2.5]


def test_rank_averaging_over_problems():
    _, overall = friedman_ranks(table_of([[[1.0], [3.0]], [[2.0], [1.0]], [[3.0], [2.0]]]))
    assert overall.tolist() == [2.0, 1.5, 2.5]


def test_friedman_against_oracle(rng):
    for _ in range(200):
        k, j, n = rng.integers(2, 5), rng.integers(1, 4), rng.integers(1, 6)
        errors = rng.integers(0, 4, (k, j, n)).astype(float)
        per_problem, overall = friedman_ranks(table_of(errors))
        expected = np.zeros((k, j))
        for p in range(j):
            for run in range(n):
                column = errors[:, p, run]
                for a in range(k):
                    below = np.sum(column < column[a])
                    equal = np.sum(column == column[a])
                    expected[a, p] += below + (equal + 1) / 2
        expected /= n
        assert np.allclose(per_problem, expected)
        assert np.allclose(overall, expected.mean(axis=1))


def test_rank_conservation_and_scale_invariance(rng):
    errors = rng.exponential(1.0, (5, 3, 7))
    errors[1, 0, :3] = errors[2, 0, :3]
    per_problem, _ = friedman_ranks(table_of(errors))
    assert np.allclose(per_problem.sum(axis=0), 5 * 6 / 2)

    scaled = errors.copy()
    scaled[:, 1, :] *= 1e6
    assert np.allclose(friedman_ranks(table_of(scaled))[0], per_problem)


# Rank-sum test

def test_exact_separated_small_samples():
    a, b = [1, 2, 3, 4, 5], [6, 7, 8, 9, 10]
    assert exact_rank_sum_pvalue(a, b) == pytest.approx(2 / 252)
    assert mann_whitney_wtl(a, b) == Outcome.WIN
    assert mann_whitney_wtl(b, a) == Outcome.LOSS


def test_identical_samples_tie():
    a = [0.5, 0.1, 0.3]
    assert rank_sum_pvalue(a, a) == pytest.approx(1.0)
    assert mann_whitney_wtl(a, a) == Outcome.TIE
    assert rank_sum_pvalue([0.0] * 51, [0.0] * 51) == 1.0


def test_large_separated_samples():
    a = np.arange(1, 52) / 52
    assert mann_whitney_wtl(a, a + 10) == Outcome.WIN


def test_exact_pvalue_against_enumeration(rng):
    for _ in range(40):
        n, m = int(rng.integers(1, 8)), int(rng.integers(1, 8))
        a = rng.integers(0, 5, n).astype(float)
        b = rng.integers(0, 5, m).astype(float)
        assert exact_rank_sum_pvalue(a, b) == pytest.approx(enumerated_pvalue(a, b))


def test_wtl_symmetry(rng):
    for _ in range(50):
        n = int(rng.integers(3, 30))
        a = rng.normal(0, 1, n)
        b = rng.normal(rng.uniform(-2, 2), 1, n)
        assert mann_whitney_wtl(a, b) == mann_whitney_wtl(b, a).mirror()


def test_normal_approximation_calibration(rng):
    for _ in range(30):
        a = rng.normal(0, 1, 15)
        b = rng.normal(rng.uniform(0, 1.5), 1, 15)
        approximate = mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True).pvalue
        assert abs(approximate - exact_rank_sum_pvalue(a, b)) < 0.02


def test_empty_sample():
    with pytest.raises(ArgumentError):
        rank_sum_pvalue([], [1.0])


def test_wtl_table():
    errors = np.stack([np.full((4, 10), 0.0), np.full((4, 10), 5.0) + np.arange(10)])
    errors[0] += np.arange(10) * 1e-3
    table = table_of(errors)
    counts = wtl_table(table, "a0")
    assert counts["a0"] == (0, 4, 0)
    assert counts["a1"] == (4, 0, 0)
    assert all(sum(c) == 4 for c in counts.values())
    assert wtl_table(table, "a1")["a0"] == (0, 0, 4)


# Accuracy and combined scores

def test_accuracy_examples():
    errors = np.zeros((3, 1, 2))
    errors[1] = 100.0
    errors[2] = 1e8
    eps, bounded, overall = accuracy_scores(table_of(errors))
    assert eps[:, 0].tolist() == [0.0, 1.0, 1e6]
    assert bounded[0, 0] == 0.0 and bounded[1, 0] == 0.5
    assert 0.999 < bounded[2, 0] < 1.0
    assert np.allclose(overall, bounded[:, 0])


def test_accuracy_negative_optimum():
    eps, _, _ = accuracy_scores(table_of(np.full((1, 1, 1), 50.0), optima=-100.0))
    assert eps[0, 0] == 0.5


def test_zero_optimum_is_rejected():
    with pytest.raises(DataError, match="p1"):
        accuracy_scores(table_of(np.ones((2, 2, 3)), optima=[100.0, 0.0]))


def test_min_ratio():
    assert min_ratio([2.0, 4.0, 2.0]).tolist() == [1.0, 0.5, 1.0]
    assert min_ratio([0.0, 1.0]).tolist() == [1.0, 0.0]


def test_combined_two_algorithms():
    scores = combined_scores({10: (np.array([1.0, 2.0]), np.array([1.0, 2.0]))}, {10: 1.0})
    assert scores.total.tolist() == [100.0, 50.0]
    assert np.array_equal(scores.total, scores.per_dimension[10])


def test_combined_weighted_sum():
    per_dim = {
        10: (np.array([0.2, 0.4]), np.array([1.0, 2.0])),
        20: (np.array([0.6, 0.2]), np.array([2.0, 1.0])),
    }
    scores = combined_scores(per_dim, {10: 0.1, 20: 0.2})
    assert scores.accuracy == pytest.approx([0.14, 0.08])
    assert scores.rank == pytest.approx([0.5, 0.4])
    assert scores.total.max() == 100.0


def test_split_winners_stay_below_100():
    scores = combined_scores({10: (np.array([1.0, 2.0]), np.array([2.0, 1.0]))}, {10: 1.0})
    assert scores.total.max() < 100.0


def test_combined_missing_weight():
    with pytest.raises(ArgumentError):
        combined_scores({10: (np.ones(2), np.ones(2)), 30: (np.ones(2), np.ones(2))}, {10: 1.0})


def test_resolve_weights():
    assert resolve_weights("desk", [10, 20]) == {10: 0.1, 20: 0.2}
    assert resolve_weights("cec2017", [30]) == {30: 0.2}
    assert resolve_weights("cec2011", [7, 13]) == {7: 1.0, 13: 1.0}
    assert resolve_weights({10: 2.0, 50: 1.0}, [10]) == {10: 2.0}
    with pytest.raises(ArgumentError):
        resolve_weights("desk", [30])
    with pytest.raises(ArgumentError):
        resolve_weights("nope", [10])


# Legacy scores

def test_cec2017_components():
    errors = np.zeros((2, 2, 5))
    errors[1, 0] = 2.0
    errors[0, 1] = 1.0
    errors[1, 1] = 2.0
    sums, _ = cec2017_components(table_of(errors))
    assert sums.tolist() == [5.0, 20.0]

    errors = np.array([[[10.0]], [[20.0]]])
    score = cec2017_score(table_of(errors))
    assert score.tolist() == [100.0, 50.0]


def test_cec2017_ranks_use_run_means():
    table = table_of([[[1.0, 1.0, 10.0]], [[2.0, 2.0, 2.0]]])
    assert mean_ranks(table).tolist() == [2.0, 1.0]
    _, runwise = friedman_ranks(table)
    assert runwise[0] < runwise[1]
    assert cec2017_components(table)[1].tolist() == [2.0, 1.0]


def test_cec2020_components():
    errors = np.zeros((2, 3, 3))
    errors[1, 0] = [4.0, 2.0, 3.0]
    errors[0, 1] = [3.0, 1.0, 5.0]
    errors[1, 1] = [3.0, 2.0, 5.0]
    normalized, _ = cec2020_components(table_of(errors))
    # problem 0: (0, 1); problem 1: (0.5, 1); problem 2 degenerate: (0, 0)
    assert normalized.tolist() == [0.5, 2.0]
    score = cec2020_score(table_of(errors))
    assert score[0] == 100.0
    assert score[1] == pytest.approx(50.0 * (0.25 + 7.0 / 11.0))


def test_digit_count():
    assert digit_count(0.0) == 10
    assert digit_count(0.5) == 0
    assert digit_count(0.9e-3) == 3
    assert digit_count(2e-3) == 2


def test_cec2019_digits():
    assert cec2019_digits([0.0] * 26 + [1.0] * 25) == 10.0
    assert cec2019_digits([0.5] * 25) == 0.0
    with pytest.raises(ArgumentError):
        cec2019_digits([0.0] * 24)


def test_cec2019_score_sums_problems():
    errors = np.zeros((2, 3, 25))
    errors[1] = 0.05
    assert cec2019_score(table_of(errors)).tolist() == [30.0, 3.0]


# Reports

def _two_dimension_table(rng):
    errors = np.concatenate([rng.uniform(0, 1, (3, 2, 6)), rng.uniform(0, 1, (3, 2, 6))], axis=1)
    errors[0] *= 1e-3
    errors[1:] += 0.01
    return table_of(errors, optima=100.0, dimensions=[10, 10, 20, 20])


def test_score_table(rng):
    table = _two_dimension_table(rng)
    report = score_table(table, "desk", reference="a0", legacy=["cec2017", "cec2020"])
    assert report.weights == {10: 0.1, 20: 0.2}
    assert [d.dim for d in report.dimensions] == [10, 20]
    assert report.combined.total[0] == 100.0
    assert np.sum(report.combined.total == 100.0) == 1
    assert np.all((report.combined.total > 0) & (report.combined.total <= 100))
    assert report.wtl["a0"] == (0, 4, 0)
    assert report.wtl["a1"][0] == 4
    assert set(report.legacy) == {"cec2017", "cec2020"}
    for scores in report.dimensions:
        assert sum(scores.wtl["a2"]) == 2


def test_score_table_relabeling(rng):
    table = _two_dimension_table(rng)
    order = [2, 0, 1]
    relabeled = ResultsTable(
        [table.algorithms[i] for i in order], table.problems, table.errors[order], table.optima, table.dimensions
    )
    original = score_table(table, "desk").combined.total
    permuted = score_table(relabeled, "desk").combined.total
    assert np.allclose(permuted, original[order])


def test_score_table_argument_errors(rng):
    table = _two_dimension_table(rng)
    with pytest.raises(ArgumentError):
        score_table(table, "desk", reference="missing")
    with pytest.raises(ArgumentError):
        score_table(table, "desk", legacy=["cec1999"])
    with pytest.raises(ArgumentError):
        score_table(table, "cec2017")
