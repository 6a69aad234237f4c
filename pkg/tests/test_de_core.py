import itertools

import numpy as np
import pytest

from app.core.errors import ArgumentError, StateError
from app.services.de_core import (
    Archive,
    Individual,
    Population,
    crossover_binomial,
    draw_excluding,
    mutate_best_1,
    mutate_current_to_pbest,
    mutate_rand_1,
    pbest_pool_size,
    repair_bounds,
    select_greedy,
)
from app.services.rng import seed_rng


def test_best_index_prefers_lowest_index_on_ties():
    pop = Population(np.zeros((4, 2)), [3.0, 1.0, 1.0, 2.0])
    assert pop.best_index == 1


def test_best_index_ignores_unevaluated():
    pop = Population(np.zeros((3, 2)), [np.nan, 5.0, np.nan])
    assert pop.best_index == 1
    with pytest.raises(StateError):
        Population(np.zeros((2, 2))).best_index


def test_population_shape_mismatch():
    with pytest.raises(ArgumentError):
        Population(np.zeros((3, 2)), [1.0, 2.0])


def test_archive_capacity_and_eviction(rng):
    archive = Archive(2, capacity=5)
    archive.add(np.arange(16, dtype=float).reshape(8, 2), rng)
    assert archive.size == 5
    archive.resize(2, rng)
    assert archive.size == 2


def test_draw_excluding_never_hits_excluded(rng):
    excluded = np.array([[0, 3], [2, 4], [1, 5]] * 200)
    draws = draw_excluding(rng, 6, excluded)
    assert not np.any(draws == excluded[:, 0])
    assert not np.any(draws == excluded[:, 1])
    assert set(draws[excluded[:, 0] == 0]) == {1, 2, 4, 5}


def test_draw_excluding_empty_pool(rng):
    with pytest.raises(StateError):
        draw_excluding(rng, 2, np.array([[0, 1]]))


def test_rand_1_zero_scale_returns_donor(rng):
    pop = Population(np.arange(10, dtype=float).reshape(5, 2), np.arange(5.0))
    mutant = mutate_rand_1(pop, 2, 0.0, rng)
    rows = [tuple(r) for i, r in enumerate(pop.positions) if i != 2]
    assert tuple(mutant) in rows


def test_rand_1_hand_value():
    positions = np.array([[5.0, 5.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    pop = Population(positions, np.zeros(4))
    expected = {
        tuple(positions[a] + 0.5 * (positions[b] - positions[c]))
        for a, b, c in itertools.permutations([1, 2, 3])
    }
    seen = set()
    for seed in range(60):
        mutant = tuple(mutate_rand_1(pop, 0, 0.5, seed_rng(seed)))
        assert mutant in expected
        seen.add(mutant)
    assert (0.5, -0.5) in seen


def test_rand_1_needs_four_members(rng):
    with pytest.raises(StateError):
        mutate_rand_1(Population(np.zeros((3, 2)), np.zeros(3)), 0, 0.5, rng)


def test_best_1_zero_scale(rng):
    pop = Population(np.arange(10, dtype=float).reshape(5, 2), [4.0, 3.0, 0.5, 2.0, 1.0])
    assert np.array_equal(mutate_best_1(pop, 0, 0.0, rng), pop.positions[2])


def test_best_1_hand_value():
    positions = np.array([[7.0, 7.0], [1.0, 1.0], [3.0, 1.0]])
    pop = Population(positions, [5.0, 0.0, 2.0])
    seen = set()
    for seed in range(30):
        mutant = tuple(mutate_best_1(pop, 0, 0.5, seed_rng(seed)))
        assert mutant in {(2.0, 1.0), (0.0, 1.0)}
        seen.add(mutant)
    assert (2.0, 1.0) in seen


def test_vectorized_targets_exclude_themselves(rng):
    pop = Population(np.eye(6) * np.arange(1, 7)[:, None], np.arange(6.0))
    mutants = mutate_rand_1(pop, np.arange(6), 0.0, rng)
    for i, m in enumerate(mutants):
        assert not np.array_equal(m, pop.positions[i])


def test_pbest_zero_scale_returns_target(rng):
    pop = Population(rng.uniform(-1, 1, (8, 3)), np.arange(8.0))
    archive = Archive(3, 8, positions=rng.uniform(-1, 1, (4, 3)))
    mutant = mutate_current_to_pbest(pop, archive, 5, 0.0, F_w=1.2, p=0.25, rng=rng)
    assert np.allclose(mutant, pop.positions[5])


def test_pbest_pool_holds_at_least_two(rng):
    pop = Population(rng.uniform(-1, 1, (8, 2)), [0.0, 1, 2, 3, 4, 5, 6, 7])
    mutant = mutate_current_to_pbest(pop, None, 0, 0.5, F_w=1.0, p=1 / 8, rng=seed_rng(3))
    # replay the donor draws; p N = 1 still leaves the two best in the pool
    replay = seed_rng(3)
    pbest = replay.integers(0, 2, 1)[0]
    r1 = draw_excluding(replay, 8, np.array([[0]]))[0]
    r2 = draw_excluding(replay, 8, np.array([[0, r1]]))[0]
    x = pop.positions
    expected = x[0] + 0.5 * (x[pbest] - x[0]) + 0.5 * (x[r1] - x[r2])
    assert np.allclose(mutant, expected)


def test_pbest_hand_value_with_fixed_donors():
    positions = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    pop = Population(positions, np.zeros(4))
    mutant = mutate_current_to_pbest(pop, None, 0, 0.5, F_w=1.2, p=0.5, donors=(1, 2, 3))
    assert np.allclose(mutant, [0.6, 0.5])


def test_pbest_donor_from_archive():
    pop = Population(np.zeros((3, 2)), np.zeros(3))
    archive = Archive(2, 2, positions=[[2.0, -2.0]])
    mutant = mutate_current_to_pbest(pop, archive, 0, 1.0, p=1.0, donors=(1, 2, 3))
    assert np.allclose(mutant, [-2.0, 2.0])


def test_pbest_rejects_bad_fraction(rng):
    pop = Population(np.zeros((4, 2)), np.zeros(4))
    with pytest.raises(ArgumentError):
        mutate_current_to_pbest(pop, None, 0, 0.5, p=0.0, rng=rng)


def test_pbest_pool_size():
    assert pbest_pool_size(0.25, 100) == 25
    assert pbest_pool_size(0.25, 10) == 3
    assert pbest_pool_size(0.01, 10) == 2
    assert pbest_pool_size(0.5, 3) == 2
    assert pbest_pool_size(0.9, 2) == 2


def test_crossover_full_rate(rng):
    parent, mutant = np.zeros(5), np.ones(5)
    assert np.array_equal(crossover_binomial(parent, mutant, 1.0, rng), mutant)


def test_crossover_zero_rate_takes_one_coordinate(rng):
    parents, mutants = np.zeros((50, 6)), np.ones((50, 6))
    trials = crossover_binomial(parents, mutants, 0.0, rng)
    assert np.all(trials.sum(axis=1) == 1)


def test_crossover_one_dimension(rng):
    assert crossover_binomial([0.0], [3.0], 0.0, rng)[0] == 3.0


@pytest.mark.parametrize("cr", [-0.1, 1.5])
def test_crossover_rate_out_of_range(rng, cr):
    with pytest.raises(ArgumentError):
        crossover_binomial(np.zeros(3), np.ones(3), cr, rng)


def test_repair_bounds():
    lower, upper = np.zeros(3), np.ones(3)
    assert np.array_equal(repair_bounds([0.1, 0.5, 0.9], [0.4, 0.4, 0.8], lower, upper), [0.1, 0.5, 0.9])
    repaired = repair_bounds([-3.0, 0.5, 7.0], [0.4, 0.4, 0.8], lower, upper)
    assert np.allclose(repaired, [0.2, 0.5, 0.9])


def test_selection_rules():
    parent = Individual(np.zeros(2), 2.0)
    survivor, improved, displaced = select_greedy(parent, Individual(np.ones(2), 1.0))
    assert survivor.fitness == 1.0 and improved and displaced is parent

    survivor, improved, displaced = select_greedy(parent, Individual(np.ones(2), 2.0))
    assert survivor.fitness == 2.0 and np.array_equal(survivor.position, np.ones(2))
    assert not improved and displaced is None

    survivor, improved, displaced = select_greedy(parent, Individual(np.ones(2), 3.0))
    assert survivor is parent and not improved and displaced is None


def test_selection_needs_evaluated_inputs():
    with pytest.raises(StateError):
        select_greedy(Individual(np.zeros(2)), Individual(np.zeros(2), 1.0))
