"""Differential evolution primitives shared by every engine

Operators are vectorized: ``i`` may be a single target index or an array of
targets, in which case ``F`` may be a matching array and one mutant row is
returned per target.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.core.errors import ArgumentError, StateError
from app.services.rng import RngState


@dataclass
class Individual:
    """Position vector and fitness (NaN while unevaluated)"""
    position: np.ndarray
    fitness: float = float("nan")

    @property
    def evaluated(self) -> bool:
        return not np.isnan(self.fitness)


class Population:
    """Ordered collection of positions (N, D) with their fitness values (N,)"""

    def __init__(self, positions, fitness=None):
        positions = np.array(positions, dtype=float, ndmin=2)
        if fitness is None:
            fitness = np.full(positions.shape[0], np.nan)
        fitness = np.array(fitness, dtype=float).reshape(-1)
        if fitness.size != positions.shape[0]:
            raise ArgumentError(
                f"population has {positions.shape[0]} positions but {fitness.size} fitness values"
            )
        self.positions = positions
        self.fitness = fitness

    @classmethod
    def from_individuals(cls, members: Sequence[Individual]) -> "Population":
        return cls(np.stack([m.position for m in members]), [m.fitness for m in members])

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def __len__(self) -> int:
        return self.size

    @property
    def best_index(self) -> int:
        """Index of the smallest evaluated fitness, lowest index on ties"""
        if np.all(np.isnan(self.fitness)):
            raise StateError("population has no evaluated members")
        return int(np.argmin(np.where(np.isnan(self.fitness), np.inf, self.fitness)))

    @property
    def best(self) -> Individual:
        return self.member(self.best_index)

    def member(self, index: int) -> Individual:
        return Individual(self.positions[index].copy(), float(self.fitness[index]))

    def ranked(self) -> np.ndarray:
        """Member indices from best to worst (unevaluated last)"""
        keys = np.where(np.isnan(self.fitness), np.inf, self.fitness)
        return np.argsort(keys, kind="stable")

    def subset(self, indices) -> "Population":
        indices = np.asarray(indices, dtype=int)
        return Population(self.positions[indices].copy(), self.fitness[indices].copy())

    def copy(self) -> "Population":
        return Population(self.positions.copy(), self.fitness.copy())


class Archive:
    """External archive of displaced parents; overflow is evicted uniformly at random"""

    def __init__(self, dim: int, capacity: int, ratio: float = 1.0, positions=None):
        if capacity < 0:
            raise ArgumentError(f"archive capacity must be >= 0, got {capacity}")
        self.dim = dim
        self.capacity = int(capacity)
        self.ratio = float(ratio)
        self.positions = (
            np.empty((0, dim)) if positions is None else np.array(positions, dtype=float, ndmin=2)
        )

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    def __len__(self) -> int:
        return self.size

    def add(self, positions, rng: RngState) -> "Archive":
        positions = np.asarray(positions, dtype=float).reshape(-1, self.dim)
        if positions.shape[0]:
            self.positions = np.vstack([self.positions, positions])
        self._evict(rng)
        return self

    def resize(self, capacity: int, rng: RngState) -> "Archive":
        self.capacity = max(0, int(capacity))
        self._evict(rng)
        return self

    def _evict(self, rng: RngState):
        overflow = self.size - self.capacity
        if overflow > 0:
            keep = np.sort(rng.choice(self.size, self.capacity, replace=False))
            self.positions = self.positions[keep]

    def copy(self) -> "Archive":
        return Archive(self.dim, self.capacity, self.ratio, self.positions.copy())


def uniform_positions(rng: RngState, n: int, lower, upper) -> np.ndarray:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return lower + (upper - lower) * rng.random((n, lower.size))


# Index sampling
def draw_excluding(rng: RngState, upper: int, excluded: np.ndarray) -> np.ndarray:
    """
    Uniform draw from {0..upper-1} minus the excluded indices of each row

    Args:
        rng: Generator
        upper: Pool size
        excluded: (n, k) array of pairwise distinct indices per row

    Returns:
        (n,) indices, each outside its row's excluded set
    """
    excluded = np.sort(np.atleast_2d(excluded), axis=1)
    n, k = excluded.shape
    if upper - k < 1:
        raise StateError(f"cannot draw from a pool of {upper} while excluding {k} indices")
    draws = rng.integers(0, upper - k, n)
    # shift past each excluded index in ascending order
    for column in range(k):
        draws = draws + (draws >= excluded[:, column])
    return draws


def _targets(i) -> Tuple[np.ndarray, bool]:
    targets = np.atleast_1d(np.asarray(i, dtype=int))
    return targets, np.ndim(i) == 0


def _column(F, n: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(F, dtype=float).reshape(-1), (n,))[:, None]


# Mutation
def mutate_rand_1(pop: Population, i, F, rng: RngState) -> np.ndarray:
    """v = x_r1 + F (x_r2 - x_r3), r1, r2, r3 distinct and different from i"""
    if pop.size < 4:
        raise StateError(f"rand/1 mutation needs at least 4 members, population has {pop.size}")
    targets, single = _targets(i)
    r1 = draw_excluding(rng, pop.size, targets[:, None])
    r2 = draw_excluding(rng, pop.size, np.column_stack([targets, r1]))
    r3 = draw_excluding(rng, pop.size, np.column_stack([targets, r1, r2]))
    x = pop.positions
    mutants = x[r1] + _column(F, targets.size) * (x[r2] - x[r3])
    return mutants[0] if single else mutants


def mutate_best_1(pop: Population, i, F, rng: RngState) -> np.ndarray:
    """v = x_best + F (x_r1 - x_r2), r1 != r2, both different from i"""
    if pop.size < 3:
        raise StateError(f"best/1 mutation needs at least 3 members, population has {pop.size}")
    targets, single = _targets(i)
    r1 = draw_excluding(rng, pop.size, targets[:, None])
    r2 = draw_excluding(rng, pop.size, np.column_stack([targets, r1]))
    x = pop.positions
    mutants = x[pop.best_index] + _column(F, targets.size) * (x[r1] - x[r2])
    return mutants[0] if single else mutants


def pbest_pool_size(p: float, n: int) -> int:
    """ceil(p N), at least 2 and at most N"""
    return min(n, max(2, int(np.ceil(p * n))))


def mutate_current_to_pbest(
    pop: Population,
    archive: Optional[Archive],
    i,
    F,
    F_w: float = 1.0,
    p: float = 0.11,
    rng: Optional[RngState] = None,
    donors: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """
    Weighted current-to-pbest/1 mutation

    v = x_i + F_w F (x_pbest - x_i) + F (x_r1 - x_r2), where x_pbest is drawn
    from the ceil(p N) best members (at least 2), r1 from the population and
    r2 from the population joined with the archive. F_w = 1 gives plain current-to-pbest.

    Args:
        pop: Current population
        archive: External archive (may be None or empty)
        i: Target index or array of target indices
        F: Scale factor(s)
        F_w: Weight on the pbest attraction term
        p: Fraction of the population forming the pbest pool, in (0, 1]
        rng: Generator used to draw donors
        donors: Precomputed (pbest, r1, r2) indices; r2 >= N addresses the archive

    Returns:
        Mutant vector(s)
    """
    if not 0 < p <= 1:
        raise ArgumentError(f"p must lie in (0, 1], got {p}")
    if pop.size < 3:
        raise StateError(f"current-to-pbest mutation needs at least 3 members, population has {pop.size}")
    targets, single = _targets(i)
    archived = archive.positions if archive is not None else np.empty((0, pop.dim))
    pool = np.vstack([pop.positions, archived]) if archived.shape[0] else pop.positions

    if donors is None:
        pool_size = pbest_pool_size(p, pop.size)
        ranked = pop.ranked()[:pool_size]
        if ranked.size == 0:
            raise StateError("pbest pool is empty")
        pbest = ranked[rng.integers(0, ranked.size, targets.size)]
        r1 = draw_excluding(rng, pop.size, targets[:, None])
        r2 = draw_excluding(rng, pool.shape[0], np.column_stack([targets, r1]))
    else:
        pbest, r1, r2 = (np.atleast_1d(np.asarray(d, dtype=int)) for d in donors)

    x = pop.positions
    scale = _column(F, targets.size)
    current = x[targets]
    mutants = current + F_w * scale * (x[pbest] - current) + scale * (x[r1] - pool[r2])
    return mutants[0] if single else mutants


# Crossover, repair, selection
def crossover_binomial(parent, mutant, CR, rng: RngState) -> np.ndarray:
    """Take each coordinate from the mutant when rand < CR or j = j_rand, else from the parent"""
    parent = np.asarray(parent, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if parent.shape != mutant.shape:
        raise ArgumentError(f"parent {parent.shape} and mutant {mutant.shape} differ in shape")
    cr = np.asarray(CR, dtype=float)
    if np.any((cr < 0) | (cr > 1)) or np.any(np.isnan(cr)):
        raise ArgumentError("CR must lie in [0, 1]")

    single = parent.ndim == 1
    parents = np.atleast_2d(parent)
    mutants = np.atleast_2d(mutant)
    n, d = parents.shape
    mask = rng.random((n, d)) < np.broadcast_to(cr.reshape(-1), (n,))[:, None]
    j_rand = rng.integers(0, d, n)
    mask[np.arange(n), j_rand] = True
    trials = np.where(mask, mutants, parents)
    return trials[0] if single else trials


def repair_bounds(trial, parent, lower, upper) -> np.ndarray:
    """Move every violated coordinate to the midpoint between the parent and the violated bound"""
    trial = np.asarray(trial, dtype=float)
    parent = np.asarray(parent, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    repaired = np.where(trial < lower, (parent + lower) / 2.0, trial)
    repaired = np.where(repaired > upper, (parent + upper) / 2.0, repaired)
    return repaired


def greedy_mask(parent_fitness, trial_fitness) -> Tuple[np.ndarray, np.ndarray]:
    """(survives, improved): trial survives when f(u) <= f(x) and improves when f(u) < f(x)"""
    parent_fitness = np.asarray(parent_fitness, dtype=float)
    trial_fitness = np.asarray(trial_fitness, dtype=float)
    if np.any(np.isnan(parent_fitness)) or np.any(np.isnan(trial_fitness)):
        raise StateError("selection requires evaluated parents and trials")
    return trial_fitness <= parent_fitness, trial_fitness < parent_fitness


def select_greedy(parent: Individual, trial: Individual) -> Tuple[Individual, bool, Optional[Individual]]:
    """
    One-to-one survivor selection

    Returns:
        (survivor, improved, displaced) where displaced is the parent when the
        trial strictly improves on it
    """
    if not parent.evaluated or not trial.evaluated:
        raise StateError("selection requires evaluated parent and trial")
    survives, improved = greedy_mask(parent.fitness, trial.fitness)
    if not survives:
        return parent, False, None
    return trial, bool(improved), parent if improved else None
