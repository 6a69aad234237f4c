"""Adaptive restart-refine differential evolution (ARRDE)

The engine runs jSO-style generations on a nonlinearly shrinking population.
Whenever the population's fitness spread collapses (std/|mean| <= s_tol) the
population and memories are archived and the run either restarts away from
the archived regions or refines by resampling the archives. A final
refinement is forced once 90% of the budget is spent; the best-so-far point
is inserted into that population and into every refinement after it.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import ArgumentError, StateError
from app.core.logging_config import logger
from app.models.experiment import ARRDEConfig
from app.services.de_core import Archive, Individual, Population
from app.services.problems import Problem
from app.services.rng import RngState, latin_hypercube, seed_rng
from app.services.shade import (
    SuccessHistory,
    evolve_generation,
    fw_schedule,
    pbest_schedule,
    shrink_population,
)
from app.services.tracing import Evaluator, RunTrace


MIN_POPULATION = 4
INDICATOR_GUARD = 1e-12
Interval = Tuple[float, float]


# Schedules
def initial_population_size(dim: int, max_nfe: int) -> int:
    """
    Budget-aware initial population size N0

    eta = log10(max_nfe / D), clamped below at 2, and
    N0 = ceil(D * max(2, 2 + 5.756 (eta - 2)^1.609)), at least 4.
    """
    if dim < 1 or max_nfe < 1:
        raise ArgumentError(f"dimension and budget must be positive, got D={dim}, max_nfe={max_nfe}")
    eta = max(math.log10(max_nfe / dim), 2.0)
    multiplier = max(2.0, 2.0 + 5.756 * (eta - 2.0) ** 1.609)
    return max(MIN_POPULATION, math.ceil(dim * multiplier))


def reduction_exponent(dim: int) -> float:
    if dim < 1:
        raise ArgumentError(f"dimension must be >= 1, got {dim}")
    return 1.17 + 2.075 * math.exp(-0.0567 * dim)


def minimum_population(dim: int) -> int:
    return max(MIN_POPULATION, math.ceil(dim / 2))


def target_population_size(t: float, n0: int, dim: int, r: Optional[float] = None, refine_at: float = 0.9) -> int:
    """
    Scheduled population size at progress t

    Up to refine_at the size decays from N0 to D/2 with exponent r; after it
    the schedule restarts from N0/4 and decays quadratically back to D/2.
    Values are rounded half up and floored at max(4, ceil(D/2)).
    """
    t = min(max(t, 0.0), 1.0)
    r = reduction_exponent(dim) if r is None else r
    half = dim / 2.0
    if t <= refine_at:
        value = n0 - (n0 - half) * (1.0 - ((refine_at - t) / refine_at) ** r)
    else:
        quarter = n0 / 4.0
        value = quarter - (quarter - half) * (1.0 - ((1.0 - t) / (1.0 - refine_at)) ** 2)
    return max(minimum_population(dim), int(math.floor(value + 0.5)))


def convergence_indicator(fitnesses) -> float:
    """std(f) / max(|mean(f)|, 1e-12 (1 + std(f))), population std; inf if any value is not finite"""
    values = np.asarray(fitnesses, dtype=float).reshape(-1)
    if values.size < 2:
        raise ArgumentError(f"convergence indicator needs at least 2 values, got {values.size}")
    if not np.all(np.isfinite(values)):
        return math.inf
    std = float(np.std(values))
    mean = float(np.mean(values))
    return std / max(abs(mean), INDICATOR_GUARD * (1.0 + std))


def max_restarts(t: float) -> float:
    return 2.0 + 3.0 * t


# State
class Phase(str, Enum):
    FIRST_CYCLE = "first_cycle"
    SEARCH = "search"
    POST_RESTART = "post_restart"
    POST_REFINE = "post_refine"


class Decision(str, Enum):
    RESTART = "restart"
    REFINE = "refine"


@dataclass(frozen=True, eq=False)
class ArchiveSnapshot:
    """Frozen copy of a population, its fitness and the memories at a trigger"""
    positions: np.ndarray
    fitness: np.ndarray
    memory: SuccessHistory

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float, ndmin=2)
        fitness = np.array(self.fitness, dtype=float).reshape(-1)
        positions.setflags(write=False)
        fitness.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "fitness", fitness)


@dataclass(frozen=True)
class ExclusionSet:
    """Per-dimension sorted, disjoint closed intervals"""
    intervals: Tuple[Tuple[Interval, ...], ...]

    @classmethod
    def empty(cls, dim: int) -> "ExclusionSet":
        return cls(tuple(() for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.intervals)

    def contains(self, d: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals[d]:
            inside |= (x >= lo) & (x <= hi)
        return inside


@dataclass(frozen=True)
class ArrdeState:
    phase: Phase = Phase.FIRST_CYCLE
    refine_flag: bool = False
    consecutive_restarts: int = 0
    improved_since_cycle: bool = False
    restart_archives: Tuple[ArchiveSnapshot, ...] = ()
    exclusion: Optional[ExclusionSet] = None
    s_tol: float = 0.005
    best_at_cycle_start: float = math.inf


def decide_phase(state: ArrdeState, t: float) -> Decision:
    """
    Restart or refine at a trigger

    Refine when the final refinement is mandated. Otherwise restart when the
    run is in its first cycle, the previous cycle was a refinement, or the
    cycle produced no new global best, provided fewer than
    floor(2 + 3t) consecutive restarts have happened; refine otherwise.
    """
    if state.refine_flag:
        return Decision.REFINE
    wants_restart = (
        state.phase == Phase.FIRST_CYCLE
        or state.phase == Phase.POST_REFINE
        or not state.improved_since_cycle
    )
    if wants_restart and state.consecutive_restarts < math.floor(max_restarts(t)):
        return Decision.RESTART
    return Decision.REFINE


def snapshot_to_archives(state: ArrdeState, pop: Population, memory: SuccessHistory) -> ArrdeState:
    snapshot = ArchiveSnapshot(pop.positions.copy(), pop.fitness.copy(), memory)
    return replace(state, restart_archives=state.restart_archives + (snapshot,))


# Exclusion intervals
def merge_intervals(intervals: Sequence[Interval]) -> Tuple[Interval, ...]:
    """Union of closed intervals as a sorted tuple of disjoint intervals"""
    merged: List[List[float]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


def update_exclusion(
    archived_positions: Sequence[np.ndarray],
    lower,
    upper,
    existing: Optional[ExclusionSet] = None,
) -> ExclusionSet:
    """
    Merge [mu - sigma, mu + sigma] per dimension, computed over every archived
    individual and clipped to the bounds, into the existing exclusion set
    """
    if len(archived_positions) == 0:
        raise ArgumentError("exclusion update needs at least one archived population")
    pooled = np.vstack([np.atleast_2d(p) for p in archived_positions])
    dim = pooled.shape[1]
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (dim,))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (dim,))
    mu = pooled.mean(axis=0)
    sigma = pooled.std(axis=0)
    lo = np.maximum(mu - sigma, lower)
    hi = np.minimum(mu + sigma, upper)

    existing = existing if existing is not None else ExclusionSet.empty(dim)
    intervals = []
    for d in range(dim):
        current = list(existing.intervals[d])
        if lo[d] <= hi[d]:
            current.append((float(lo[d]), float(hi[d])))
        intervals.append(merge_intervals(current))
    return ExclusionSet(tuple(intervals))


def complement_gaps(lower: float, upper: float, intervals: Sequence[Interval]) -> List[Tuple[float, float]]:
    """Sampling ranges of [lower, upper] outside the closed intervals (interval ends excluded)"""
    gaps = []
    start, start_open = lower, False
    for lo, hi in intervals:
        if lo > start:
            gap_lo = np.nextafter(start, np.inf) if start_open else start
            gap_hi = np.nextafter(lo, -np.inf)
            if gap_lo <= gap_hi:
                gaps.append((float(gap_lo), float(gap_hi)))
        if hi >= start:
            start, start_open = hi, True
    if start < upper or (start == upper and not start_open):
        gap_lo = np.nextafter(start, np.inf) if start_open else start
        if gap_lo <= upper:
            gaps.append((float(gap_lo), float(upper)))
    return gaps


def sample_outside_exclusion(
    rng: RngState,
    lower: float,
    upper: float,
    intervals: Sequence[Interval],
    size: Optional[int] = None,
    on_fallback: Optional[Callable[[], None]] = None,
):
    """
    Uniform draw over [lower, upper] minus the union of intervals

    A uniform value over the total gap length is mapped into the gaps. When
    the intervals cover the whole range the draw falls back to the full range
    and ``on_fallback`` is called.
    """
    n = 1 if size is None else int(size)
    gaps = complement_gaps(lower, upper, intervals)
    lengths = np.array([hi - lo for lo, hi in gaps])
    total = float(lengths.sum()) if gaps else 0.0

    if not gaps:
        logger.warning(f"exclusion intervals cover [{lower}, {upper}]; sampling the full range")
        if on_fallback is not None:
            on_fallback()
        values = lower + (upper - lower) * rng.random(n)
    elif total == 0.0:
        # only single-point gaps remain
        values = np.array([gaps[k][0] for k in rng.integers(0, len(gaps), n)])
    else:
        u = rng.random(n) * total
        ends = np.cumsum(lengths)
        k = np.minimum(np.searchsorted(ends, u, side="right"), len(gaps) - 1)
        starts = np.array([lo for lo, _ in gaps])
        stops = np.array([hi for _, hi in gaps])
        values = np.clip(starts[k] + (u - (ends[k] - lengths[k])), starts[k], stops[k])
    return float(values[0]) if size is None else values


# Regeneration
def restart_population(
    state: ArrdeState, rng: RngState, evaluator: Evaluator, size: int
) -> Tuple[Population, ArrdeState]:
    """Uniform population outside the exclusion set, evaluated; counts as one more consecutive restart"""
    problem = evaluator.problem
    exclusion = state.exclusion if state.exclusion is not None else ExclusionSet.empty(problem.dim)
    positions = np.empty((size, problem.dim))
    for d in range(problem.dim):
        positions[:, d] = sample_outside_exclusion(
            rng,
            float(problem.lower[d]),
            float(problem.upper[d]),
            exclusion.intervals[d],
            size=size,
            on_fallback=lambda d=d: evaluator.log_event("exclusion_fallback", dimension=d),
        )
    pop = Population(positions, evaluator.evaluate(positions))
    state = replace(
        state,
        phase=Phase.POST_RESTART,
        consecutive_restarts=state.consecutive_restarts + 1,
        improved_since_cycle=False,
    )
    return pop, state


def refine_population(
    state: ArrdeState,
    rng: RngState,
    size: int,
    global_best: Optional[Individual] = None,
    evaluator: Optional[Evaluator] = None,
) -> Tuple[Population, ArrdeState]:
    """
    Population resampled from the pooled archived individuals

    Sampling is without replacement unless the pool is smaller than size.
    Stored fitness values are reused; only unevaluated members are evaluated.
    When the final refinement is mandated the best-so-far individual replaces
    the worst sampled member.
    """
    if not state.restart_archives:
        raise StateError("refinement needs at least one archived population")
    positions = np.vstack([s.positions for s in state.restart_archives])
    fitness = np.concatenate([s.fitness for s in state.restart_archives])
    chosen = rng.choice(positions.shape[0], size, replace=positions.shape[0] < size)
    pop = Population(positions[chosen].copy(), fitness[chosen].copy())

    missing = np.isnan(pop.fitness)
    if np.any(missing):
        if evaluator is None:
            raise StateError("archived individuals without fitness need an evaluator")
        pop.fitness[missing] = evaluator.evaluate(pop.positions[missing])

    if state.refine_flag and global_best is not None:
        worst = int(pop.ranked()[-1])
        pop.positions[worst] = global_best.position
        pop.fitness[worst] = global_best.fitness

    state = replace(state, phase=Phase.POST_REFINE, consecutive_restarts=0, improved_since_cycle=False)
    return pop, state


# Engine
def run_arrde(
    problem: Problem,
    max_nfe: int,
    config: Optional[ARRDEConfig] = None,
    rng: Optional[RngState] = None,
    checkpoint_every: int = 100,
) -> RunTrace:
    """
    Run ARRDE on a problem

    Args:
        problem: Objective with box bounds
        max_nfe: Evaluation budget
        config: Engine parameters
        rng: Generator (seeded with the run index by the harness)
        checkpoint_every: Best-so-far checkpoint cadence

    Returns:
        RunTrace whose best point is the global best over every cycle
    """
    config = config or ARRDEConfig()
    rng = rng if rng is not None else seed_rng(0)
    dim = problem.dim
    n0 = config.initial_size(dim, max_nfe)
    if max_nfe < n0:
        raise ArgumentError(f"arrde: budget {max_nfe} is smaller than the initial population ({n0})")
    r = reduction_exponent(dim)

    def scheduled(t: float) -> int:
        return target_population_size(t, n0, dim, r, config.refine_at)

    evaluator = Evaluator(problem, max_nfe, checkpoint_every)
    positions = latin_hypercube(rng, n0, dim, problem.lower, problem.upper)
    pop = Population(positions, evaluator.evaluate(positions))
    archive = Archive(dim, round(config.archive_ratio * n0), config.archive_ratio)
    memory = SuccessHistory.create(config.memory_size, config.memory_f, config.memory_cr, lock_last=True)
    state = ArrdeState(
        s_tol=config.s_tol,
        exclusion=ExclusionSet.empty(dim),
        best_at_cycle_start=evaluator.best_value,
    )
    evaluator.record_size(pop.size)

    while evaluator.remaining > 0:
        t = evaluator.progress
        target = scheduled(t)
        if pop.size > target:
            pop, archive = shrink_population(pop, archive, target, rng)

        pop, archive, memory, _ = evolve_generation(
            pop,
            archive,
            memory,
            evaluator,
            rng,
            t,
            pbest_schedule(t, config.p_init, config.p_final),
            fw_schedule(t),
            jso_mode=True,
        )
        if evaluator.best_value < state.best_at_cycle_start and not state.improved_since_cycle:
            state = replace(state, improved_since_cycle=True)
        if evaluator.remaining == 0:
            break

        t = evaluator.progress
        mandatory = t >= config.refine_at and not state.refine_flag
        if mandatory:
            state = replace(state, refine_flag=True)
        s = convergence_indicator(pop.fitness)

        if mandatory or s <= state.s_tol:
            state = snapshot_to_archives(state, pop, memory)
            state = replace(
                state,
                exclusion=update_exclusion(
                    [snap.positions for snap in state.restart_archives],
                    problem.lower,
                    problem.upper,
                    state.exclusion,
                ),
            )
            decision = decide_phase(state, t)
            size = scheduled(max(t, np.nextafter(config.refine_at, 1.0)) if mandatory else t)
            if decision == Decision.RESTART:
                size = min(size, evaluator.remaining)
                if size < MIN_POPULATION:
                    decision = Decision.REFINE
                    size = scheduled(t)

            logger.debug(
                f"arrde {problem.name}: trigger at t={t:.4f} s={s:.3e} -> {decision.value} (size {size})"
            )
            if decision == Decision.RESTART:
                pop, state = restart_population(state, rng, evaluator, size)
                archive = Archive(dim, round(config.archive_ratio * size), config.archive_ratio)
            else:
                best = Individual(evaluator.best_position.copy(), evaluator.best_value)
                pop, state = refine_population(state, rng, size, best, evaluator)
                archive = archive.resize(round(config.archive_ratio * size), rng)
            evaluator.log_event(decision.value, progress=t, indicator=s, size=pop.size)
            state = replace(state, best_at_cycle_start=evaluator.best_value)

        evaluator.record_size(pop.size)

    trace = evaluator.finish()
    logger.info(
        f"arrde on {problem.name}: best={trace.best_value:.6e} nfe={trace.nfe} "
        f"restarts={trace.restarts()} refinements={trace.refinements()}"
    )
    return trace
