"""LSHADE and jSO engines

Success-history parameter adaptation, linear population-size reduction (LPSR),
external archive management and the jSO schedules. ``evolve_generation`` is the
generation step shared with the ARRDE engine.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np

from app.core.errors import ArgumentError
from app.core.logging_config import logger
from app.models.experiment import JSOConfig, LSHADEConfig
from app.services.de_core import (
    Archive,
    Population,
    crossover_binomial,
    greedy_mask,
    mutate_current_to_pbest,
    repair_bounds,
    uniform_positions,
)
from app.services.problems import Problem
from app.services.rng import RngState, sample_cauchy, sample_normal, seed_rng
from app.services.tracing import Evaluator, RunTrace


LOCKED_VALUE = 0.9
PARAMETER_SCALE = 0.1
# M_CR slots holding the terminal marker are stored as NaN
TERMINAL = np.nan


@dataclass(frozen=True, eq=False)
class SuccessHistory:
    """
    H adaptive memory slots for F and CR, plus an optional locked slot

    ``m_f`` and ``m_cr`` hold every slot; when ``lock_last`` is set the final
    slot is fixed at 0.9 and the circular write index never reaches it.
    """
    m_f: np.ndarray
    m_cr: np.ndarray
    write_index: int = 0
    lock_last: bool = False

    @classmethod
    def create(cls, size: int, f_init: float = 0.5, cr_init: float = 0.5, lock_last: bool = False) -> "SuccessHistory":
        if size < 1:
            raise ArgumentError(f"memory needs at least one adaptive slot, got {size}")
        m_f = np.full(size, float(f_init))
        m_cr = np.full(size, float(cr_init))
        if lock_last:
            m_f = np.append(m_f, LOCKED_VALUE)
            m_cr = np.append(m_cr, LOCKED_VALUE)
        return cls(m_f, m_cr, 0, lock_last)

    def __post_init__(self):
        for name in ("m_f", "m_cr"):
            values = np.array(getattr(self, name), dtype=float)
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @property
    def slots(self) -> int:
        return self.m_f.size

    @property
    def adaptive_slots(self) -> int:
        return self.slots - 1 if self.lock_last else self.slots

    def terminal(self) -> np.ndarray:
        return np.isnan(self.m_cr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SuccessHistory):
            return NotImplemented
        return (
            self.write_index == other.write_index
            and self.lock_last == other.lock_last
            and np.array_equal(self.m_f, other.m_f)
            and np.array_equal(self.m_cr, other.m_cr, equal_nan=True)
        )


@dataclass(frozen=True)
class GenerationLog:
    """Successful F and CR values of one generation with their improvements"""
    s_f: np.ndarray
    s_cr: np.ndarray
    delta_f: np.ndarray

    def __post_init__(self):
        s_f = np.asarray(self.s_f, dtype=float).reshape(-1)
        s_cr = np.asarray(self.s_cr, dtype=float).reshape(-1)
        delta = np.asarray(self.delta_f, dtype=float).reshape(-1)
        if not (s_f.size == s_cr.size == delta.size):
            raise ArgumentError("S_F, S_CR and delta_f must have equal lengths")
        if np.any(~(delta > 0)):
            raise ArgumentError("improvements must be strictly positive")
        object.__setattr__(self, "s_f", s_f)
        object.__setattr__(self, "s_cr", s_cr)
        object.__setattr__(self, "delta_f", delta)

    @classmethod
    def empty(cls) -> "GenerationLog":
        return cls(np.empty(0), np.empty(0), np.empty(0))

    def __len__(self) -> int:
        return self.s_f.size


def sample_parameters(
    mem: SuccessHistory,
    rng: RngState,
    tau: float = 0.0,
    jso_mode: bool = False,
    size: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw (F, CR) per individual from uniformly chosen memory slots

    CR ~ N(M_CR, 0.1) clipped to [0, 1] (0 for terminal slots); F ~ Cauchy(M_F, 0.1)
    redrawn while <= 0 and capped at 1. In jSO mode F <= 0.7 while tau < 0.6,
    CR >= 0.7 while tau < 0.25 and CR >= 0.6 while tau < 0.5.

    Returns:
        (F, CR) as scalars when size is None, arrays of length size otherwise
    """
    n = 1 if size is None else int(size)
    slots = rng.integers(0, mem.slots, n)

    m_cr = mem.m_cr[slots]
    terminal = np.isnan(m_cr)
    cr = np.clip(sample_normal(rng, np.where(terminal, 0.0, m_cr), PARAMETER_SCALE, size=n), 0.0, 1.0)
    cr = np.where(terminal, 0.0, cr)

    m_f = mem.m_f[slots]
    f = sample_cauchy(rng, m_f, PARAMETER_SCALE, size=n)
    redraw = f <= 0
    while np.any(redraw):
        f[redraw] = sample_cauchy(rng, m_f[redraw], PARAMETER_SCALE, size=int(redraw.sum()))
        redraw = f <= 0
    f = np.minimum(f, 1.0)

    if jso_mode:
        if tau < 0.6:
            f = np.minimum(f, 0.7)
        if tau < 0.25:
            cr = np.maximum(cr, 0.7)
        elif tau < 0.5:
            cr = np.maximum(cr, 0.6)

    if size is None:
        return float(f[0]), float(cr[0])
    return f, cr


def fw_schedule(tau: float) -> float:
    if tau < 0.2:
        return 0.7
    if tau < 0.4:
        return 0.8
    return 1.2


def pbest_schedule(tau: float, p_init: float = 0.25, p_final: float = 0.125) -> float:
    return p_init + tau * (p_final - p_init)


def update_memory(mem: SuccessHistory, log: GenerationLog) -> SuccessHistory:
    """
    Write the weighted Lehmer means of a generation's successes into the next slot

    Weights are w_i = delta_f_i / sum(delta_f). A slot whose M_CR is already
    terminal, or a generation whose successful CRs are all zero, writes the
    terminal marker.
    """
    if len(log) == 0:
        return mem

    delta = np.minimum(log.delta_f, np.finfo(float).max)
    scaled = delta / np.max(delta)
    weights = scaled / np.sum(scaled)

    k = mem.write_index
    m_f = mem.m_f.copy()
    m_cr = mem.m_cr.copy()
    m_f[k] = np.sum(weights * log.s_f ** 2) / np.sum(weights * log.s_f)

    if np.isnan(m_cr[k]) or np.max(log.s_cr) == 0:
        m_cr[k] = TERMINAL
    else:
        m_cr[k] = np.sum(weights * log.s_cr ** 2) / np.sum(weights * log.s_cr)

    return replace(mem, m_f=m_f, m_cr=m_cr, write_index=(k + 1) % mem.adaptive_slots)


def lpsr_size(n_init: int, n_min: int, nfe: int, max_nfe: int) -> int:
    """ceil(N_init + (N_min - N_init) * nfe / max_nfe), in exact integer arithmetic"""
    if not 0 <= nfe <= max_nfe or max_nfe < 1:
        raise ArgumentError(f"need 0 <= nfe <= max_nfe, got nfe={nfe}, max_nfe={max_nfe}")
    if n_min > n_init:
        raise ArgumentError(f"N_min ({n_min}) exceeds N_init ({n_init})")
    return n_init - ((n_init - n_min) * nfe) // max_nfe


def shrink_population(
    pop: Population, archive: Archive, target: int, rng: RngState
) -> Tuple[Population, Archive]:
    """Drop the worst members down to target and rescale the archive to ratio * target."""
    if target < 1:
        raise ArgumentError(f"target population size must be >= 1, got {target}")
    if target >= pop.size:
        return pop, archive
    keep = np.sort(pop.ranked()[:target])
    archive = archive.resize(round(archive.ratio * target), rng)
    return pop.subset(keep), archive


def initial_population(
    evaluator: Evaluator, rng: RngState, size: int, positions: Optional[np.ndarray] = None
) -> Population:
    problem = evaluator.problem
    if positions is None:
        positions = uniform_positions(rng, size, problem.lower, problem.upper)
    return Population(positions, evaluator.evaluate(positions))


def evolve_generation(
    pop: Population,
    archive: Archive,
    memory: SuccessHistory,
    evaluator: Evaluator,
    rng: RngState,
    tau: float,
    p: float,
    fw: float = 1.0,
    jso_mode: bool = False,
) -> Tuple[Population, Archive, SuccessHistory, int]:
    """
    One generation of current-to-pbest/1/bin with success-history adaptation

    When the remaining budget is smaller than the population, only the first
    members produce trials.

    Returns:
        (population, archive, memory, number of strict improvements)
    """
    problem = evaluator.problem
    n = min(pop.size, evaluator.remaining)
    targets = np.arange(n)

    f, cr = sample_parameters(memory, rng, tau, jso_mode, size=n)
    mutants = mutate_current_to_pbest(pop, archive, targets, f, fw, p, rng)
    parents = pop.positions[:n]
    trials = crossover_binomial(parents, mutants, cr, rng)
    trials = repair_bounds(trials, parents, problem.lower, problem.upper)
    trial_f = evaluator.evaluate(trials)

    survives, improved = greedy_mask(pop.fitness[:n], trial_f)
    archive = archive.add(parents[improved], rng)
    log = GenerationLog(f[improved], cr[improved], pop.fitness[:n][improved] - trial_f[improved])

    positions = pop.positions.copy()
    fitness = pop.fitness.copy()
    positions[:n][survives] = trials[survives]
    fitness[:n][survives] = trial_f[survives]
    return Population(positions, fitness), archive, update_memory(memory, log), int(improved.sum())


def _run_shade(
    name: str,
    problem: Problem,
    max_nfe: int,
    rng: RngState,
    checkpoint_every: int,
    *,
    n_init: int,
    n_min: int,
    memory: SuccessHistory,
    archive_ratio: float,
    jso_mode: bool,
    p_of: Callable[[float], float],
    fw_of: Callable[[float], float],
) -> RunTrace:
    if max_nfe < n_init:
        raise ArgumentError(
            f"{name}: budget {max_nfe} is smaller than the initial population ({n_init})"
        )
    evaluator = Evaluator(problem, max_nfe, checkpoint_every)
    pop = initial_population(evaluator, rng, n_init)
    archive = Archive(problem.dim, round(archive_ratio * n_init), archive_ratio)
    evaluator.record_size(pop.size)

    generations = 0
    while evaluator.remaining > 0:
        tau = evaluator.progress
        pop, archive, memory, _ = evolve_generation(
            pop, archive, memory, evaluator, rng, tau, p_of(tau), fw_of(tau), jso_mode
        )
        generations += 1
        target = lpsr_size(n_init, n_min, evaluator.nfe, max_nfe)
        if target < pop.size:
            pop, archive = shrink_population(pop, archive, target, rng)
        evaluator.record_size(pop.size)

    trace = evaluator.finish()
    logger.info(
        f"{name} on {problem.name}: best={trace.best_value:.6e} "
        f"nfe={trace.nfe} generations={generations}"
    )
    return trace


def run_lshade(
    problem: Problem,
    max_nfe: int,
    config: Optional[LSHADEConfig] = None,
    rng: Optional[RngState] = None,
    checkpoint_every: int = 100,
) -> RunTrace:
    """LSHADE: current-to-pbest/1/bin, success-history memories, archive and LPSR"""
    config = config or LSHADEConfig()
    rng = rng if rng is not None else seed_rng(0)
    memory = SuccessHistory.create(config.memory_size, config.memory_f, config.memory_cr)
    return _run_shade(
        "lshade",
        problem,
        max_nfe,
        rng,
        checkpoint_every,
        n_init=config.initial_size(problem.dim, max_nfe),
        n_min=config.min_population,
        memory=memory,
        archive_ratio=config.archive_ratio,
        jso_mode=False,
        p_of=lambda tau: config.p,
        fw_of=lambda tau: 1.0,
    )


def run_jso(
    problem: Problem,
    max_nfe: int,
    config: Optional[JSOConfig] = None,
    rng: Optional[RngState] = None,
    checkpoint_every: int = 100,
) -> RunTrace:
    """jSO: LSHADE with weighted mutation, parameter clamps, locked memory slot and a shrinking pbest pool"""
    config = config or JSOConfig()
    rng = rng if rng is not None else seed_rng(0)
    memory = SuccessHistory.create(config.memory_size, config.memory_f, config.memory_cr, lock_last=True)
    return _run_shade(
        "jso",
        problem,
        max_nfe,
        rng,
        checkpoint_every,
        n_init=config.initial_size(problem.dim, max_nfe),
        n_min=config.min_population,
        memory=memory,
        archive_ratio=config.archive_ratio,
        jso_mode=True,
        p_of=lambda tau: pbest_schedule(tau, config.p_init, config.p_final),
        fw_of=fw_schedule,
    )
