"""Engine registry and the plain DE engine"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Type

from pydantic import ValidationError

from app.core.errors import ArgumentError, ConfigError
from app.core.logging_config import logger
from app.models.experiment import ARRDEConfig, DEConfig, EngineConfig, JSOConfig, LSHADEConfig
from app.services.arrde import run_arrde
from app.services.de_core import (
    Population,
    crossover_binomial,
    greedy_mask,
    mutate_best_1,
    mutate_rand_1,
    repair_bounds,
)
from app.services.problems import Problem
from app.services.rng import RngState, seed_rng
from app.services.shade import initial_population, run_jso, run_lshade
from app.services.tracing import Evaluator, RunTrace


EngineFn = Callable[..., RunTrace]


def run_de(
    problem: Problem,
    max_nfe: int,
    config: Optional[DEConfig] = None,
    rng: Optional[RngState] = None,
    checkpoint_every: int = 100,
) -> RunTrace:
    """Classic DE with fixed F and CR (DE/rand/1/bin or DE/best/1/bin)"""
    config = config or DEConfig()
    rng = rng if rng is not None else seed_rng(0)
    size = config.initial_size(problem.dim, max_nfe)
    if max_nfe < size:
        raise ArgumentError(f"de: budget {max_nfe} is smaller than the population ({size})")
    mutate = mutate_rand_1 if config.strategy == "rand1" else mutate_best_1

    evaluator = Evaluator(problem, max_nfe, checkpoint_every)
    pop = initial_population(evaluator, rng, size)
    evaluator.record_size(pop.size)
    while evaluator.remaining > 0:
        n = min(pop.size, evaluator.remaining)
        targets = list(range(n))
        mutants = mutate(pop, targets, config.F, rng)
        parents = pop.positions[:n]
        trials = crossover_binomial(parents, mutants, config.CR, rng)
        trials = repair_bounds(trials, parents, problem.lower, problem.upper)
        trial_f = evaluator.evaluate(trials)
        survives, _ = greedy_mask(pop.fitness[:n], trial_f)
        positions = pop.positions.copy()
        fitness = pop.fitness.copy()
        positions[:n][survives] = trials[survives]
        fitness[:n][survives] = trial_f[survives]
        pop = Population(positions, fitness)

    trace = evaluator.finish()
    logger.info(f"de/{config.strategy} on {problem.name}: best={trace.best_value:.6e} nfe={trace.nfe}")
    return trace


@dataclass(frozen=True)
class EngineSpec:
    name: str
    run: EngineFn
    config_model: Type[EngineConfig]
    description: str = ""

    def make_config(self, overrides: Optional[Mapping[str, Any]] = None) -> EngineConfig:
        try:
            return self.config_model(**dict(overrides or {}))
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(part) for part in first["loc"])
            raise ConfigError(f"algorithms.{self.name}.{location}: {first['msg']}")


ENGINES: Dict[str, EngineSpec] = {}


def register_engine(
    name: str, run: EngineFn, config_model: Type[EngineConfig] = EngineConfig, description: str = ""
) -> EngineSpec:
    """
    Make an engine available to the harness

    Args:
        name: Registry key used in experiment files
        run: Callable (problem, max_nfe, config, rng, checkpoint_every) -> RunTrace
        config_model: Pydantic model validating the engine's parameters
        description: Short human-readable summary

    Returns:
        The registered EngineSpec
    """
    spec = EngineSpec(name, run, config_model, description)
    if name in ENGINES:
        logger.warning(f"Replacing registered engine '{name}'")
    ENGINES[name] = spec
    return spec


def get_engine(name: str) -> EngineSpec:
    try:
        return ENGINES[name]
    except KeyError:
        raise ConfigError(f"unknown algorithm '{name}'. Registered: {', '.join(list_engines())}")


def list_engines() -> List[str]:
    return sorted(ENGINES)


register_engine("de", run_de, DEConfig, "classic DE/rand/1/bin")
register_engine("lshade", run_lshade, LSHADEConfig, "success-history adaptive DE with linear population reduction")
register_engine("jso", run_jso, JSOConfig, "LSHADE with weighted mutation and parameter schedules")
register_engine("arrde", run_arrde, ARRDEConfig, "adaptive restart-refine DE")
