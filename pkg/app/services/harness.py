"""Campaign orchestration: seeded run matrices, resume and budget sweeps"""

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from joblib import Parallel, delayed

from app.core.config import settings
from app.core.errors import ArgumentError, ConfigError
from app.core.logging_config import logger
from app.models.experiment import BudgetSection, EngineConfig, ExperimentConfig
from app.models.schemas import RunRecord
from app.services.engines import EngineFn, get_engine
from app.services.problems import Problem
from app.services.results_store import ResultsStore
from app.services.rng import seed_rng
from app.services.suite import build_suite


@dataclass(frozen=True)
class RunTask:
    algorithm: str
    problem: Problem
    run: int
    max_nfe: int


@dataclass
class CampaignPlan:
    """Validated campaign ready to dispatch"""
    config: ExperimentConfig
    directory: Path
    engines: Dict[str, Tuple[EngineFn, EngineConfig]]
    problems: Dict[int, List[Problem]]
    tasks: List[RunTask] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.tasks)


@dataclass
class CampaignResult:
    directory: Path
    records: List[RunRecord]
    new_runs: int


def plan_experiment(config: ExperimentConfig, directory: Optional[Path] = None) -> CampaignPlan:
    """
    Validate a campaign and list its (algorithm, problem, run) tasks in sorted order

    Unknown algorithms, invalid engine parameters, unknown suites and budgets
    below an engine's initial population raise ConfigError before anything runs.
    """
    directory = Path(directory) if directory is not None else config.output_dir(settings.base_dir)

    engines = {}
    for name in sorted(config.algorithms):
        spec = get_engine(name)
        engines[name] = (spec.run, spec.make_config(config.algorithms[name]))

    problems = {}
    for dim in config.suite.dimensions:
        try:
            problems[dim] = build_suite(
                config.suite.kind,
                dim,
                seed=config.suite.seed,
                problems=config.suite.problems,
                transform_dir=config.suite.transform_dir,
            )
        except ArgumentError as e:
            raise ConfigError(f"suite: {e}")
        max_nfe = config.budget.max_nfe(dim)
        for name, (_, engine_config) in engines.items():
            needed = engine_config.initial_size(dim, max_nfe)
            if max_nfe < needed:
                raise ConfigError(
                    f"budget {max_nfe} at D={dim} is below the initial population of '{name}' ({needed})"
                )

    tasks = [
        RunTask(name, problem, run, config.budget.max_nfe(dim))
        for name in engines
        for dim in sorted(problems)
        for problem in problems[dim]
        for run in range(config.runs)
    ]
    return CampaignPlan(config, directory, engines, problems, tasks)


def execute_task(task: RunTask, run_fn: EngineFn, engine_config: EngineConfig, store: ResultsStore,
                 checkpoint_every: int) -> RunRecord:
    """Run one task with seed = run index and persist its record"""
    try:
        started = time.perf_counter()
        trace = run_fn(task.problem, task.max_nfe, engine_config, seed_rng(task.run), checkpoint_every)
        elapsed = time.perf_counter() - started
        record = RunRecord.from_trace(task.algorithm, task.problem, task.run, trace, wall_time=elapsed)
        store.write(record)
        return record
    except Exception as e:
        logger.error(f"Run {task.algorithm}/{task.problem.name}/{task.run} failed: {str(e)}")
        raise


def run_experiment(
    config: ExperimentConfig,
    threads: Optional[int] = None,
    directory: Optional[Path] = None,
) -> CampaignResult:
    """
    Run (or resume) a campaign

    Args:
        config: Validated experiment configuration
        threads: --threads override; falls back to ARRDE_BENCH_THREADS, then [output].threads
        directory: Results directory override

    Returns:
        CampaignResult with every record of the campaign and the number of runs executed
    """
    plan = plan_experiment(config, directory)
    store = ResultsStore(plan.directory)
    n_jobs = settings.resolve_threads(threads, config.output.threads)
    checkpoint_every = config.output.checkpoint_every or settings.checkpoint_every

    pending = [t for t in plan.tasks if not store.exists(t.algorithm, t.problem.name, t.run)]
    skipped = plan.size - len(pending)
    logger.info(
        f"Campaign '{config.name}': {plan.size} runs, {skipped} already recorded, "
        f"{len(pending)} to execute on {n_jobs} worker(s) -> {plan.directory}"
    )
    if pending:
        Parallel(n_jobs=n_jobs)(
            delayed(execute_task)(
                task, *plan.engines[task.algorithm], store, checkpoint_every
            )
            for task in pending
        )

    records = [store.read(t.algorithm, t.problem.name, t.run, checkpoints=False) for t in plan.tasks]
    logger.info(f"Campaign '{config.name}' complete: {len(records)} records")
    return CampaignResult(plan.directory, records, len(pending))


def sweep_label(nmd: float) -> str:
    return f"nmd_{nmd:g}"


def sweep_config(config: ExperimentConfig, nmd: float) -> ExperimentConfig:
    """The campaign at budget N_max = round(nmd * D) for every dimension"""
    budget = BudgetSection(per_dimension={d: max(1, round(nmd * d)) for d in config.suite.dimensions})
    return config.model_copy(update={"budget": budget, "name": f"{config.name}/{sweep_label(nmd)}"})


def run_sweep(
    config: ExperimentConfig,
    threads: Optional[int] = None,
    directory: Optional[Path] = None,
) -> Dict[float, CampaignResult]:
    """
    Run the campaign once per N_max/D value of [budget].sweep

    Each budget lives under <output>/sweep/nmd_<value>.
    """
    if not config.budget.sweep:
        raise ConfigError("budget.sweep is empty; list N_max/D values to sweep")
    root = Path(directory) if directory is not None else config.output_dir(settings.base_dir)
    # validate every budget before the first run
    plans = {nmd: plan_experiment(sweep_config(config, nmd), root / "sweep" / sweep_label(nmd))
             for nmd in config.budget.sweep}

    results = {}
    for nmd, plan in plans.items():
        results[nmd] = run_experiment(plan.config, threads, plan.directory)
    return results
