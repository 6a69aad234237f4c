"""Budgeted objective evaluation and run traces"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from app.core.errors import ArgumentError, StateError
from app.services.problems import Problem


@dataclass
class RunTrace:
    """Outcome of one engine run"""
    checkpoints: List[Tuple[int, float]]
    best_position: np.ndarray
    best_value: float
    nfe: int
    max_nfe: int
    events: List[Dict[str, Any]] = field(default_factory=list)
    population_sizes: List[Tuple[int, int]] = field(default_factory=list)

    def restarts(self) -> int:
        return sum(1 for e in self.events if e["kind"] == "restart")

    def refinements(self) -> int:
        return sum(1 for e in self.events if e["kind"] == "refine")


class Evaluator:
    """
    Counts objective calls against the budget and tracks the best-so-far point

    Best-so-far values are checkpointed at every multiple of
    ``checkpoint_every`` evaluations and once more when the run finishes.
    """

    def __init__(self, problem: Problem, max_nfe: int, checkpoint_every: int = 100):
        if max_nfe < 1:
            raise ArgumentError(f"max_nfe must be >= 1, got {max_nfe}")
        if checkpoint_every < 1:
            raise ArgumentError(f"checkpoint_every must be >= 1, got {checkpoint_every}")
        self.problem = problem
        self.max_nfe = int(max_nfe)
        self.checkpoint_every = int(checkpoint_every)
        self.nfe = 0
        self.best_value = np.inf
        self.best_position: Optional[np.ndarray] = None
        self.checkpoints: List[Tuple[int, float]] = []
        self.events: List[Dict[str, Any]] = []
        self.population_sizes: List[Tuple[int, int]] = []

    @property
    def remaining(self) -> int:
        return self.max_nfe - self.nfe

    @property
    def progress(self) -> float:
        return self.nfe / self.max_nfe

    def evaluate(self, positions) -> np.ndarray:
        """Evaluate each row of positions; NaN objective values count as +inf."""
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        n = positions.shape[0]
        if n == 0:
            return np.empty(0)
        if n > self.remaining:
            raise StateError(
                f"evaluating {n} points would exceed the budget ({self.nfe}/{self.max_nfe} used)"
            )
        values = np.asarray(self.problem.evaluate(positions), dtype=float).reshape(-1)
        values = np.where(np.isnan(values), np.inf, values)

        running = np.minimum(np.minimum.accumulate(values), self.best_value)
        first = (self.nfe // self.checkpoint_every + 1) * self.checkpoint_every
        for mark in range(first, self.nfe + n + 1, self.checkpoint_every):
            self.checkpoints.append((mark, float(running[mark - self.nfe - 1])))

        k = int(np.argmin(values))
        if values[k] < self.best_value or self.best_position is None:
            self.best_value = float(values[k])
            self.best_position = positions[k].copy()
        self.nfe += n
        return values

    def log_event(self, kind: str, **details):
        event = {"kind": kind, "nfe": self.nfe}
        event.update(details)
        self.events.append(event)

    def record_size(self, size: int):
        self.population_sizes.append((self.nfe, int(size)))

    def finish(self) -> RunTrace:
        if self.best_position is None:
            raise StateError("run finished without evaluating any point")
        checkpoints = list(self.checkpoints)
        if not checkpoints or checkpoints[-1][0] != self.nfe:
            checkpoints.append((self.nfe, self.best_value))
        return RunTrace(
            checkpoints=checkpoints,
            best_position=self.best_position.copy(),
            best_value=self.best_value,
            nfe=self.nfe,
            max_nfe=self.max_nfe,
            events=list(self.events),
            population_sizes=list(self.population_sizes),
        )
