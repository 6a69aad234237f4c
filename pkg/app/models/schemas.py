"""Pydantic models for run records and API request/response schemas"""

import math
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from app.models.experiment import ExperimentConfig
from app.services.scoring import ERROR_FLOOR


def floor_error(value: float, optimum: float) -> float:
    error = float(value) - float(optimum)
    return 0.0 if error < ERROR_FLOOR else error


class RunRecord(BaseModel):
    """One (algorithm, problem, run) outcome"""
    algorithm: str = Field(..., description="Engine name")
    problem: str = Field(..., description="Problem name")
    dim: int = Field(..., ge=1, description="Problem dimension")
    run: int = Field(..., ge=0, description="Run index, also the seed")
    max_nfe: int = Field(..., ge=1, description="Evaluation budget")
    nfe: int = Field(..., ge=0, description="Evaluations used")
    optimum: Optional[float] = Field(None, description="Known optimum value, None if unknown")
    final_value: float = Field(..., description="Best objective value found")
    final_error: float = Field(..., ge=0, description="final_value - optimum after the 1e-14 floor")
    checkpoints: List[Tuple[int, float]] = Field(default_factory=list, description="(nfe, best-so-far error)")
    events: List[Dict[str, Any]] = Field(default_factory=list, description="Engine event log")
    population_sizes: List[Tuple[int, int]] = Field(default_factory=list, description="(nfe, population size)")
    wall_time: float = Field(0.0, ge=0, description="Seconds spent in the engine (informational)")

    class Config:
        json_schema_extra = {
            "example": {
                "algorithm": "arrde",
                "problem": "F01_bent_cigar_D10",
                "dim": 10,
                "run": 0,
                "max_nfe": 100000,
                "nfe": 100000,
                "optimum": 100.0,
                "final_value": 100.0,
                "final_error": 0.0,
                "events": [{"kind": "refine", "nfe": 90000, "progress": 0.9}],
                "wall_time": 4.2,
            }
        }

    @classmethod
    def from_trace(cls, algorithm: str, problem, run: int, trace, wall_time: float = 0.0) -> "RunRecord":
        """
        Build a record from an engine RunTrace

        Checkpoints are converted to floored errors when the optimum is known;
        an unknown (NaN) optimum keeps raw objective values.
        """
        optimum = problem.optimum_value
        known = optimum is not None and not math.isnan(optimum)
        reference = optimum if known else 0.0
        if known:
            checkpoints = [(int(n), floor_error(v, reference)) for n, v in trace.checkpoints]
            final_error = floor_error(trace.best_value, reference)
        else:
            checkpoints = [(int(n), float(v)) for n, v in trace.checkpoints]
            final_error = 0.0
        return cls(
            algorithm=algorithm,
            problem=problem.name,
            dim=problem.dim,
            run=run,
            max_nfe=trace.max_nfe,
            nfe=trace.nfe,
            optimum=float(optimum) if known else None,
            final_value=float(trace.best_value),
            final_error=final_error,
            checkpoints=checkpoints,
            events=[_plain(e) for e in trace.events],
            population_sizes=[(int(n), int(s)) for n, s in trace.population_sizes],
            wall_time=wall_time,
        )

    def sidecar(self) -> Dict[str, Any]:
        """Metadata stored next to the checkpoint file"""
        return self.model_dump(exclude={"checkpoints"})


def _plain(event: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for key, value in event.items():
        if hasattr(value, "item"):
            value = value.item()
        elif hasattr(value, "value"):
            value = value.value
        out[key] = value
    return out


# API bodies
class HealthResponse(BaseModel):
    """Schema for health check responses"""
    status: str = Field(..., description="Service status")
    version: str = Field(..., description="Application version")
    algorithms: int = Field(..., description="Number of registered algorithms")


class AlgorithmInfo(BaseModel):
    name: str = Field(..., description="Registry key")
    description: str = Field("", description="Short summary")
    defaults: Dict[str, Any] = Field(default_factory=dict, description="Default parameters")


class AlgorithmListResponse(BaseModel):
    algorithms: List[AlgorithmInfo] = Field(..., description="Registered engines")
    total: int = Field(..., description="Number of engines")


class ProblemInfo(BaseModel):
    name: str = Field(..., description="Problem name")
    category: str = Field(..., description="basic, hybrid or composition")
    dim: int = Field(..., description="Dimension")
    optimum_value: Optional[float] = Field(None, description="Known optimum value")
    description: str = Field("", description="Construction summary")


class ProblemListResponse(BaseModel):
    problems: List[ProblemInfo] = Field(..., description="Suite catalogue")
    total: int = Field(..., description="Number of problems")


class ExperimentRequest(ExperimentConfig):
    """Schema for campaign requests (same keys as the TOML experiment file)"""


class ExperimentResponse(BaseModel):
    """Schema for campaign responses"""
    message: str = Field(..., description="Status message")
    directory: str = Field(..., description="Results directory")
    records: int = Field(..., description="Records in the campaign")
    new_runs: int = Field(..., description="Runs executed by this request")

    class Config:
        json_schema_extra = {
            "example": {
                "message": "Campaign complete",
                "directory": "results/demo",
                "records": 480,
                "new_runs": 0,
            }
        }


class ScoreRow(BaseModel):
    """Per-algorithm scores"""
    algorithm: str
    accuracy: Dict[int, float] = Field(..., description="Bounded accuracy per dimension")
    rank: Dict[int, float] = Field(..., description="Friedman rank per dimension")
    score: Dict[int, float] = Field(..., description="Per-dimension combined score")
    wins: int
    ties: int
    losses: int
    s_e: float
    s_r: float
    s_tot: float
    legacy: Dict[str, float] = Field(default_factory=dict)


class ScoreResponse(BaseModel):
    reference: str = Field(..., description="Reference algorithm for W/T/L")
    weights: Dict[int, float] = Field(..., description="Dimension weights")
    rows: List[ScoreRow]


class ErrorRow(BaseModel):
    """Best/mean/std of final errors for one (algorithm, problem)"""
    algorithm: str
    problem: str
    best: float
    mean: float
    std: float


class ErrorTableResponse(BaseModel):
    rows: List[ErrorRow]
    total: int
