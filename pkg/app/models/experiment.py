"""Pydantic models for experiment configuration files"""

import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import toml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.core.errors import ConfigError


# Engine parameters
class EngineConfig(BaseModel):
    """Base for per-engine parameter overrides"""

    class Config:
        extra = "forbid"

    def initial_size(self, dim: int, max_nfe: int) -> int:
        raise NotImplementedError


class DEConfig(EngineConfig):
    """Classic DE/rand/1/bin (or DE/best/1/bin)"""
    strategy: Literal["rand1", "best1"] = Field("rand1", description="Mutation strategy")
    population_multiplier: float = Field(10.0, gt=0, description="Population size per dimension")
    population_size: Optional[int] = Field(None, ge=4, description="Explicit population size")
    F: float = Field(0.5, gt=0, le=2, description="Scale factor")
    CR: float = Field(0.9, ge=0, le=1, description="Crossover rate")

    def initial_size(self, dim: int, max_nfe: int) -> int:
        if self.population_size is not None:
            return self.population_size
        return max(4, math.ceil(self.population_multiplier * dim))


class LSHADEConfig(EngineConfig):
    population_multiplier: float = Field(18.0, gt=0, description="N_init = multiplier * D")
    population_size: Optional[int] = Field(None, ge=4, description="Explicit N_init")
    min_population: int = Field(4, ge=4, description="N_min reached at the end of the budget")
    memory_size: int = Field(6, ge=1, description="Success-history slots H")
    archive_ratio: float = Field(2.6, ge=0, description="Archive capacity relative to the population")
    p: float = Field(0.11, gt=0, le=1, description="pbest fraction")
    memory_f: float = Field(0.5, gt=0, le=1, description="Initial M_F")
    memory_cr: float = Field(0.5, ge=0, le=1, description="Initial M_CR")

    def initial_size(self, dim: int, max_nfe: int) -> int:
        if self.population_size is not None:
            return self.population_size
        return max(self.min_population, round(self.population_multiplier * dim))


class JSOConfig(EngineConfig):
    population_size: Optional[int] = Field(None, ge=4, description="Explicit N_init")
    min_population: int = Field(4, ge=4)
    memory_size: int = Field(4, ge=1, description="Adaptive slots; one locked slot is added")
    archive_ratio: float = Field(1.0, ge=0)
    p_init: float = Field(0.25, gt=0, le=1)
    p_final: float = Field(0.125, gt=0, le=1)
    memory_f: float = Field(0.3, gt=0, le=1)
    memory_cr: float = Field(0.8, ge=0, le=1)

    def initial_size(self, dim: int, max_nfe: int) -> int:
        if self.population_size is not None:
            return self.population_size
        return max(4, math.ceil(25 * math.ceil(math.sqrt(dim)) * math.log(dim)))


class ARRDEConfig(EngineConfig):
    population_size: Optional[int] = Field(None, ge=4, description="Explicit N0 (default: budget-aware rule)")
    memory_size: int = Field(6, ge=1, description="Adaptive slots; one locked slot is added")
    archive_ratio: float = Field(2.6, ge=0)
    p_init: float = Field(0.25, gt=0, le=1)
    p_final: float = Field(0.125, gt=0, le=1)
    memory_f: float = Field(0.5, gt=0, le=1)
    memory_cr: float = Field(0.5, ge=0, le=1)
    s_tol: float = Field(0.005, gt=0, description="Convergence threshold on std/|mean|")
    refine_at: float = Field(0.9, gt=0, lt=1, description="Progress of the mandatory refinement")

    def initial_size(self, dim: int, max_nfe: int) -> int:
        if self.population_size is not None:
            return self.population_size
        from app.services.arrde import initial_population_size
        return initial_population_size(dim, max_nfe)


# Experiment file
class SuiteSection(BaseModel):
    kind: str = Field("desk", description="Suite generator")
    seed: int = Field(0, ge=0, description="Suite seed (transforms are drawn with seed + D)")
    dimensions: List[int] = Field(default_factory=lambda: [10, 20], min_length=1)
    problems: Optional[List[int]] = Field(None, description="Subset of 1-based problem indices")
    transform_dir: Optional[str] = Field(None, description="Directory of F{index:02d}_D{D}.txt files")

    class Config:
        extra = "forbid"

    @field_validator("dimensions")
    @classmethod
    def _sorted_unique(cls, v: List[int]) -> List[int]:
        if any(d < 1 for d in v):
            raise ValueError("dimensions must be positive")
        return sorted(set(v))


class BudgetSection(BaseModel):
    multiplier: int = Field(10000, ge=1, description="N_max = multiplier * D")
    per_dimension: Dict[int, int] = Field(default_factory=dict, description="Explicit N_max per dimension")
    sweep: List[float] = Field(default_factory=list, description="N_max / D values for budget sweeps")

    class Config:
        extra = "forbid"

    @field_validator("sweep")
    @classmethod
    def _positive_sweep(cls, v: List[float]) -> List[float]:
        if any(x <= 0 for x in v):
            raise ValueError("sweep values must be positive")
        return sorted(set(v))

    def max_nfe(self, dim: int) -> int:
        if dim in self.per_dimension:
            return self.per_dimension[dim]
        return self.multiplier * dim


class OutputSection(BaseModel):
    directory: str = Field("results/demo", description="Campaign results directory")
    checkpoint_every: Optional[int] = Field(None, ge=1, description="Best-so-far checkpoint cadence (default ARRDE_BENCH_CHECKPOINT_EVERY)")
    threads: Optional[int] = Field(None, ge=1, description="Parallel runs")

    class Config:
        extra = "forbid"


class ExperimentConfig(BaseModel):
    """A campaign: suite x algorithms x runs under a budget rule"""
    name: str = Field("experiment", description="Campaign name")
    runs: int = Field(51, ge=1, description="Runs per (algorithm, problem); run index is the seed")
    reference: Optional[str] = Field(None, description="Reference algorithm for W/T/L (default: first by name)")
    weights: Union[str, Dict[int, float]] = Field("desk", description="Weight preset or {D = w}")
    suite: SuiteSection = Field(default_factory=SuiteSection)
    algorithms: Dict[str, Dict[str, Any]] = Field(default_factory=lambda: {"arrde": {}})
    budget: BudgetSection = Field(default_factory=BudgetSection)
    output: OutputSection = Field(default_factory=OutputSection)

    class Config:
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "name": "demo",
                "runs": 5,
                "reference": "arrde",
                "weights": "desk",
                "suite": {"kind": "desk", "seed": 0, "dimensions": [10, 20]},
                "algorithms": {"arrde": {}, "jso": {}, "lshade": {}, "de": {}},
                "budget": {"multiplier": 10000},
                "output": {"directory": "results/demo"},
            }
        }

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        if self.reference is not None and self.reference not in self.algorithms:
            raise ValueError(f"reference '{self.reference}' is not among the algorithms")
        return self

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """Load and validate a TOML experiment file."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            data = toml.load(path)
        except toml.TomlDecodeError as e:
            raise ConfigError(f"{path}: invalid TOML ({e})")
        return cls.from_mapping(data, source=str(path))

    @classmethod
    def from_mapping(cls, data: Dict[str, Any], source: str = "<config>") -> "ExperimentConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(part) for part in first["loc"])
            raise ConfigError(f"{source}: {location}: {first['msg']} ({e.error_count()} error(s))")

    def output_dir(self, base: Optional[Path] = None) -> Path:
        directory = Path(self.output.directory)
        if not directory.is_absolute() and base is not None:
            directory = base / directory
        return directory
