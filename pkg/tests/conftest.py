"""Shared fixtures"""

import numpy as np
import pytest

from app.core.config import settings
from app.models.experiment import ExperimentConfig
from app.models.schemas import RunRecord
from app.services.problems import TransformSpec, shifted_rotated_problem
from app.services.rng import seed_rng
from app.services.suite import random_orthogonal, random_shift


@pytest.fixture
def rng():
    return seed_rng(12345)


@pytest.fixture
def sphere_problem():
    """Shifted, rotated 10-D sphere with optimum value 100"""
    gen = seed_rng(99)
    transform = TransformSpec(random_shift(gen, 10), random_orthogonal(gen, 10), bias=100.0)
    return shifted_rotated_problem("sphere_D10", "sphere", transform)


@pytest.fixture
def results_root(tmp_path, monkeypatch):
    """Point the configured results directory at a temporary directory"""
    root = tmp_path / "results"
    root.mkdir()
    monkeypatch.setattr(settings, "results_dir", root)
    return root


@pytest.fixture
def tiny_config(tmp_path):
    """2 algorithms x 3 problems x 5 runs at D = 4 with a 400-evaluation budget"""
    def build(directory=None, **overrides):
        data = {
            "name": "tiny",
            "runs": 5,
            "reference": "arrde",
            "weights": "uniform",
            "suite": {"kind": "desk", "seed": 0, "dimensions": [4], "problems": [1, 2, 3]},
            "algorithms": {"arrde": {}, "de": {}},
            "budget": {"multiplier": 100},
            "output": {"directory": str(directory or tmp_path / "campaign"), "checkpoint_every": 50},
        }
        data.update(overrides)
        return ExperimentConfig.from_mapping(data)
    return build


def make_record(algorithm, problem, run, error, optimum=100.0, dim=10):
    """RunRecord with a given final error"""
    value = np.nan if optimum is None else optimum + error
    return RunRecord(
        algorithm=algorithm,
        problem=problem,
        dim=dim,
        run=run,
        max_nfe=1000,
        nfe=1000,
        optimum=optimum,
        final_value=error if optimum is None else value,
        final_error=0.0 if optimum is None else error,
        checkpoints=[(1000, error)],
    )


@pytest.fixture
def record():
    return make_record
