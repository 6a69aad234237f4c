"""Full-budget desk-scale campaigns (run with -m slow)"""

import numpy as np
import pytest

from app.models.experiment import ARRDEConfig, ExperimentConfig
from app.services.arrde import run_arrde
from app.services.harness import run_experiment
from app.services.reports import records_to_table
from app.services.rng import seed_rng
from app.services.scoring import accuracy_scores
from app.services.suite import build_suite


pytestmark = pytest.mark.slow


def _desk_problem(index):
    return build_suite("desk", 10, problems=[index])[0]


def _final_errors(problem, runs=5, max_nfe=100_000):
    return np.array([
        run_arrde(problem, max_nfe, ARRDEConfig(), seed_rng(run)).best_value - problem.optimum_value
        for run in range(runs)
    ])


def test_unimodal_convergence():
    errors = _final_errors(_desk_problem(1))
    assert np.all(errors <= 1e-8)


def test_multimodal_quality():
    problem = _desk_problem(4)
    assert "rastrigin" in problem.name
    assert _final_errors(problem).mean() <= 10.0


def test_engine_ordering(tmp_path):
    config = ExperimentConfig.from_mapping({
        "name": "ordering",
        "runs": 5,
        "weights": "desk",
        "suite": {"kind": "desk", "dimensions": [10]},
        "algorithms": {"arrde": {}, "lshade": {}, "de": {}},
        "budget": {"multiplier": 10000},
        "output": {"directory": str(tmp_path / "ordering")},
    })
    result = run_experiment(config)
    table = records_to_table(result.records)
    _, _, accuracy = accuracy_scores(table)
    score = dict(zip(table.algorithms, accuracy))
    assert score["arrde"] <= score["de"]
    assert score["lshade"] <= score["de"]
