"""API route definitions"""

from typing import List, Optional

from fastapi import APIRouter, HTTPException, Query, status

from app.core.config import settings
from app.core.errors import ArgumentError, ConfigError
from app.core.logging_config import logger
from app.models.schemas import (
    AlgorithmInfo,
    AlgorithmListResponse,
    ErrorTableResponse,
    ExperimentRequest,
    ExperimentResponse,
    HealthResponse,
    ProblemInfo,
    ProblemListResponse,
    ScoreResponse,
)
from app.services.engines import get_engine, list_engines
from app.services.harness import run_experiment
from app.services.reports import emit_error_table, emit_score_report, parse_weights, score_rows
from app.services.results_store import load_records, resolve_under
from app.services.suite import build_suite


# Create router
router = APIRouter()


def _bad_request(e: Exception) -> HTTPException:
    return HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


def _load(directory: str):
    try:
        path = resolve_under(settings.results_dir, directory)
        return path, load_records(path)
    except ArgumentError as e:
        raise _bad_request(e)
    except FileNotFoundError as e:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=str(e))


@router.get("/health", response_model=HealthResponse)
async def health_check():
    """Health check endpoint"""
    logger.info("Health check requested")
    return HealthResponse(status="healthy", version=settings.app_version, algorithms=len(list_engines()))


@router.get("/algorithms", response_model=AlgorithmListResponse)
async def algorithms():
    """Registered engines with their default parameters"""
    infos = []
    for name in list_engines():
        spec = get_engine(name)
        infos.append(AlgorithmInfo(name=name, description=spec.description, defaults=spec.make_config().model_dump()))
    return AlgorithmListResponse(algorithms=infos, total=len(infos))


@router.get("/problems", response_model=ProblemListResponse)
async def problems(
    dimension: int = Query(10, ge=1, description="Problem dimension"),
    seed: int = Query(0, ge=0, description="Suite seed"),
    suite: str = Query("desk", description="Suite generator"),
):
    """Suite catalogue at one dimension"""
    try:
        built = build_suite(suite, dimension, seed=seed)
    except ArgumentError as e:
        raise _bad_request(e)
    infos = [
        ProblemInfo(
            name=p.name,
            category=p.category,
            dim=p.dim,
            optimum_value=p.optimum_value,
            description=p.description,
        )
        for p in built
    ]
    return ProblemListResponse(problems=infos, total=len(infos))


@router.post("/experiments", response_model=ExperimentResponse)
def run_campaign(request: ExperimentRequest):
    """
    Run or resume a campaign synchronously

    The output directory is resolved under the configured results directory.
    """
    logger.info(f"Campaign requested: {request.name}")
    try:
        directory = resolve_under(settings.results_dir, request.output.directory)
        result = run_experiment(request, directory=directory)
    except (ConfigError, ArgumentError) as e:
        logger.warning(f"Rejected campaign '{request.name}': {str(e)}")
        raise _bad_request(e)
    except Exception as e:
        logger.error(f"Campaign '{request.name}' failed: {str(e)}")
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"Error running campaign: {str(e)}",
        )
    return ExperimentResponse(
        message="Campaign complete",
        directory=str(result.directory.relative_to(settings.results_dir.resolve())),
        records=len(result.records),
        new_runs=result.new_runs,
    )


@router.get("/results/score", response_model=ScoreResponse)
async def score(
    directory: str = Query(..., description="Results directory under the results root"),
    reference: Optional[str] = Query(None, description="Reference algorithm for W/T/L"),
    weights: str = Query("desk", description="Preset name or D=w pairs"),
    legacy: List[str] = Query([], description="Legacy scores: cec2017, cec2020, cec2019"),
):
    """Score rows of a persisted campaign"""
    _, records = _load(directory)
    try:
        report, _ = emit_score_report(records, parse_weights(weights), reference, legacy)
    except (ConfigError, ArgumentError) as e:
        raise _bad_request(e)
    except Exception as e:
        logger.error(f"Scoring {directory} failed: {str(e)}")
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"Error scoring results: {str(e)}",
        )
    return ScoreResponse(reference=report.reference, weights=report.weights, rows=score_rows(report))


@router.get("/results/table", response_model=ErrorTableResponse)
async def error_table(directory: str = Query(..., description="Results directory under the results root")):
    """Per-function best/mean/std of final errors"""
    _, records = _load(directory)
    try:
        rows, _ = emit_error_table(records)
    except Exception as e:
        logger.error(f"Error table for {directory} failed: {str(e)}")
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=f"Error building table: {str(e)}",
        )
    return ErrorTableResponse(rows=rows, total=len(rows))
