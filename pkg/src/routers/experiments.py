"""
Experiments router - validate, run and list experiment result sets.
"""

import json
from typing import Any, Dict, List

import pandas as pd
from fastapi import APIRouter, Body, HTTPException, status

from iabplan.errors import ConfigurationError, error_envelope
from iabplan.harness.recipes import list_figures
from iabplan.harness.runner import config_hash, load_config, run_experiment

from ..config import settings
from ..schemas import RunResponse, RunSummary, ValidateResponse
from ..storage import ResultStorage

router = APIRouter(prefix="/experiments", tags=["experiments"])


def _storage() -> ResultStorage:
    return ResultStorage()


def _records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    # to_json maps NaN to null
    return json.loads(frame.to_json(orient="records"))


@router.post("/validate", response_model=ValidateResponse)
async def validate_config(raw: Dict[str, Any] = Body(...)):
    """Validate an experiment config; errors name the offending field."""
    config = load_config(raw)
    return ValidateResponse(ok=True, config_hash=config_hash(config))


@router.post("/run", response_model=RunResponse, status_code=status.HTTP_201_CREATED)
def run(raw: Dict[str, Any] = Body(...)):
    """Run a small experiment synchronously and store its result set."""
    config = load_config(raw)
    if config.n_instances > settings.API_MAX_INSTANCES:
        raise ConfigurationError(
            f"n_instances={config.n_instances} exceeds the synchronous limit of {settings.API_MAX_INSTANCES}",
            detail={"field": "n_instances", "max": settings.API_MAX_INSTANCES},
        )
    result_set = run_experiment(config, jobs=settings.DEFAULT_JOBS)
    _storage().save(result_set)
    meta = result_set.metadata()
    return RunResponse(
        run_id=meta["run_id"],
        name=meta["name"],
        scenario=meta["scenario"],
        config_hash=meta["config_hash"],
        code_version=meta["code_version"],
        created_at=meta["created_at"],
        n_records=meta["n_records"],
        summary=_records(result_set.summary()),
        records=_records(result_set.coverage),
        traces=_records(result_set.traces),
        routing=_records(result_set.routing),
    )


@router.get("/runs", response_model=List[RunSummary])
async def list_runs():
    """List stored result sets, newest first."""
    return [RunSummary(**meta) for meta in _storage().list_runs()]


@router.get("/runs/{run_id}", response_model=RunResponse)
async def get_run(run_id: str):
    """Get one stored result set with its records."""
    stored = _storage().get_run(run_id)
    if stored is None:
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND,
            detail=error_envelope("RUN_NOT_FOUND", f"Run not found: {run_id}", {"run_id": run_id}),
        )
    return RunResponse(**{**stored, "records": stored["coverage"]})


@router.get("/figures", response_model=List[Dict[str, str]])
async def figures():
    """Available figure recipes."""
    return [{"name": name, "description": description} for name, description in list_figures()]
