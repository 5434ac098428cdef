from typing import Any, Dict, Optional

from fastapi import APIRouter, Body, HTTPException

from app.api.schemas import CheckSchema, RunResponse, SelftestResponse
from app.estimation.report import plain_value
from app.harness.config import validate_config
from app.harness.runner import run
from app.harness.selftest import run_selftest
from app.utils.errors import ConfigValidationError, QClockError
from app.utils.logger import setup_logger

logger = setup_logger(__name__)

router = APIRouter()


@router.post("/experiments/run", response_model=RunResponse)
def run_experiment(config: Dict[str, Any] = Body(...)):
    """Runs one experiment config (the TOML sections as JSON) and returns report and rows."""
    try:
        result = run(validate_config(config))
    except ConfigValidationError as e:
        raise HTTPException(status_code=422, detail=e.errors)
    except QClockError as e:
        logger.error(f"Experiment failed: {e}")
        raise HTTPException(status_code=400, detail=str(e))

    return RunResponse(
        kind=result.config.kind,
        report=plain_value(result.report),
        warnings=result.warnings,
        rows=plain_value(result.table.to_dict(orient="records")),
    )


@router.get("/selftest", response_model=SelftestResponse)
def selftest(shots: Optional[int] = None, seed: Optional[int] = None):
    kwargs = {key: value for key, value in (("shots", shots), ("seed", seed)) if value is not None}
    if kwargs.get("shots", 1) < 1:
        raise HTTPException(status_code=400, detail="shots must be >= 1")
    summary = run_selftest(**kwargs)
    return SelftestResponse(
        passed=summary.passed,
        checks=[CheckSchema(name=c.name, passed=c.passed, detail=c.detail or None) for c in summary.checks],
    )
