"""
API endpoints for generating models, decoding shots and running experiments
"""
import logging
import time
from datetime import datetime

from fastapi import APIRouter, HTTPException

from harmony import __version__
from harmony.bench.runner import build_decoder
from harmony.codes.generators import generate
from harmony.core.config import settings
from harmony.core.errors import HarmonyError
from harmony.core.metrics import record_decodes
from harmony.models import schemas
from harmony.models.dem import parse_dem, serialize_dem
from harmony.models.shots import bits_to_str, parse_shot_line
from harmony.workers.celery_app import celery_app
from harmony.workers.tasks import run_experiment_task

logger = logging.getLogger(__name__)

router = APIRouter()


@router.get("/health")
async def health_check():
    """Service version and result backend reachability"""
    try:
        celery_app.backend.get("health_check")
        return {
            "status": "healthy",
            "version": __version__,
            "timestamp": datetime.utcnow().isoformat(),
            "redis": "connected",
        }
    except Exception as e:
        return {
            "status": "unhealthy",
            "version": __version__,
            "timestamp": datetime.utcnow().isoformat(),
            "error": str(e),
        }


@router.post("/generate", response_model=schemas.GenerateResponse)
async def generate_model(spec: schemas.CodeSpec):
    """Phenomenological error model for a repetition or rotated surface code"""
    try:
        h = generate(spec)
    except HarmonyError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return schemas.GenerateResponse(
        dem=serialize_dem(h),
        basis="".join(h.detector_basis),
        num_detectors=h.num_detectors,
        num_observables=h.num_observables,
        num_mechanisms=len(h),
    )


@router.post("/decode", response_model=schemas.DecodeResponse)
async def decode_shots(request: schemas.DecodeRequest):
    """
    Decode detection-event bit strings against a model given as text.

    Observable bits after a space are accepted and ignored.
    """
    start_time = time.time()
    try:
        h = parse_dem(request.dem, basis=tuple(request.basis) if request.basis else None)
        shots = [parse_shot_line(line, lineno=i + 1) for i, line in enumerate(request.shots)]
        for shot in shots:
            if shot.detection_events.size != h.num_detectors:
                raise HTTPException(
                    status_code=400,
                    detail=f"shot has {shot.detection_events.size} detector bits, model has {h.num_detectors}",
                )
        decode = build_decoder(h, request.decoder)
        decisions = [decode(shot) for shot in shots]
    except HTTPException:
        raise
    except HarmonyError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Decoding failed: {e}")
        raise HTTPException(status_code=500, detail=f"Decoding failed: {str(e)}")

    kind = request.decoder.kind
    elapsed = time.time() - start_time
    if settings.enable_metrics:
        record_decodes(
            request.decoder.label, len(decisions), elapsed, triggers=sum(bool(d.triggered) for d in decisions)
        )
    return schemas.DecodeResponse(
        decoder=request.decoder.label,
        predictions=[bits_to_str(d.prediction) for d in decisions],
        confidences=[d.confidence for d in decisions] if kind in ("ensemble", "layered") else None,
        triggered=[bool(d.triggered) for d in decisions] if kind == "layered" else None,
        duration_ms=elapsed * 1000,
    )


@router.post("/experiments", response_model=schemas.ExperimentSubmitResponse, status_code=202)
async def submit_experiment(spec: schemas.ExperimentSpec):
    """Queue a Monte Carlo experiment; poll /task/{task_id} for the estimate"""
    if spec.model_path is not None:
        raise HTTPException(status_code=400, detail="model_path is not accepted over HTTP; send the model as 'dem'")
    try:
        task = run_experiment_task.delay(spec.model_dump())
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Submission failed: {str(e)}")
    return schemas.ExperimentSubmitResponse(
        task_id=task.id,
        status="accepted",
        message=f"Experiment queued with decoder {spec.decoder.label}",
        shots=spec.shots,
    )


@router.get("/task/{task_id}", response_model=schemas.TaskStatus)
async def get_task_status(task_id: str):
    """
    Running counts while an experiment decodes, its LerEstimate once done.

    A task the backend has never heard of also reads as pending.
    """
    try:
        task = celery_app.AsyncResult(task_id)
        state = task.state
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Result backend unavailable: {e}")

    if state == "SUCCESS":
        estimate = schemas.LerEstimate.model_validate(task.result)
        return schemas.TaskStatus(
            task_id=task_id,
            status="completed",
            decoder=estimate.decoder,
            shots_done=estimate.shots,
            shots=estimate.shots,
            failures=estimate.failures,
            estimate=estimate,
        )
    if state == "FAILURE":
        return schemas.TaskStatus(task_id=task_id, status="failed", error=str(task.info))
    if state in ("PROCESSING", "STARTED", "RETRY"):
        meta = task.info if isinstance(task.info, dict) else {}
        counts = {k: meta.get(k) for k in ("decoder", "shots_done", "shots", "failures")}
        return schemas.TaskStatus(task_id=task_id, status="processing", **counts)
    return schemas.TaskStatus(task_id=task_id, status="pending")
