"""
Celery tasks for running decoding experiments off-process
"""
from dataclasses import asdict
from typing import Any, Dict, List, Sequence

from celery.utils.log import get_task_logger

from harmony.bench.runner import Tally, decode_chunk, load_model, run_experiment
from harmony.core.errors import HarmonyError
from harmony.models.schemas import ExperimentSpec
from harmony.workers.celery_app import celery_app

logger = get_task_logger(__name__)


def _progress_meta(decoder: str, done: int, total: int, failures: int) -> Dict[str, Any]:
    return {"decoder": decoder, "shots_done": done, "shots": total, "failures": failures}


@celery_app.task(bind=True, name="run_experiment", max_retries=3, default_retry_delay=60)
def run_experiment_task(self, spec_json: Dict[str, Any]) -> Dict[str, Any]:
    """
    Run one experiment and return its LerEstimate as a dict.

    Progress meta carries the decoder label, shots decoded so far and the
    failures among them.
    """
    spec = ExperimentSpec.model_validate(spec_json)
    label = spec.decoder.label
    self.update_state(state="PROCESSING", meta=_progress_meta(label, 0, spec.shots, 0))

    def progress(done: int, total: int, tallies: Sequence[Tally]) -> None:
        self.update_state(state="PROCESSING", meta=_progress_meta(label, done, total, tallies[0].failures))

    try:
        # the worker process is the unit of parallelism here
        estimate = run_experiment(spec, threads=1, progress=progress)
    except HarmonyError as e:
        logger.error(f"Experiment failed: {e}")
        raise
    except Exception as e:
        logger.error(f"Error running experiment: {e}")
        raise self.retry(exc=e)

    logger.info(f"{estimate.decoder}: {estimate.failures}/{estimate.shots} failures")
    return estimate.model_dump()


@celery_app.task(bind=True, name="decode_chunk", max_retries=3, default_retry_delay=60)
def decode_chunk_task(self, spec_json: Dict[str, Any], start: int, stop: int) -> List[Dict[str, Any]]:
    """Tallies for shots [start, stop) of an experiment's seeded stream."""
    spec = ExperimentSpec.model_validate(spec_json)
    try:
        h, _ = load_model(spec)
        tallies = decode_chunk(h, [spec.decoder], spec.seed, start, stop)
    except HarmonyError as e:
        logger.error(f"Chunk [{start}, {stop}) failed: {e}")
        raise
    except Exception as e:
        logger.error(f"Error decoding chunk [{start}, {stop}): {e}")
        raise self.retry(exc=e)
    return [asdict(t) for t in tallies]
