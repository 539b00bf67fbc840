"""
Celery application: experiments and shot chunks run on workers that share
the API's settings.
"""
from celery import Celery

from harmony.core.config import settings

celery_app = Celery(
    "harmony",
    broker=settings.celery_broker_url,
    backend=settings.celery_result_backend,
    include=["harmony.workers.tasks"],
)

# Estimates and chunk tallies are plain dicts, so JSON carries everything.
celery_app.conf.update(
    task_serializer="json",
    result_serializer="json",
    accept_content=["json"],
    enable_utc=True,
    result_expires=settings.result_ttl,
    task_track_started=True,
    task_time_limit=settings.experiment_time_limit,
    # one long Monte Carlo run per worker process at a time
    worker_prefetch_multiplier=1,
    task_acks_late=True,
    task_always_eager=settings.task_always_eager,
    task_eager_propagates=False,
)
