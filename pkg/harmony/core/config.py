"""
Application configuration using Pydantic Settings
"""
import json
from typing import List, Literal, Tuple, Union

from pydantic import field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Logging
    log_level: str = "INFO"

    # Reproducibility / execution
    default_seed: int = 20231
    threads: int = 1
    chunk_size: int = 1000  # shots per work unit

    # Matching
    weight_function: Literal["log_odds", "neg_log"] = "log_odds"
    probability_floor: float = 1e-10

    # Ensembles
    # str admitted so a comma-separated env value reaches the validator
    alphas: Union[Tuple[float, float, float], str] = (1.0, 0.8, 0.5)
    ensemble_size: int = 100
    pooling: Literal["vote", "sum_likelihood", "most_likely_error"] = "most_likely_error"
    layered_n1: int = 4
    layered_n2: int = 100

    # Tensor network decoding
    default_chi: int = 16
    svd_cutoff: float = 0.0
    exact_ml_max_mechanisms: int = 24

    # Output
    record_timing: bool = False

    # Workers
    celery_broker_url: str = "redis://localhost:6379/1"
    celery_result_backend: str = "redis://localhost:6379/2"
    task_always_eager: bool = False
    # seconds a Monte Carlo task may run, and how long its estimate is kept
    experiment_time_limit: int = 4 * 3600
    result_ttl: int = 86400

    # API
    api_host: str = "0.0.0.0"
    api_port: int = 8000
    cors_origins: List[str] = ["http://localhost:3000", "http://localhost:8000"]

    # Monitoring
    enable_metrics: bool = True

    @field_validator("alphas", mode="before")
    def parse_alphas(cls, v):
        """Allow HARMONY_ALPHAS as a JSON list or comma-separated string."""
        if isinstance(v, str):
            try:
                v = json.loads(v)
            except json.JSONDecodeError:
                v = [a.strip() for a in v.split(",") if a.strip()]
        values = tuple(float(a) for a in v)
        if len(values) != 3 or not all(0.0 <= a <= 1.0 for a in values):
            raise ValueError(f"alphas must be three values in [0, 1], got {v}")
        return values

    @field_validator("cors_origins", mode="before")
    def parse_cors_origins(cls, v):
        if isinstance(v, str):
            try:
                return json.loads(v)
            except json.JSONDecodeError:
                return [v]
        return v

    @field_validator("threads", "chunk_size", "ensemble_size", "layered_n1", "layered_n2", "default_chi")
    def check_positive(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    class Config:
        env_file = ".env"
        env_prefix = "HARMONY_"
        case_sensitive = False


settings = Settings()
