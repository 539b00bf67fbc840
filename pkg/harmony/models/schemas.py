"""
Pydantic schemas for value objects that cross process or network boundaries
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from harmony.core.config import settings

CodeFamily = Literal["repetition", "rotated_surface"]
Pooling = Literal["vote", "sum_likelihood", "most_likely_error"]
DecoderKind = Literal["mwpm", "uncorrelated", "correlated", "ensemble", "layered", "tnml", "exact_ml"]


# Code generation
class CodeSpec(BaseModel):
    family: CodeFamily
    distance: int = Field(..., ge=3)
    rounds: int = Field(..., ge=1)
    p: float = Field(..., gt=0.0, lt=0.5)

    @field_validator("distance")
    def validate_distance(cls, v):
        if v % 2 == 0:
            raise ValueError(f"distance must be odd, got {v}")
        return v


class BasisAnnotation(BaseModel):
    """Sidecar file content: one X/Z tag per detector."""

    num_detectors: int = Field(..., ge=0)
    basis: str = Field(..., pattern="^[XZ]*$")

    @model_validator(mode="after")
    def validate_length(self):
        if len(self.basis) != self.num_detectors:
            raise ValueError(f"basis string has {len(self.basis)} tags for {self.num_detectors} detectors")
        return self


# Ensembles
class PerturbationParams(BaseModel):
    alpha1: float = Field(default_factory=lambda: settings.alphas[0], ge=0.0, le=1.0)
    alpha2: float = Field(default_factory=lambda: settings.alphas[1], ge=0.0, le=1.0)
    alpha3: float = Field(default_factory=lambda: settings.alphas[2], ge=0.0, le=1.0)
    seed: int = Field(default_factory=lambda: settings.default_seed)


class EnsembleConfig(BaseModel):
    size: int = Field(default_factory=lambda: settings.ensemble_size, ge=1)
    pooling: Pooling = Field(default_factory=lambda: settings.pooling)
    params: PerturbationParams = Field(default_factory=PerturbationParams)


class DecoderSpec(BaseModel):
    kind: DecoderKind = "correlated"
    ensemble: EnsembleConfig = Field(default_factory=EnsembleConfig)
    n1: int = Field(default_factory=lambda: settings.layered_n1, ge=1)
    n2: int = Field(default_factory=lambda: settings.layered_n2, ge=1)
    pooling2: Pooling = "most_likely_error"
    chi: int = Field(default_factory=lambda: settings.default_chi, ge=1)

    @model_validator(mode="after")
    def validate_layers(self):
        if self.kind == "layered" and self.n2 < self.n1:
            raise ValueError(f"layered decoding needs n2 >= n1, got n1={self.n1}, n2={self.n2}")
        return self

    @property
    def label(self) -> str:
        """Short name used in CSV rows and metric labels."""
        if self.kind == "ensemble":
            return f"ensemble[{self.ensemble.pooling},N={self.ensemble.size}]"
        if self.kind == "layered":
            return f"layered[{self.n1},{self.n2}]"
        if self.kind == "tnml":
            return f"tnml[chi={self.chi}]"
        return self.kind


# Experiments
class ExperimentSpec(BaseModel):
    code: Optional[CodeSpec] = None
    model_path: Optional[str] = None
    basis_path: Optional[str] = None
    dem: Optional[str] = None
    basis: Optional[str] = Field(default=None, pattern="^[XZ]*$")
    decoder: DecoderSpec = Field(default_factory=DecoderSpec)
    shots: int = Field(..., ge=1)
    seed: int = Field(default_factory=lambda: settings.default_seed)

    @model_validator(mode="after")
    def validate_source(self):
        sources = [s for s in (self.code, self.model_path, self.dem) if s is not None]
        if len(sources) != 1:
            raise ValueError("exactly one of code, model_path or dem must be given")
        return self


class LerEstimate(BaseModel):
    decoder: str
    failures: int = Field(..., ge=0)
    shots: int = Field(..., ge=0)
    rounds: int = Field(1, ge=1)
    ler_per_shot: float
    ler_per_round: float
    stderr: float
    wilson_low: float
    wilson_high: float
    trigger_rate: Optional[float] = None
    mean_instances: Optional[float] = None
    wall_ms: Optional[float] = None


# HTTP bodies
class GenerateResponse(BaseModel):
    dem: str
    basis: str
    num_detectors: int
    num_observables: int
    num_mechanisms: int


class DecodeRequest(BaseModel):
    dem: str
    basis: Optional[str] = Field(default=None, pattern="^[XZ]*$")
    shots: List[str] = Field(..., min_length=1, max_length=10000)
    decoder: DecoderSpec = Field(default_factory=DecoderSpec)


class DecodeResponse(BaseModel):
    decoder: str
    predictions: List[str]
    confidences: Optional[List[float]] = None
    triggered: Optional[List[bool]] = None
    duration_ms: float


class ExperimentSubmitResponse(BaseModel):
    task_id: str
    status: str
    message: str
    shots: int


class TaskStatus(BaseModel):
    """Experiment progress as running counts, then the final estimate."""

    task_id: str
    status: Literal["pending", "processing", "completed", "failed"]
    decoder: Optional[str] = None
    shots_done: Optional[int] = None
    shots: Optional[int] = None
    failures: Optional[int] = None
    estimate: Optional[LerEstimate] = None
    error: Optional[str] = None
