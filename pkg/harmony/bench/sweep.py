"""
Parameter sweeps emitting one CSV row per (configuration, decoder).

Rows are appended as soon as a configuration finishes so long sweeps can be
inspected while they run; a JSON mirror of the full table is written at the end.
"""
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import pandas as pd

from harmony.bench.runner import ProgressCallback, run_comparison
from harmony.codes.generators import generate
from harmony.models.hypergraph import ErrorHypergraph
from harmony.models.schemas import CodeSpec, DecoderSpec, EnsembleConfig, LerEstimate, PerturbationParams

logger = logging.getLogger(__name__)

COLUMNS = [
    "family", "d", "r", "p", "decoder", "N", "pooling", "chi", "shots", "failures",
    "ler_shot", "ler_round", "stderr", "wilson_low", "wilson_high", "trigger_rate",
    "mean_instances", "improvement", "alpha1", "alpha2", "alpha3", "seed", "wall_ms",
]


def make_row(
    code: Optional[CodeSpec],
    spec: DecoderSpec,
    est: LerEstimate,
    seed: int,
    improvement: Optional[float] = None,
) -> dict:
    """One CSV row; `code` is None for ingested models."""
    ensemble_size = {"ensemble": spec.ensemble.size, "layered": spec.n2}.get(spec.kind)
    pooling = {"ensemble": spec.ensemble.pooling, "layered": spec.pooling2}.get(spec.kind)
    params = spec.ensemble.params
    return {
        "family": code.family if code else "model",
        "d": code.distance if code else None,
        "r": est.rounds,
        "p": code.p if code else None,
        "decoder": spec.kind if spec.kind != "layered" else f"layered[n1={spec.n1}]",
        "N": ensemble_size,
        "pooling": pooling,
        "chi": spec.chi if spec.kind == "tnml" else None,
        "shots": est.shots,
        "failures": est.failures,
        "ler_shot": est.ler_per_shot,
        "ler_round": est.ler_per_round,
        "stderr": est.stderr,
        "wilson_low": est.wilson_low,
        "wilson_high": est.wilson_high,
        "trigger_rate": est.trigger_rate,
        "mean_instances": est.mean_instances,
        "improvement": improvement,
        "alpha1": params.alpha1 if ensemble_size else None,
        "alpha2": params.alpha2 if ensemble_size else None,
        "alpha3": params.alpha3 if ensemble_size else None,
        "seed": seed,
        "wall_ms": est.wall_ms,
    }


class CsvSink:
    """Appends rows to a CSV file (header once) and keeps them for the JSON mirror."""

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path is not None else None
        self.rows: List[dict] = []
        if self.path is not None:
            pd.DataFrame(columns=COLUMNS).to_csv(self.path, index=False)

    def emit(self, rows: Iterable[dict]) -> None:
        rows = list(rows)
        self.rows.extend(rows)
        if self.path is not None and rows:
            pd.DataFrame(rows, columns=COLUMNS).to_csv(self.path, mode="a", header=False, index=False)

    @property
    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=COLUMNS)

    def write_json(self, path: Path) -> None:
        self.frame.to_json(path, orient="records", indent=2)


def sweep(
    codes: Sequence[CodeSpec],
    decoders: Sequence[DecoderSpec],
    shots: int,
    seed: int,
    sink: Optional[CsvSink] = None,
    threads: Optional[int] = None,
    progress: Optional[ProgressCallback] = None,
) -> pd.DataFrame:
    """Every decoder on every code, each code's decoders sharing one shot stream."""
    sink = sink or CsvSink()
    for code in codes:
        logger.info(f"Sweep point {code.family} d={code.distance} r={code.rounds} p={code.p}")
        h = generate(code)
        estimates = run_comparison(h, decoders, shots, seed, code.rounds, threads, progress)
        sink.emit(make_row(code, spec, est, seed) for spec, est in zip(decoders, estimates))
    return sink.frame


def compare_on_model(
    h: ErrorHypergraph,
    rounds: int,
    decoders: Sequence[DecoderSpec],
    shots: int,
    seed: int,
    sink: Optional[CsvSink] = None,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    sink = sink or CsvSink()
    estimates = run_comparison(h, decoders, shots, seed, rounds, threads)
    sink.emit(make_row(None, spec, est, seed) for spec, est in zip(decoders, estimates))
    return sink.frame


def ensemble_sizes(
    code: CodeSpec,
    sizes: Sequence[int],
    pooling: str,
    shots: int,
    seed: int,
    params: Optional[PerturbationParams] = None,
    sink: Optional[CsvSink] = None,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """Correlated matching followed by ensembles of each size."""
    params = params or PerturbationParams()
    decoders = [DecoderSpec(kind="correlated")] + [
        DecoderSpec(kind="ensemble", ensemble=EnsembleConfig(size=n, pooling=pooling, params=params)) for n in sizes
    ]
    return sweep([code], decoders, shots, seed, sink, threads)


def layered_sweep(
    code: CodeSpec,
    n1_values: Sequence[int],
    n2: int,
    shots: int,
    seed: int,
    pooling2: str = "most_likely_error",
    params: Optional[PerturbationParams] = None,
    sink: Optional[CsvSink] = None,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """
    Layered decoders for each n1 against correlated matching on paired shots.

    `improvement` is correlated LER per round over layered LER per round
    (blank when the layered decoder made no errors).
    """
    params = params or PerturbationParams()
    sink = sink or CsvSink()
    baseline = DecoderSpec(kind="correlated")
    layered = [
        DecoderSpec(kind="layered", n1=n1, n2=n2, pooling2=pooling2, ensemble=EnsembleConfig(params=params))
        for n1 in n1_values
    ]
    h = generate(code)
    estimates = run_comparison(h, [baseline] + layered, shots, seed, code.rounds, threads)
    base_est = estimates[0]
    rows = [make_row(code, baseline, base_est, seed)]
    for spec, est in zip(layered, estimates[1:]):
        improvement = base_est.ler_per_round / est.ler_per_round if est.ler_per_round > 0 else None
        rows.append(make_row(code, spec, est, seed, improvement))
    sink.emit(rows)
    return sink.frame


def scan_chi(
    code: CodeSpec,
    chis: Sequence[int],
    shots: int,
    seed: int,
    sink: Optional[CsvSink] = None,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """Tensor network decoder at each bond dimension on one shot stream."""
    decoders = [DecoderSpec(kind="tnml", chi=chi) for chi in chis]
    return sweep([code], decoders, shots, seed, sink, threads)


def threshold_sweep(
    family: str,
    distances: Sequence[int],
    rates: Sequence[float],
    shots: int,
    seed: int,
    decoders: Optional[Sequence[DecoderSpec]] = None,
    sink: Optional[CsvSink] = None,
    threads: Optional[int] = None,
) -> pd.DataFrame:
    """Grid over distance and physical rate with 4d rounds per memory experiment."""
    codes = [CodeSpec(family=family, distance=d, rounds=4 * d, p=p) for d in distances for p in rates]
    return sweep(codes, decoders or [DecoderSpec(kind="correlated")], shots, seed, sink, threads)
