"""
Experiment runner: decoder factory, chunked shot decoding and LER estimates.
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from harmony.codes.generators import generate
from harmony.core.config import settings
from harmony.core.errors import ConfigurationError
from harmony.core.metrics import record_decodes
from harmony.bench.sampling import shot_stream
from harmony.decoders.correlated import decode_correlated, decode_uncorrelated, project
from harmony.decoders.ensemble import HarmonyEnsemble, LayeredDecoder
from harmony.decoders.tnml import TnmlDecoder
from harmony.models.basis import infer_basis, read_basis, sidecar_path
from harmony.models.dem import parse_dem
from harmony.models.hypergraph import ErrorHypergraph, Shot
from harmony.models.schemas import DecoderSpec, ExperimentSpec, LerEstimate

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Decision:
    prediction: np.ndarray
    confidence: Optional[float] = None
    triggered: Optional[bool] = None
    instances: int = 1


Decoder = Callable[[Shot], Decision]


def with_basis(h: ErrorHypergraph) -> ErrorHypergraph:
    """The model itself if tagged, else tagged by inference."""
    return h if h.detector_basis is not None else h.with_basis(infer_basis(h))


def build_decoder(h: ErrorHypergraph, spec: DecoderSpec) -> Decoder:
    kind = spec.kind
    if kind in ("mwpm", "uncorrelated"):
        pm = project(with_basis(h))
        return lambda shot: Decision(decode_uncorrelated(pm, shot).observables)

    if kind in ("tnml", "exact_ml"):
        ml = TnmlDecoder(h, spec.chi, exact=(kind == "exact_ml"))
        return lambda shot: Decision(ml.decode(shot))

    if h.detector_basis is None:
        raise ConfigurationError(
            f"the {kind} decoder needs detector basis tags; pass a basis sidecar (--basis) or use a generated model"
        )
    pm = project(h)
    if kind == "correlated":
        return lambda shot: Decision(decode_correlated(pm, shot).observables)
    if kind == "ensemble":
        ensemble = HarmonyEnsemble(pm, spec.ensemble)

        def decode(shot: Shot) -> Decision:
            pooled = ensemble.decode(shot)
            return Decision(pooled.prediction, pooled.confidence, instances=spec.ensemble.size)

        return decode
    if kind == "layered":
        layered = LayeredDecoder(pm, spec.n1, spec.n2, spec.pooling2, spec.ensemble.params)

        def decode(shot: Shot) -> Decision:
            result = layered.decode(shot)
            return Decision(result.prediction, result.confidence, result.triggered, result.instances_used)

        return decode
    raise ConfigurationError(f"unknown decoder kind '{kind}'")


@dataclass
class Tally:
    shots: int = 0
    failures: int = 0
    triggers: int = 0
    instances: int = 0
    seconds: float = 0.0

    def merge(self, other: "Tally") -> "Tally":
        return Tally(
            self.shots + other.shots,
            self.failures + other.failures,
            self.triggers + other.triggers,
            self.instances + other.instances,
            self.seconds + other.seconds,
        )


# (shots done, shots requested, running tally per decoder)
ProgressCallback = Callable[[int, int, Sequence[Tally]], None]


def decode_chunk(h: ErrorHypergraph, decoders: Sequence[DecoderSpec], seed: int, start: int, stop: int) -> List[Tally]:
    """Decode shots [start, stop) of the seeded stream with every decoder; one tally per decoder."""
    built = [build_decoder(h, spec) for spec in decoders]
    tallies = [Tally() for _ in decoders]
    for shot in shot_stream(h, seed, start, stop):
        for decode, tally in zip(built, tallies):
            began = time.perf_counter()
            decision = decode(shot)
            elapsed = time.perf_counter() - began
            failed = not np.array_equal(decision.prediction, shot.true_observables)
            tally.shots += 1
            tally.failures += int(failed)
            tally.triggers += int(bool(decision.triggered))
            tally.instances += decision.instances
            tally.seconds += elapsed
    return tallies


def chunk_ranges(shots: int, chunk_size: Optional[int] = None) -> List[Tuple[int, int]]:
    size = chunk_size or settings.chunk_size
    return [(start, min(start + size, shots)) for start in range(0, shots, size)]


def per_round(ler_shot: float, rounds: int) -> float:
    """Per-round rate under independent per-round flips: (1 - (1 - 2e)^(1/r)) / 2."""
    base = 1.0 - 2.0 * ler_shot
    if base <= 0.0:
        return 0.5
    return (1.0 - base ** (1.0 / rounds)) / 2.0


def estimate(spec: DecoderSpec, tally: Tally, rounds: int = 1, record_timing: Optional[bool] = None) -> LerEstimate:
    record_timing = settings.record_timing if record_timing is None else record_timing
    n, f = tally.shots, tally.failures
    rate = f / n if n else 0.0
    if n:
        low, high = proportion_confint(f, n, alpha=0.05, method="wilson")
    else:
        low, high = 0.0, 1.0
    layered = spec.kind == "layered"
    return LerEstimate(
        decoder=spec.label,
        failures=f,
        shots=n,
        rounds=rounds,
        ler_per_shot=rate,
        ler_per_round=per_round(rate, rounds),
        stderr=math.sqrt(rate * (1.0 - rate) / n) if n else 0.0,
        wilson_low=float(low),
        wilson_high=float(high),
        trigger_rate=tally.triggers / n if layered and n else None,
        mean_instances=tally.instances / n if layered and n else None,
        wall_ms=1000.0 * tally.seconds / n if record_timing and n else None,
    )


def _decode_job(args) -> List[Tally]:
    return decode_chunk(*args)


def run_comparison(
    h: ErrorHypergraph,
    decoders: Sequence[DecoderSpec],
    shots: int,
    seed: int,
    rounds: int = 1,
    threads: Optional[int] = None,
    progress: Optional[ProgressCallback] = None,
) -> List[LerEstimate]:
    """
    Decode one seeded shot stream with every decoder (paired comparison).

    Chunks are reduced in chunk order, so the estimates do not depend on the
    number of worker processes. An interrupt keeps the completed chunks.
    """
    threads = threads or settings.threads
    ranges = chunk_ranges(shots)
    jobs = [(h, list(decoders), seed, start, stop) for start, stop in ranges]
    totals = [Tally() for _ in decoders]
    done = 0

    def collect(tallies: List[Tally]) -> None:
        nonlocal totals, done
        totals = [a.merge(b) for a, b in zip(totals, tallies)]
        if settings.enable_metrics:
            for spec, tally in zip(decoders, tallies):
                record_decodes(spec.label, tally.shots, tally.seconds, tally.failures, tally.triggers)
        done = totals[0].shots if totals else done
        if progress is not None:
            progress(done, shots, totals)

    logger.info(f"Decoding {shots} shots with {', '.join(d.label for d in decoders)} on {threads} worker(s)")
    try:
        if threads > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                try:
                    for tallies in pool.map(_decode_job, jobs):
                        collect(tallies)
                except KeyboardInterrupt:
                    pool.shutdown(wait=False, cancel_futures=True)
                    raise
        else:
            for job in jobs:
                collect(_decode_job(job))
    except KeyboardInterrupt:
        logger.warning(f"Interrupted after {done} of {shots} shots; reporting partial results")

    estimates = [estimate(spec, tally, rounds) for spec, tally in zip(decoders, totals)]
    for est in estimates:
        logger.info(f"{est.decoder}: {est.failures}/{est.shots} failures, LER/shot {est.ler_per_shot:.4g}")
    return estimates


def count_rounds(h: ErrorHypergraph) -> int:
    """Rounds of an ingested model: distinct time coordinates minus the final readout layer."""
    if h.detector_coords is None:
        return 1
    times = {c[-1] for c in h.detector_coords if c}
    return max(1, len(times) - 1)


def load_model(spec: ExperimentSpec) -> Tuple[ErrorHypergraph, int]:
    """Model and round count for an experiment."""
    if spec.code is not None:
        return generate(spec.code), spec.code.rounds
    if spec.dem is not None:
        h = parse_dem(spec.dem, basis=tuple(spec.basis) if spec.basis else None)
        return h, count_rounds(h)
    path = Path(spec.model_path)
    basis = None
    if spec.basis_path:
        basis = read_basis(spec.basis_path)
    elif sidecar_path(path).exists():
        basis = read_basis(sidecar_path(path))
    h = parse_dem(path.read_text(), basis=basis)
    return h, count_rounds(h)


def run_experiment(
    spec: ExperimentSpec, threads: Optional[int] = None, progress: Optional[ProgressCallback] = None
) -> LerEstimate:
    h, rounds = load_model(spec)
    return run_comparison(h, [spec.decoder], spec.shots, spec.seed, rounds, threads, progress)[0]
