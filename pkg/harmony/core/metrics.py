"""
Prometheus metrics for decoding throughput and layered-decoding behaviour
"""
from prometheus_client import Counter, Histogram

SHOTS_DECODED = Counter(
    "harmony_shots_decoded_total",
    "Shots decoded, by decoder kind",
    ["decoder"],
)

DECODING_FAILURES = Counter(
    "harmony_decoding_failures_total",
    "Shots whose predicted observables differ from the sampled ones",
    ["decoder"],
)

LAYERED_TRIGGERS = Counter(
    "harmony_layered_triggers_total",
    "Shots escalated to the second-pass ensemble",
)

DECODE_SECONDS = Histogram(
    "harmony_decode_seconds",
    "Mean wall time per shot over one decoded batch",
    ["decoder"],
    buckets=(0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 30.0),
)


def record_decodes(decoder: str, shots: int, seconds: float, failures: int = 0, triggers: int = 0) -> None:
    """Fold one batch of decoded shots into the registry of the calling process."""
    if shots <= 0:
        return
    SHOTS_DECODED.labels(decoder=decoder).inc(shots)
    DECODE_SECONDS.labels(decoder=decoder).observe(seconds / shots)
    if failures:
        DECODING_FAILURES.labels(decoder=decoder).inc(failures)
    if triggers:
        LAYERED_TRIGGERS.inc(triggers)
