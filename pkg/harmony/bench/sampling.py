"""
Seeded sampling of shots from an error hypergraph.

Shot i of a stream under seed s always comes from generator (s, SHOTS, i),
so every decoder in a comparison sees the same shots regardless of how the
stream is split across workers.
"""
from typing import Iterator, Optional

import numpy as np

from harmony.core import rng
from harmony.models.hypergraph import ErrorHypergraph, Shot


def shot_from_active(h: ErrorHypergraph, active: np.ndarray) -> Shot:
    """Shot produced by exactly the mechanisms flagged in `active`."""
    on = np.asarray(active, dtype=np.int64)
    detections = (on @ h.detector_matrix.astype(np.int64)) % 2
    observables = (on @ h.observable_matrix.astype(np.int64)) % 2
    return Shot(detections.astype(np.uint8), observables.astype(np.uint8))


def sample_active(h: ErrorHypergraph, gen: np.random.Generator, probabilities: Optional[np.ndarray] = None) -> np.ndarray:
    p = h.probabilities if probabilities is None else np.asarray(probabilities, dtype=np.float64)
    return gen.random(len(p)) < p


def sample_shot(h: ErrorHypergraph, gen: np.random.Generator, probabilities: Optional[np.ndarray] = None) -> Shot:
    """Each mechanism fires independently; `probabilities` overrides the model's (0 and 1 allowed)."""
    return shot_from_active(h, sample_active(h, gen, probabilities))


def shot_stream(h: ErrorHypergraph, seed: int, start: int, stop: int) -> Iterator[Shot]:
    for index in range(start, stop):
        yield sample_shot(h, rng.generator(seed, rng.SHOTS, index))
