"""
Error hypergraph data model.

A hypergraph is the full prior of a decoding problem: independent error
mechanisms, each with a probability, the detectors it flips and the logical
observables it flips (a bit mask). Mechanisms that touch more than two
detectors may carry a decomposition into graph-like components, which is what
lets matching decoders see them.
"""
import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from harmony.core.errors import ConfigurationError, DecompositionError, ModelError

logger = logging.getLogger(__name__)

BASES = ("X", "Z")

Coordinates = Tuple[float, ...]


def xor_probability(p: float, q: float) -> float:
    """Probability that exactly one of two independent events fires."""
    return p * (1.0 - q) + q * (1.0 - p)


def mask_bits(mask: int) -> Tuple[int, ...]:
    """Indices of the bits set in an observable mask."""
    bits = []
    k = 0
    while mask:
        if mask & 1:
            bits.append(k)
        mask >>= 1
        k += 1
    return tuple(bits)


def _symmetric_difference(groups: Iterable[Iterable[int]]) -> Tuple[int, ...]:
    acc: set = set()
    for group in groups:
        acc ^= set(group)
    return tuple(sorted(acc))


@dataclass(frozen=True)
class Component:
    """A graph-like piece of a mechanism: one or two detectors."""

    detectors: Tuple[int, ...]
    observables: int = 0

    def __post_init__(self):
        dets = tuple(int(d) for d in self.detectors)
        if len(set(dets)) != len(dets):
            raise DecompositionError(f"component repeats a detector: {dets}")
        if not 1 <= len(dets) <= 2:
            raise DecompositionError(f"component must touch 1 or 2 detectors, got {len(dets)}")
        object.__setattr__(self, "detectors", tuple(sorted(dets)))


@dataclass(frozen=True)
class Mechanism:
    """An independent fault with probability `probability`."""

    probability: float
    detectors: Tuple[int, ...]
    observables: int = 0
    decomposition: Optional[Tuple[Component, ...]] = None

    def __post_init__(self):
        p = float(self.probability)
        if not 0.0 < p < 1.0:
            raise ModelError(f"mechanism probability must lie in (0, 1), got {p}")
        object.__setattr__(self, "probability", p)

        dets = tuple(int(d) for d in self.detectors)
        if any(b <= a for a, b in zip(dets, dets[1:])):
            raise ModelError(f"mechanism detectors must be strictly increasing: {dets}")
        if not dets and not self.observables:
            raise ModelError("mechanism flips neither detectors nor observables")
        object.__setattr__(self, "detectors", dets)

        if self.decomposition is not None:
            parts = tuple(self.decomposition)
            object.__setattr__(self, "decomposition", parts)
            if _symmetric_difference(c.detectors for c in parts) != dets:
                raise DecompositionError(f"decomposition detectors do not XOR to {dets}")
            mask = 0
            for c in parts:
                mask ^= c.observables
            if mask != self.observables:
                raise DecompositionError("decomposition observable masks do not XOR to the mechanism mask")

    @classmethod
    def from_components(cls, probability: float, components: Sequence[Component]) -> "Mechanism":
        """Build a mechanism from its graph-like parts (one part means no decomposition)."""
        if len(components) == 1:
            c = components[0]
            return cls(probability, c.detectors, c.observables)
        mask = 0
        for c in components:
            mask ^= c.observables
        dets = _symmetric_difference(c.detectors for c in components)
        return cls(probability, dets, mask, tuple(components))

    def components(self) -> Tuple[Component, ...]:
        """Graph-like parts; a mechanism with at most two detectors is its own single part."""
        if self.decomposition is not None:
            return self.decomposition
        if 1 <= len(self.detectors) <= 2:
            return (Component(self.detectors, self.observables),)
        if not self.detectors:
            return ()
        raise DecompositionError(
            f"mechanism on {len(self.detectors)} detectors {self.detectors} has no decomposition"
        )

    @property
    def is_hyperedge(self) -> bool:
        return len(self.detectors) > 2 or (self.decomposition is not None and len(self.decomposition) > 1)


@dataclass(frozen=True)
class ErrorHypergraph:
    """Immutable prior shared by every decoder instance."""

    mechanisms: Tuple[Mechanism, ...]
    num_detectors: int
    num_observables: int
    detector_basis: Optional[Tuple[str, ...]] = None
    detector_coords: Optional[Tuple[Optional[Coordinates], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "mechanisms", tuple(self.mechanisms))
        for i, m in enumerate(self.mechanisms):
            if m.detectors and m.detectors[-1] >= self.num_detectors:
                raise ModelError(f"mechanism {i} references detector {m.detectors[-1]} >= {self.num_detectors}")
            if m.observables >> self.num_observables:
                raise ModelError(f"mechanism {i} flips an observable >= {self.num_observables}")

        if self.detector_basis is not None:
            basis = tuple(self.detector_basis)
            object.__setattr__(self, "detector_basis", basis)
            if len(basis) != self.num_detectors:
                raise ModelError(f"basis annotation covers {len(basis)} of {self.num_detectors} detectors")
            if any(b not in BASES for b in basis):
                raise ModelError("basis tags must be 'X' or 'Z'")
            for i, m in enumerate(self.mechanisms):
                for c in m.decomposition or ():
                    if len({basis[d] for d in c.detectors}) != 1:
                        raise DecompositionError(f"mechanism {i} has a component spanning both bases")

        if self.detector_coords is not None:
            coords = tuple(None if c is None else tuple(float(x) for x in c) for c in self.detector_coords)
            if len(coords) != self.num_detectors:
                raise ModelError(f"coordinates cover {len(coords)} of {self.num_detectors} detectors")
            object.__setattr__(self, "detector_coords", None if all(c is None for c in coords) else coords)

    def __len__(self) -> int:
        return len(self.mechanisms)

    @cached_property
    def probabilities(self) -> np.ndarray:
        return np.array([m.probability for m in self.mechanisms], dtype=np.float64)

    @cached_property
    def detector_matrix(self) -> np.ndarray:
        """(mechanisms x detectors) incidence as uint8."""
        mat = np.zeros((len(self.mechanisms), self.num_detectors), dtype=np.uint8)
        for i, m in enumerate(self.mechanisms):
            mat[i, list(m.detectors)] = 1
        return mat

    @cached_property
    def observable_matrix(self) -> np.ndarray:
        """(mechanisms x observables) incidence as uint8."""
        mat = np.zeros((len(self.mechanisms), self.num_observables), dtype=np.uint8)
        for i, m in enumerate(self.mechanisms):
            mat[i, list(mask_bits(m.observables))] = 1
        return mat

    def with_basis(self, basis: Sequence[str]) -> "ErrorHypergraph":
        return replace(self, detector_basis=tuple(basis))

    def require_basis(self) -> Tuple[str, ...]:
        if self.detector_basis is None:
            raise ConfigurationError(
                "correlated decoding needs detector basis tags; pass a basis sidecar or run infer_basis"
            )
        return self.detector_basis


@dataclass(frozen=True, eq=False)
class Shot:
    """One decoding instance: detection events and, when simulated, the true observable flips."""

    detection_events: np.ndarray
    true_observables: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "detection_events", np.asarray(self.detection_events, dtype=np.uint8))
        if self.true_observables is not None:
            object.__setattr__(self, "true_observables", np.asarray(self.true_observables, dtype=np.uint8))

    @cached_property
    def events(self) -> frozenset:
        """Indices of the detectors that fired."""
        return frozenset(int(i) for i in np.flatnonzero(self.detection_events))

    def check(self, h: ErrorHypergraph) -> "Shot":
        if self.detection_events.shape != (h.num_detectors,):
            raise ModelError(
                f"shot has {self.detection_events.size} detector bits, model has {h.num_detectors}"
            )
        if self.true_observables is not None and self.true_observables.shape != (h.num_observables,):
            raise ModelError(
                f"shot has {self.true_observables.size} observable bits, model has {h.num_observables}"
            )
        return self


def _indices(h: ErrorHypergraph, mechanisms: Iterable[int]) -> list:
    idx = sorted({int(m) for m in mechanisms})
    if idx and (idx[0] < 0 or idx[-1] >= len(h.mechanisms)):
        raise ModelError(f"mechanism index out of range for a model with {len(h.mechanisms)} mechanisms")
    return idx


def predicted_observables(h: ErrorHypergraph, mechanisms: Iterable[int]) -> np.ndarray:
    """XOR of the observable masks of the listed mechanisms."""
    idx = _indices(h, mechanisms)
    return (h.observable_matrix[idx].sum(axis=0, dtype=np.int64) % 2).astype(np.uint8)


def triggered_detectors(h: ErrorHypergraph, mechanisms: Iterable[int]) -> np.ndarray:
    """XOR of the detector sets of the listed mechanisms."""
    idx = _indices(h, mechanisms)
    return (h.detector_matrix[idx].sum(axis=0, dtype=np.int64) % 2).astype(np.uint8)


def merge_duplicates(h: ErrorHypergraph) -> ErrorHypergraph:
    """Combine mechanisms with identical effect (p xor q); first occurrence fixes the order."""
    merged: dict = {}
    for m in h.mechanisms:
        key = (m.detectors, m.observables, m.decomposition)
        merged[key] = xor_probability(merged[key], m.probability) if key in merged else m.probability
    mechanisms = tuple(Mechanism(p, dets, obs, dec) for (dets, obs, dec), p in merged.items())
    if len(mechanisms) < len(h.mechanisms):
        logger.info(f"Merged {len(h.mechanisms)} mechanisms into {len(mechanisms)}")
    return replace(h, mechanisms=mechanisms)


def gf2_rank(rows: np.ndarray) -> int:
    """Rank over GF(2) of a 0/1 matrix, by row elimination."""
    work = (np.asarray(rows, dtype=np.uint8) & 1).copy()
    rank = 0
    for col in range(work.shape[1] if work.ndim == 2 else 0):
        pivots = np.nonzero(work[rank:, col])[0]
        if pivots.size == 0:
            continue
        pivot = rank + pivots[0]
        work[[rank, pivot]] = work[[pivot, rank]]
        below = np.nonzero(work[:, col])[0]
        below = below[below != rank]
        work[below] ^= work[rank]
        rank += 1
        if rank == work.shape[0]:
            break
    return rank


def is_reachable(h: ErrorHypergraph, detection_events: np.ndarray) -> bool:
    """True when some set of mechanisms fires exactly these detectors."""
    events = np.asarray(detection_events, dtype=np.uint8)
    if not events.any():
        return True
    base = gf2_rank(h.detector_matrix)
    return gf2_rank(np.vstack([h.detector_matrix, events[None, :]])) == base
