"""
Phenomenological noise models for the repetition code and the rotated surface code.

Detectors are indexed round-major, then in raster order within a round, and
carry (x, y, round) coordinates so the tensor-network decoder can lay the
model out in time order.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from harmony.core.errors import ConfigurationError
from harmony.models.hypergraph import Component, ErrorHypergraph, Mechanism
from harmony.models.schemas import CodeSpec

logger = logging.getLogger(__name__)

Plaquette = Tuple[int, int]
Qubit = Tuple[int, int]


@dataclass(frozen=True)
class RotatedLayout:
    """Stabilizers of the distance-d rotated surface code.

    Plaquette (i, j) with 0 <= i, j <= d covers the data qubits (x, y) with
    x in {i-1, i} and y in {j-1, j}. Bulk plaquettes alternate Z/X by the
    parity of i + j; weight-two X checks sit on the top and bottom edges,
    weight-two Z checks on the left and right edges.
    """

    distance: int
    plaquettes: Tuple[Tuple[Plaquette, str], ...]
    support: Dict[Plaquette, Tuple[Qubit, ...]]
    logical_z: Tuple[Qubit, ...]

    def of_basis(self, basis: str) -> List[Plaquette]:
        return [pq for pq, b in self.plaquettes if b == basis]

    def touching(self, qubit: Qubit, basis: str) -> List[Plaquette]:
        return [pq for pq in self.of_basis(basis) if qubit in self.support[pq]]


def rotated_layout(distance: int) -> RotatedLayout:
    d = distance
    plaquettes = []
    support = {}
    for j in range(d + 1):
        for i in range(d + 1):
            basis = "Z" if (i + j) % 2 == 0 else "X"
            on_x_edge = i in (0, d)
            on_y_edge = j in (0, d)
            if on_x_edge and on_y_edge:
                continue
            if on_y_edge and basis != "X":
                continue
            if on_x_edge and basis != "Z":
                continue
            qubits = tuple(
                (x, y) for y in (j - 1, j) for x in (i - 1, i) if 0 <= x < d and 0 <= y < d
            )
            plaquettes.append(((i, j), basis))
            support[(i, j)] = qubits

    x_checks = [set(support[pq]) for pq, b in plaquettes if b == "X"]
    logical_z: Tuple[Qubit, ...] = ()
    for y in range(d):
        row = {(x, y) for x in range(d)}
        if all(len(row & check) % 2 == 0 for check in x_checks):
            logical_z = tuple(sorted(row))
            break
    if not logical_z:
        raise ConfigurationError(f"no row-shaped logical Z for distance {d}")
    return RotatedLayout(d, tuple(plaquettes), support, logical_z)


class _DetectorIndex:
    """Allocates detector indices in (round, raster) order."""

    def __init__(self):
        self.index: Dict[Tuple[int, object], int] = {}
        self.basis: List[str] = []
        self.coords: List[Tuple[float, ...]] = []

    def add(self, layer: int, key, basis: str, coords: Sequence[float]) -> None:
        self.index[(layer, key)] = len(self.basis)
        self.basis.append(basis)
        self.coords.append(tuple(float(c) for c in coords))

    def get(self, layer: int, key):
        return self.index.get((layer, key))


def _require(spec: CodeSpec, family: str) -> None:
    if spec.family != family:
        raise ConfigurationError(f"generator for '{family}' called with family '{spec.family}'")


def gen_repetition_phenom(spec: CodeSpec) -> ErrorHypergraph:
    """Bit-flip repetition code: data flips and measurement flips, each with probability p."""
    _require(spec, "repetition")
    d, r, p = spec.distance, spec.rounds, spec.p
    checks = d - 1

    detectors = _DetectorIndex()
    for t in range(r + 1):
        for j in range(checks):
            detectors.add(t, j, "Z", (2 * j + 1, t))

    mechanisms = []
    for t in range(r):
        for q in range(d):
            dets = [detectors.get(t, j) for j in (q - 1, q) if 0 <= j < checks]
            mechanisms.append(Mechanism(p, tuple(dets), 1 if q == 0 else 0))
        for j in range(checks):
            mechanisms.append(Mechanism(p, (detectors.get(t, j), detectors.get(t + 1, j))))

    h = ErrorHypergraph(
        mechanisms=tuple(mechanisms),
        num_detectors=len(detectors.basis),
        num_observables=1,
        detector_basis=tuple(detectors.basis),
        detector_coords=tuple(detectors.coords),
    )
    logger.info(f"Generated repetition code d={d} r={r}: {len(h)} mechanisms, {h.num_detectors} detectors")
    return h


def gen_surface_phenom(spec: CodeSpec) -> ErrorHypergraph:
    """
    Rotated surface code, memory-Z, under phenomenological depolarizing noise.

    Data qubits suffer X, Y, Z with p/3 each before every round; stabilizer
    outcomes flip with 2p/3. Z-basis detectors: round 0 against the
    initialisation, consecutive rounds, then the final data readout against
    the last round. X-basis detectors compare consecutive rounds only.
    """
    _require(spec, "rotated_surface")
    d, r, p = spec.distance, spec.rounds, spec.p
    layout = rotated_layout(d)
    logical = set(layout.logical_z)

    detectors = _DetectorIndex()
    for t in range(r + 1):
        for (i, j), basis in layout.plaquettes:
            if basis == "Z" or 1 <= t <= r - 1:
                detectors.add(t, (i, j), basis, (2 * i, 2 * j, t))

    def flipped(qubit: Qubit, basis: str, layer: int) -> Tuple[int, ...]:
        found = (detectors.get(layer, pq) for pq in layout.touching(qubit, basis))
        return tuple(sorted(i for i in found if i is not None))

    mechanisms = []
    p_pauli = p / 3.0
    p_meas = 2.0 * p / 3.0
    for t in range(r):
        for y in range(d):
            for x in range(d):
                qubit = (x, y)
                mask = 1 if qubit in logical else 0
                z_dets = flipped(qubit, "Z", t)
                x_dets = flipped(qubit, "X", t)
                if z_dets or mask:
                    mechanisms.append(Mechanism(p_pauli, z_dets, mask))
                parts = [Component(dets, obs) for dets, obs in ((z_dets, mask), (x_dets, 0)) if dets]
                if parts:
                    mechanisms.append(Mechanism.from_components(p_pauli, parts))
                if x_dets:
                    mechanisms.append(Mechanism(p_pauli, x_dets))
        for pq, basis in layout.plaquettes:
            dets = [detectors.get(layer, pq) for layer in (t, t + 1)]
            dets = tuple(i for i in dets if i is not None)
            if dets:
                mechanisms.append(Mechanism(p_meas, dets))

    h = ErrorHypergraph(
        mechanisms=tuple(mechanisms),
        num_detectors=len(detectors.basis),
        num_observables=1,
        detector_basis=tuple(detectors.basis),
        detector_coords=tuple(detectors.coords),
    )
    logger.info(f"Generated rotated surface code d={d} r={r}: {len(h)} mechanisms, {h.num_detectors} detectors")
    return h


GENERATORS = {
    "repetition": gen_repetition_phenom,
    "rotated_surface": gen_surface_phenom,
}


def generate(spec: CodeSpec) -> ErrorHypergraph:
    return GENERATORS[spec.family](spec)
