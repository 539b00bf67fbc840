"""
Detector-error-model text format.

Supported subset, one instruction per line:

    error(p) D<i> ... L<j> ... [^ D<k> ... L<m> ...]
    detector[(c0, c1, ...)] D<i> ...
    logical_observable L<j> ...
    # comments and blank lines

`^` separates the graph-like components of a decomposed mechanism. Block
constructs (`repeat { ... }`) and `shift_detectors` are rejected with
UnsupportedConstructError rather than silently mis-read.
"""
import logging
import re
from typing import Dict, List, Optional, Sequence, Tuple

from harmony.core.errors import (
    DecompositionError,
    ModelError,
    ParseError,
    UnsupportedConstructError,
)
from harmony.models.hypergraph import Component, ErrorHypergraph, Mechanism, mask_bits

logger = logging.getLogger(__name__)

_INSTRUCTION = re.compile(r"^(?P<name>[A-Za-z_]+)\s*(?:\((?P<args>[^)]*)\))?\s*(?P<targets>.*)$")
_DETECTOR = re.compile(r"^D(\d+)$")
_OBSERVABLE = re.compile(r"^L(\d+)$")
_UNSUPPORTED = {"repeat", "shift_detectors"}


def _parse_args(raw: Optional[str], lineno: int) -> List[float]:
    if raw is None or not raw.strip():
        return []
    try:
        return [float(a) for a in raw.split(",")]
    except ValueError:
        raise ParseError(f"non-numeric argument list '({raw})'", lineno)


def _split_targets(tokens: Sequence[str], lineno: int) -> List[Tuple[List[int], List[int]]]:
    """Group `D`/`L` targets into components at `^` separators."""
    groups: List[Tuple[List[int], List[int]]] = [([], [])]
    for tok in tokens:
        if tok == "^":
            groups.append(([], []))
            continue
        det = _DETECTOR.match(tok)
        if det:
            groups[-1][0].append(int(det.group(1)))
            continue
        obs = _OBSERVABLE.match(tok)
        if obs:
            groups[-1][1].append(int(obs.group(1)))
            continue
        raise ParseError(f"unrecognised target '{tok}'", lineno)
    return groups


def _xor_indices(values: Sequence[int]) -> Tuple[int, ...]:
    acc: set = set()
    for v in values:
        acc ^= {v}
    return tuple(sorted(acc))


def _mask(observables: Sequence[int]) -> int:
    mask = 0
    for k in observables:
        mask ^= 1 << k
    return mask


def _parse_error(args: List[float], targets: Sequence[str], lineno: int) -> Mechanism:
    if len(args) != 1:
        raise ParseError(f"error instruction takes one probability, got {len(args)} arguments", lineno)
    p = args[0]
    if not 0.0 < p < 1.0:
        raise ParseError(f"probability {p} out of range (0, 1)", lineno)

    groups = _split_targets(targets, lineno)
    try:
        if len(groups) == 1:
            dets, obs = groups[0]
            return Mechanism(p, _xor_indices(dets), _mask(obs))
        components = []
        for dets, obs in groups:
            dets = _xor_indices(dets)
            if len(dets) > 2:
                raise DecompositionError(f"line {lineno}: component touches {len(dets)} detectors (max 2)")
            components.append(Component(dets, _mask(obs)))
        return Mechanism.from_components(p, components)
    except DecompositionError as e:
        if str(e).startswith("line "):
            raise
        raise DecompositionError(f"line {lineno}: {e}") from e
    except ModelError as e:
        raise ParseError(str(e), lineno) from e


def parse_dem(text: str, basis: Optional[Sequence[str]] = None) -> ErrorHypergraph:
    """Parse model text; identical mechanisms are kept as listed (see merge_duplicates)."""
    mechanisms: List[Mechanism] = []
    coords: Dict[int, Tuple[float, ...]] = {}
    max_detector = -1
    max_observable = -1

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "{" in line or "}" in line:
            raise UnsupportedConstructError("block constructs are not supported", lineno)
        match = _INSTRUCTION.match(line)
        if match is None:
            raise ParseError(f"cannot parse '{line}'", lineno)
        name = match.group("name").lower()
        if name in _UNSUPPORTED:
            raise UnsupportedConstructError(f"'{name}' is not supported", lineno)
        args = _parse_args(match.group("args"), lineno)
        targets = match.group("targets").split()

        if name == "error":
            mechanism = _parse_error(args, targets, lineno)
            mechanisms.append(mechanism)
            if mechanism.detectors:
                max_detector = max(max_detector, mechanism.detectors[-1])
            if mechanism.observables:
                max_observable = max(max_observable, mechanism.observables.bit_length() - 1)
        elif name == "detector":
            for tok in targets:
                det = _DETECTOR.match(tok)
                if det is None:
                    raise ParseError(f"detector instruction expects D targets, got '{tok}'", lineno)
                index = int(det.group(1))
                max_detector = max(max_detector, index)
                if args:
                    coords[index] = tuple(args)
        elif name == "logical_observable":
            for tok in targets:
                obs = _OBSERVABLE.match(tok)
                if obs is None:
                    raise ParseError(f"logical_observable expects L targets, got '{tok}'", lineno)
                max_observable = max(max_observable, int(obs.group(1)))
        else:
            raise ParseError(f"unknown instruction '{name}'", lineno)

    num_detectors = max_detector + 1
    detector_coords = None
    if coords:
        detector_coords = tuple(coords.get(i) for i in range(num_detectors))
    h = ErrorHypergraph(
        mechanisms=tuple(mechanisms),
        num_detectors=num_detectors,
        num_observables=max_observable + 1,
        detector_basis=tuple(basis) if basis is not None else None,
        detector_coords=detector_coords,
    )
    logger.debug(f"Parsed {len(mechanisms)} mechanisms over {num_detectors} detectors")
    return h


def _targets(detectors: Sequence[int], observables: int) -> str:
    parts = [f"D{d}" for d in detectors] + [f"L{k}" for k in mask_bits(observables)]
    return " ".join(parts)


def _coord(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def serialize_dem(h: ErrorHypergraph) -> str:
    """Inverse of parse_dem: mechanism order is preserved and probabilities print exactly."""
    lines = []
    for m in h.mechanisms:
        if m.decomposition is None:
            body = _targets(m.detectors, m.observables)
        else:
            body = " ^ ".join(_targets(c.detectors, c.observables) for c in m.decomposition)
        lines.append(f"error({m.probability!r}) {body}".rstrip())

    declared = set()
    for i, c in enumerate(h.detector_coords or ()):
        if c is not None:
            lines.append(f"detector({', '.join(_coord(x) for x in c)}) D{i}")
            declared.add(i)
    last = h.num_detectors - 1
    if last >= 0 and last not in declared and not any(m.detectors and m.detectors[-1] == last for m in h.mechanisms):
        lines.append(f"detector D{last}")

    top = h.num_observables - 1
    if top >= 0 and not any((m.observables >> top) & 1 for m in h.mechanisms):
        lines.append(f"logical_observable L{top}")

    return "\n".join(lines) + "\n" if lines else ""
