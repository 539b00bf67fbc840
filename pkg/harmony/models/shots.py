"""
Line-oriented shot files.

Each line is a bit string of detection events, optionally followed by a space
and the bit string of true observable flips. Paths ending in `.gz` are read
and written through gzip.
"""
import gzip
from pathlib import Path
from typing import IO, Iterable, List, Optional, Union

import numpy as np

from harmony.core.errors import ModelError, ParseError
from harmony.models.hypergraph import ErrorHypergraph, Shot


def _open(path: Union[str, Path], mode: str) -> IO[str]:
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def bits_to_str(bits: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def str_to_bits(text: str) -> np.ndarray:
    if text and set(text) - {"0", "1"}:
        raise ValueError(f"not a bit string: '{text}'")
    return np.fromiter((c == "1" for c in text), dtype=np.uint8, count=len(text))


def parse_shot_line(line: str, h: Optional[ErrorHypergraph] = None, lineno: Optional[int] = None) -> Shot:
    fields = line.split()
    if not 1 <= len(fields) <= 2:
        raise ParseError(f"expected '<detector bits> [<observable bits>]', got '{line.strip()}'", lineno)
    try:
        detections = str_to_bits(fields[0])
        observables = str_to_bits(fields[1]) if len(fields) == 2 else None
    except ValueError as e:
        raise ParseError(str(e), lineno) from e
    shot = Shot(detections, observables)
    if h is not None:
        try:
            shot.check(h)
        except ModelError as e:
            raise ParseError(str(e), lineno) from e
    return shot


def format_shot(shot: Shot) -> str:
    line = bits_to_str(shot.detection_events)
    if shot.true_observables is not None:
        line += " " + bits_to_str(shot.true_observables)
    return line


def read_shots(path: Union[str, Path], h: Optional[ErrorHypergraph] = None) -> List[Shot]:
    shots = []
    with _open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            if line.strip():
                shots.append(parse_shot_line(line, h, lineno))
    return shots


def write_shots(path: Union[str, Path], shots: Iterable[Shot]) -> int:
    count = 0
    with _open(path, "w") as f:
        for shot in shots:
            f.write(format_shot(shot) + "\n")
            count += 1
    return count
