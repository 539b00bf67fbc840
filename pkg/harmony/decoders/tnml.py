"""
Maximum-likelihood decoding.

The likelihood of an observable value is the total probability of every
error configuration that reproduces the detection events and flips the
observable to that value. Small models are summed exhaustively. Larger ones
are laid out as a planar Tanner grid (one row per mechanism, one column per
detector, observables last) and contracted column by column as a matrix
product state whose bond dimension is capped at chi.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from harmony.core.config import settings
from harmony.core.errors import NumericalError, ProblemTooLargeError
from harmony.decoders.mps import MpsState
from harmony.models.hypergraph import ErrorHypergraph, Shot, is_reachable, mask_bits

logger = logging.getLogger(__name__)

Likelihoods = List[Tuple[float, float]]

_CHUNK = 1 << 16


def likelihoods_exact(h: ErrorHypergraph, shot: Shot) -> Likelihoods:
    """Unnormalised (L0, L1) per observable by enumerating all 2^M configurations."""
    shot.check(h)
    m = len(h)
    if m > settings.exact_ml_max_mechanisms:
        raise ProblemTooLargeError(
            f"exhaustive likelihood over {m} mechanisms exceeds the bound of {settings.exact_ml_max_mechanisms}"
        )
    p = h.probabilities
    log_on, log_off = np.log(p), np.log1p(-p)
    dets = h.detector_matrix.astype(np.int64)
    obs = h.observable_matrix.astype(np.int64)
    target = shot.detection_events.astype(np.int64)
    totals = np.zeros((h.num_observables, 2))
    shifts = np.arange(m, dtype=np.int64)

    for start in range(0, 1 << m, _CHUNK):
        configs = np.arange(start, min(start + _CHUNK, 1 << m), dtype=np.int64)
        bits = (configs[:, None] >> shifts) & 1
        fired = (bits @ dets) % 2
        ok = np.all(fired == target, axis=1)
        if not ok.any():
            continue
        bits = bits[ok]
        weight = np.exp(bits @ log_on + (1 - bits) @ log_off)
        flips = (bits @ obs) % 2
        for k in range(h.num_observables):
            totals[k, 0] += weight[flips[:, k] == 0].sum()
            totals[k, 1] += weight[flips[:, k] == 1].sum()
    return [(float(a), float(b)) for a, b in totals]


def _column_key(index: int, coords: Optional[Tuple[float, ...]]) -> tuple:
    # (round, then spatial coordinates from slowest to fastest)
    return (coords[-1], *reversed(coords[:-1]), index)


@dataclass(frozen=True)
class TannerGrid:
    hypergraph: ErrorHypergraph
    # detector indices in column order; observable k sits at column num_detectors + k
    column_order: Tuple[int, ...]
    # mechanism indices in row order (by first touched column)
    row_order: Tuple[int, ...]
    first_column: Tuple[int, ...]
    last_column: Tuple[int, ...]
    # per column, the mechanisms holding a parity tensor there, in row order
    column_rows: Tuple[Tuple[int, ...], ...]

    @property
    def num_columns(self) -> int:
        return self.hypergraph.num_detectors + self.hypergraph.num_observables

    @cached_property
    def occupancy(self) -> np.ndarray:
        """(rows x columns) incidence in grid order."""
        row_pos = {m: r for r, m in enumerate(self.row_order)}
        grid = np.zeros((len(self.row_order), self.num_columns), dtype=np.uint8)
        for col, rows in enumerate(self.column_rows):
            for m in rows:
                grid[row_pos[m], col] = 1
        return grid

    def crossings(self, column: int) -> Tuple[int, ...]:
        """Mechanisms alive across `column` without touching it."""
        touching = set(self.column_rows[column])
        return tuple(
            m for m in self.row_order
            if self.first_column[m] < column < self.last_column[m] and m not in touching
        )

    @property
    def bandwidth(self) -> int:
        """Widest column span of any row."""
        spans = [self.last_column[m] - self.first_column[m] for m in self.row_order]
        return max(spans, default=0)


def build_grid(h: ErrorHypergraph) -> TannerGrid:
    coords = h.detector_coords
    if h.num_detectors and (coords is None or any(c is None or len(c) == 0 for c in coords)):
        logger.warning("Detector coordinates missing; ordering tensor network columns by detector index")
        column_order = tuple(range(h.num_detectors))
    else:
        column_order = tuple(sorted(range(h.num_detectors), key=lambda i: _column_key(i, coords[i])))
    column_of = {d: c for c, d in enumerate(column_order)}

    first, last = [], []
    columns: List[List[int]] = [[] for _ in range(h.num_detectors + h.num_observables)]
    for m_idx, m in enumerate(h.mechanisms):
        cols = [column_of[d] for d in m.detectors] + [h.num_detectors + k for k in mask_bits(m.observables)]
        first.append(min(cols))
        last.append(max(cols))
        for c in cols:
            columns[c].append(m_idx)

    row_order = tuple(sorted(range(len(h)), key=lambda i: (first[i], i)))
    row_pos = {m: r for r, m in enumerate(row_order)}
    column_rows = tuple(tuple(sorted(rows, key=row_pos.__getitem__)) for rows in columns)
    return TannerGrid(h, column_order, row_order, tuple(first), tuple(last), column_rows)


def _normalised(pair: np.ndarray) -> Optional[Tuple[float, float]]:
    if not np.all(np.isfinite(pair)):
        raise NumericalError("likelihood contraction produced non-finite values")
    pair = np.clip(pair, 0.0, None)
    total = pair.sum()
    if total <= 0.0:
        return None
    return (float(pair[0] / total), float(pair[1] / total))


def contract_mps(grid: TannerGrid, shot: Shot, chi: Optional[int] = None, cutoff: float = 0.0) -> Likelihoods:
    """
    Normalised (L0, L1) per observable from a left-to-right MPS evolution.

    Rows are born as (1 - p, p) sites at their first column and summed out
    after their last one. Each detector column applies a parity constraint
    with the observed bit as target; bonds are truncated to chi after every
    column. Observables are closed one at a time on copies of the final state.
    All-zero pairs mean the detection events are impossible under the model;
    a reachable syndrome whose contraction still vanishes raises
    NumericalError.
    """
    h = grid.hypergraph
    shot.check(h)
    if chi is not None and chi < 1:
        raise ValueError(f"bond dimension must be >= 1, got {chi}")
    p = h.probabilities
    state = MpsState()
    born = set()
    births: List[List[int]] = [[] for _ in range(grid.num_columns)]
    deaths: List[List[int]] = [[] for _ in range(grid.num_columns)]
    for m in grid.row_order:
        births[grid.first_column[m]].append(m)
        deaths[grid.last_column[m]].append(m)

    for col, detector in enumerate(grid.column_order):
        for m in births[col]:
            state.append_site(m, (1.0 - p[m], p[m]))
            born.add(m)
        positions = [state.position(m) for m in grid.column_rows[col]]
        state.apply_parity(positions, int(shot.detection_events[detector]))
        for m in deaths[col]:
            state.trace_out(state.position(m))
        state.compress(chi, cutoff)
        if state.vanished:
            break

    for m in grid.row_order:
        if m not in born:
            state.append_site(m, (1.0 - p[m], p[m]))

    results: List[Optional[Tuple[float, float]]] = []
    for k in range(h.num_observables):
        closing = state.copy()
        closing.append_site(-1, (1.0, 1.0))
        rows = grid.column_rows[h.num_detectors + k]
        closing.apply_parity([closing.position(m) for m in rows] + [len(closing) - 1], 0)
        results.append(_normalised(closing.open_last()))
    logger.debug(f"MPS contraction: max bond {state.max_bond}, truncation error {state.truncation_error:.3g}")

    if state.vanished or any(r is None for r in results):
        if is_reachable(h, shot.detection_events):
            raise NumericalError(
                f"contraction vanished for a reachable syndrome (chi={chi}, "
                f"truncation error {state.truncation_error:.3g})"
            )
        return [(0.0, 0.0)] * h.num_observables
    return results


def _decide(pairs: Sequence[Tuple[float, float]]) -> np.ndarray:
    return np.array([1 if l1 > l0 else 0 for l0, l1 in pairs], dtype=np.uint8)


class TnmlDecoder:
    """Maximum-likelihood decoder with the grid built once per model."""

    def __init__(self, h: ErrorHypergraph, chi: Optional[int] = None, exact: Optional[bool] = None):
        self.hypergraph = h
        self.chi = chi if chi is not None else settings.default_chi
        self.exact = len(h) <= settings.exact_ml_max_mechanisms if exact is None else exact
        self.grid = None if self.exact else build_grid(h)

    def likelihoods(self, shot: Shot) -> Likelihoods:
        if self.exact:
            return likelihoods_exact(self.hypergraph, shot)
        return contract_mps(self.grid, shot, self.chi, settings.svd_cutoff)

    def decode(self, shot: Shot) -> np.ndarray:
        return _decide(self.likelihoods(shot))


def decode_ml(h: ErrorHypergraph, shot: Shot, chi: Optional[int] = None) -> np.ndarray:
    """argmax L per observable, ties to 0; exhaustive when the model is small enough."""
    return TnmlDecoder(h, chi).decode(shot)
