"""
Exact minimum-weight perfect matching on a single-basis error graph.

Defects are joined by shortest-path distances in the error graph; each defect
also gets a private boundary copy, and boundary copies pair up among
themselves at zero cost. A maximum-cardinality maximum-weight matching over
negated integer distances is then a minimum-weight perfect matching, and the
matched pairs are expanded back to error-graph edges by symmetric difference
of their shortest paths.
"""
import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from harmony.core.config import settings
from harmony.core.errors import InfeasibleSyndromeError, ModelError

logger = logging.getLogger(__name__)

BOUNDARY = -1
# weights are quantized to integers before solving so distances add exactly
WEIGHT_RESOLUTION = 1e-9

Source = Tuple[int, int]  # (mechanism index, component index)


def clamp_probability(p: float, floor: Optional[float] = None) -> float:
    floor = settings.probability_floor if floor is None else floor
    return min(max(float(p), floor), 0.5 - floor)


def log_odds_weight(p: float) -> float:
    p = clamp_probability(p)
    return math.log((1.0 - p) / p)


def neg_log_weight(p: float) -> float:
    return -math.log(clamp_probability(p))


WEIGHT_FUNCTIONS: Dict[str, Callable[[float], float]] = {
    "log_odds": log_odds_weight,
    "neg_log": neg_log_weight,
}


def weight_function(name: Optional[str] = None) -> Callable[[float], float]:
    return WEIGHT_FUNCTIONS[name or settings.weight_function]


@dataclass(frozen=True)
class Edge:
    endpoints: Tuple[int, ...]
    probability: float
    weight: float
    observables: int = 0
    sources: Tuple[Source, ...] = ()

    def __post_init__(self):
        ends = tuple(sorted(int(d) for d in self.endpoints))
        if not 1 <= len(ends) <= 2 or len(set(ends)) != len(ends):
            raise ModelError(f"edge endpoints must be one or two distinct detectors, got {self.endpoints}")
        if self.weight < 0 or math.isnan(self.weight):
            raise ModelError(f"edge {ends} has invalid weight {self.weight}")
        object.__setattr__(self, "endpoints", ends)
        object.__setattr__(self, "sources", tuple(self.sources))

    @property
    def is_boundary(self) -> bool:
        return len(self.endpoints) == 1


def make_edge(
    endpoints: Sequence[int],
    probability: float,
    observables: int = 0,
    sources: Iterable[Source] = (),
    weight_fn: Optional[str] = None,
) -> Edge:
    p = clamp_probability(probability)
    return Edge(tuple(endpoints), p, weight_function(weight_fn)(p), observables, tuple(sources))


@dataclass(frozen=True)
class ErrorGraph:
    """Matching graph of one basis; detector indices are global hypergraph indices."""

    num_detectors: int
    edges: Tuple[Edge, ...]
    basis: str = "Z"

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        for e in self.edges:
            if e.endpoints[-1] >= self.num_detectors:
                raise ModelError(f"edge {e.endpoints} references a detector >= {self.num_detectors}")

    def __len__(self) -> int:
        return len(self.edges)

    @cached_property
    def probabilities(self) -> np.ndarray:
        return np.array([e.probability for e in self.edges], dtype=np.float64)

    @cached_property
    def nodes(self) -> FrozenSet[int]:
        return frozenset(d for e in self.edges for d in e.endpoints)

    @cached_property
    def index(self) -> Dict[Tuple[int, ...], int]:
        """Endpoint set -> edge index."""
        return {e.endpoints: i for i, e in reversed(list(enumerate(self.edges)))}

    def with_probabilities(self, probabilities: Sequence[float], weight_fn: Optional[str] = None) -> "ErrorGraph":
        """Same topology, new probabilities (and therefore weights)."""
        fn = weight_function(weight_fn)
        edges = []
        for e, p in zip(self.edges, probabilities):
            p = clamp_probability(p)
            edges.append(replace(e, probability=p, weight=fn(p)))
        return replace(self, edges=tuple(edges))

    def with_weights(self, weights: Dict[int, float]) -> "ErrorGraph":
        """Override the weights of selected edges, probabilities untouched."""
        edges = list(self.edges)
        for i, w in weights.items():
            edges[i] = replace(edges[i], weight=float(w))
        return replace(self, edges=tuple(edges))

    @cached_property
    def _solver_graph(self) -> nx.Graph:
        # lowest-index edge wins among parallel edges of equal weight
        graph = nx.Graph()
        graph.add_nodes_from(sorted(self.nodes))
        graph.add_node(BOUNDARY)
        for i, e in enumerate(self.edges):
            u, v = (e.endpoints[0], BOUNDARY) if e.is_boundary else e.endpoints
            w = int(round(e.weight / WEIGHT_RESOLUTION))
            if graph.has_edge(u, v) and graph[u][v]["weight"] <= w:
                continue
            graph.add_edge(u, v, weight=w, index=i)
        return graph


@dataclass(frozen=True)
class MatchResult:
    edges: FrozenSet[int]
    total_weight: float


def syndrome(g: ErrorGraph, edges: Iterable[int]) -> FrozenSet[int]:
    """Detectors flipped an odd number of times by the edge set."""
    flipped: set = set()
    for i in edges:
        flipped ^= set(g.edges[i].endpoints)
    return frozenset(flipped)


def mwpm(g: ErrorGraph, events: Iterable[int]) -> MatchResult:
    """Minimum-weight edge set whose syndrome equals `events`."""
    defects = sorted(set(int(d) for d in events))
    if not defects:
        return MatchResult(frozenset(), 0.0)
    missing = [d for d in defects if d not in g.nodes]
    if missing:
        raise InfeasibleSyndromeError(f"detection events {missing} are not in the {g.basis} graph")

    graph = g._solver_graph
    distances: Dict[int, Dict[int, int]] = {}
    paths: Dict[int, Dict[int, List[int]]] = {}
    for d in defects:
        distances[d], paths[d] = nx.single_source_dijkstra(graph, d, weight="weight")

    # nodes: ("d", k) for defect k, ("b", k) for its boundary copy; every
    # perfect matching has n edges, so offsetting by `ceiling` keeps weights
    # positive without changing the argmin
    n = len(defects)
    reachable = [distances[d].get(t) for d in defects for t in defects + [BOUNDARY]]
    ceiling = 1 + max((x for x in reachable if x is not None), default=0)
    matching_graph = nx.Graph()
    for a in range(n):
        for b in range(a + 1, n):
            dist = distances[defects[a]].get(defects[b])
            if dist is not None:
                matching_graph.add_edge(("d", a), ("d", b), weight=ceiling - dist)
            matching_graph.add_edge(("b", a), ("b", b), weight=ceiling)
        dist = distances[defects[a]].get(BOUNDARY)
        if dist is not None:
            matching_graph.add_edge(("d", a), ("b", a), weight=ceiling - dist)

    matching = nx.max_weight_matching(matching_graph, maxcardinality=True, weight="weight")
    partner: Dict[int, Tuple[str, int]] = {}
    for u, v in matching:
        if u[0] == "d":
            partner[u[1]] = v
        if v[0] == "d":
            partner[v[1]] = u
    if len(partner) != n:
        raise InfeasibleSyndromeError(
            f"no edge set of the {g.basis} graph produces detection events {defects}"
        )

    chosen: set = set()
    for a in range(n):
        kind, b = partner[a]
        if kind == "d" and b < a:
            continue
        target = defects[b] if kind == "d" else BOUNDARY
        path = paths[defects[a]][target]
        for u, v in zip(path, path[1:]):
            chosen ^= {graph[u][v]["index"]}

    total = float(sum(g.edges[i].weight for i in chosen))
    logger.debug(f"Matched {n} defects in the {g.basis} graph with {len(chosen)} edges, weight {total:.6g}")
    return MatchResult(frozenset(chosen), total)
