"""
Correlated matching.

A hypergraph with basis tags is projected into an X-type and a Z-type error
graph. Hyperedge mechanisms (one component in each graph) give every edge a
reweight set: once an edge is matched, the edges it co-occurs with become more
likely. Decoding is match, reweight, match again; the chosen edges are then
explained by the most probable set of mechanisms.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from harmony.core.config import settings
from harmony.core.errors import DecompositionError, InfeasibleSyndromeError, ModelError, RecoveryError
from harmony.decoders.matching import Edge, ErrorGraph, MatchResult, clamp_probability, make_edge, mwpm
from harmony.models.hypergraph import ErrorHypergraph, Shot, predicted_observables, triggered_detectors, xor_probability

logger = logging.getLogger(__name__)

EdgeKey = Tuple[str, int]  # (basis, edge index)


@dataclass(frozen=True)
class HyperPair:
    x_edge: int
    z_edge: int
    mechanism: int


@dataclass(frozen=True)
class ProjectedModel:
    hypergraph: ErrorHypergraph
    graph_x: ErrorGraph
    graph_z: ErrorGraph
    # S(e): matched edge -> ((edge in the opposite graph, q), ...)
    reweight_sets: Dict[EdgeKey, Tuple[Tuple[int, float], ...]]
    hyper_pairs: Tuple[HyperPair, ...]
    # per mechanism: (x edge or None, z edge or None)
    mechanism_edges: Tuple[Tuple[Optional[int], Optional[int]], ...]
    # second-pass priors of un-reweighted edges; None means same as pass one
    second_x: Optional[np.ndarray] = None
    second_z: Optional[np.ndarray] = None
    weight_fn: str = field(default_factory=lambda: settings.weight_function)

    def graph(self, basis: str) -> ErrorGraph:
        return self.graph_x if basis == "X" else self.graph_z

    def second_pass_priors(self, basis: str) -> np.ndarray:
        second = self.second_x if basis == "X" else self.second_z
        return self.graph(basis).probabilities if second is None else second


@dataclass(frozen=True, eq=False)
class ErrorHypothesis:
    mechanisms: FrozenSet[int]
    observables: np.ndarray
    log_likelihood: float
    matched_weight: float = 0.0


def log_likelihood(h: ErrorHypergraph, mechanisms: Iterable[int]) -> float:
    """ln Pr(configuration) under the model's own probabilities."""
    p = h.probabilities
    idx = sorted(set(int(m) for m in mechanisms))
    if idx and (idx[0] < 0 or idx[-1] >= len(p)):
        raise ModelError(f"mechanism index out of range for a model with {len(p)} mechanisms")
    total = float(np.log1p(-p).sum())
    if idx:
        chosen = p[idx]
        total += float((np.log(chosen) - np.log1p(-chosen)).sum())
    return total


def project(h: ErrorHypergraph, weight_fn: Optional[str] = None) -> ProjectedModel:
    """Split the hypergraph into X and Z error graphs plus reweight sets."""
    basis = h.require_basis()
    weight_fn = weight_fn or settings.weight_function
    floor = settings.probability_floor

    # (basis, endpoints) -> accumulated edge data, in first-seen order
    acc: Dict[Tuple[str, Tuple[int, ...]], dict] = {}
    placement: List[Dict[str, Tuple[int, ...]]] = []
    for m_idx, m in enumerate(h.mechanisms):
        parts = m.components()
        where: Dict[str, Tuple[int, ...]] = {}
        for c_idx, c in enumerate(parts):
            tags = {basis[d] for d in c.detectors}
            if len(tags) != 1:
                raise DecompositionError(f"mechanism {m_idx} has a component spanning both bases")
            b = tags.pop()
            if b in where:
                raise DecompositionError(f"mechanism {m_idx} has two components in the {b} graph")
            where[b] = c.detectors
            entry = acc.setdefault((b, c.detectors), {"p": 0.0, "sources": [], "mask": c.observables, "best": 0.0})
            if c.observables != entry["mask"]:
                logger.warning(
                    f"Edge {c.detectors} ({b}) merges mechanisms with different observable masks; "
                    f"keeping the mask of the most probable one"
                )
                if m.probability > entry["best"]:
                    entry["mask"] = c.observables
            entry["best"] = max(entry["best"], m.probability)
            entry["p"] = xor_probability(entry["p"], m.probability)
            entry["sources"].append((m_idx, c_idx))
        placement.append(where)

    edges: Dict[str, List[Edge]] = {"X": [], "Z": []}
    combined: Dict[str, List[float]] = {"X": [], "Z": []}
    edge_index: Dict[Tuple[str, Tuple[int, ...]], int] = {}
    for (b, dets), entry in acc.items():
        edge_index[(b, dets)] = len(edges[b])
        edges[b].append(make_edge(dets, entry["p"], entry["mask"], entry["sources"], weight_fn))
        combined[b].append(entry["p"])

    mechanism_edges = []
    hyper_pairs = []
    implied: Dict[EdgeKey, Dict[int, float]] = {}
    for m_idx, where in enumerate(placement):
        ex = edge_index[("X", where["X"])] if "X" in where else None
        ez = edge_index[("Z", where["Z"])] if "Z" in where else None
        mechanism_edges.append((ex, ez))
        if ex is None or ez is None:
            continue
        hyper_pairs.append(HyperPair(ex, ez, m_idx))
        p_m = h.mechanisms[m_idx].probability
        for b, e, target in (("X", ex, ez), ("Z", ez, ex)):
            q = min(p_m / combined[b][e], 1.0 - floor)
            targets = implied.setdefault((b, e), {})
            targets[target] = max(targets.get(target, 0.0), q)

    reweight_sets = {key: tuple(sorted(targets.items())) for key, targets in sorted(implied.items())}
    pm = ProjectedModel(
        hypergraph=h,
        graph_x=ErrorGraph(h.num_detectors, tuple(edges["X"]), "X"),
        graph_z=ErrorGraph(h.num_detectors, tuple(edges["Z"]), "Z"),
        reweight_sets=reweight_sets,
        hyper_pairs=tuple(hyper_pairs),
        mechanism_edges=tuple(mechanism_edges),
        weight_fn=weight_fn,
    )
    logger.debug(
        f"Projected {len(h)} mechanisms onto {len(pm.graph_x)} X edges, {len(pm.graph_z)} Z edges, "
        f"{len(hyper_pairs)} hyperedges"
    )
    return pm


def _split_events(pm: ProjectedModel, shot: Shot) -> Dict[str, List[int]]:
    basis = pm.hypergraph.require_basis()
    events: Dict[str, List[int]] = {"X": [], "Z": []}
    for d in sorted(shot.events):
        events[basis[d]].append(d)
    return events


def _reweighted(pm: ProjectedModel, first: Dict[str, MatchResult], assert_matched: bool) -> Dict[str, ErrorGraph]:
    candidates: Dict[str, Dict[int, float]] = {"X": {}, "Z": {}}
    for b, other in (("X", "Z"), ("Z", "X")):
        for e in first[b].edges:
            for target, q in pm.reweight_sets.get((b, e), ()):
                candidates[other][target] = max(candidates[other].get(target, 0.0), q)

    graphs = {}
    for b in ("X", "Z"):
        probs = np.array(pm.second_pass_priors(b), dtype=np.float64)
        for target, q in candidates[b].items():
            probs[target] = max(probs[target], q)
        graph = pm.graph(b).with_probabilities(probs, pm.weight_fn)
        if assert_matched:
            graph = graph.with_weights({e: 0.0 for e in first[b].edges})
        graphs[b] = graph
    return graphs


def _hypothesis(pm: ProjectedModel, chosen: Dict[str, MatchResult]) -> ErrorHypothesis:
    mechanisms = recover_mechanisms(pm, chosen["X"].edges, chosen["Z"].edges)
    h = pm.hypergraph
    return ErrorHypothesis(
        mechanisms=mechanisms,
        observables=predicted_observables(h, mechanisms),
        log_likelihood=log_likelihood(h, mechanisms),
        matched_weight=chosen["X"].total_weight + chosen["Z"].total_weight,
    )


def decode_uncorrelated(pm: ProjectedModel, shot: Shot) -> ErrorHypothesis:
    """One matching pass per graph, hyperedges treated as independent X and Z parts."""
    events = _split_events(pm, shot)
    first = {b: mwpm(pm.graph(b), events[b]) for b in ("X", "Z")}
    return _hypothesis(pm, first)


def decode_correlated(pm: ProjectedModel, shot: Shot, assert_matched: bool = False) -> ErrorHypothesis:
    """
    Match, reweight from the first-pass edges, match again.

    Each edge's second-pass probability is the largest of its own
    second-pass prior and every q implied by a first-pass matched edge. With
    `assert_matched` the first-pass edges also get weight zero in pass two.
    """
    events = _split_events(pm, shot)
    first = {b: mwpm(pm.graph(b), events[b]) for b in ("X", "Z")}
    graphs = _reweighted(pm, first, assert_matched)
    second = {b: mwpm(graphs[b], events[b]) for b in ("X", "Z")}
    return _hypothesis(pm, second)


def recover_mechanisms(pm: ProjectedModel, chosen_x: Iterable[int], chosen_z: Iterable[int]) -> FrozenSet[int]:
    """
    Most probable mechanism set whose projection is exactly the chosen edges.

    Chosen edges become vertices of an auxiliary matching problem: a hyperedge
    mechanism joining a chosen X edge to a chosen Z edge is a pairing edge of
    weight -ln p, and each vertex has a boundary edge weighted by its
    single-component mechanisms combined. Every vertex must be explained an
    odd number of times, which is a matching instance with all vertices lit.
    """
    h = pm.hypergraph
    vertices: List[EdgeKey] = [("X", e) for e in sorted(set(chosen_x))] + [("Z", e) for e in sorted(set(chosen_z))]
    if not vertices:
        return frozenset()
    position = {v: i for i, v in enumerate(vertices)}

    singles: Dict[EdgeKey, List[int]] = {}
    for m_idx, (ex, ez) in enumerate(pm.mechanism_edges):
        if ex is not None and ez is None:
            singles.setdefault(("X", ex), []).append(m_idx)
        elif ez is not None and ex is None:
            singles.setdefault(("Z", ez), []).append(m_idx)

    aux_edges: List[Edge] = []
    owners: List[int] = []
    for v in vertices:
        candidates = singles.get(v)
        if not candidates:
            continue
        combined = 0.0
        for m_idx in candidates:
            combined = xor_probability(combined, h.mechanisms[m_idx].probability)
        best = max(candidates, key=lambda m: (h.mechanisms[m].probability, -m))
        aux_edges.append(Edge((position[v],), clamp_probability(combined), -math.log(combined)))
        owners.append(best)
    for pair in sorted(pm.hyper_pairs, key=lambda hp: hp.mechanism):
        vx, vz = ("X", pair.x_edge), ("Z", pair.z_edge)
        if vx in position and vz in position:
            p_m = h.mechanisms[pair.mechanism].probability
            aux_edges.append(Edge((position[vx], position[vz]), clamp_probability(p_m), -math.log(p_m)))
            owners.append(pair.mechanism)

    covered = {d for e in aux_edges for d in e.endpoints}
    orphans = [vertices[i] for i in range(len(vertices)) if i not in covered]
    if orphans:
        raise RecoveryError(f"chosen edges {orphans} have no single-mechanism explanation and no pairing partner")

    aux = ErrorGraph(len(vertices), tuple(aux_edges), "recovery")
    try:
        result = mwpm(aux, range(len(vertices)))
    except InfeasibleSyndromeError as e:
        raise RecoveryError(f"chosen edges cannot be explained by mechanisms: {e}") from e

    mechanisms: set = set()
    for i in result.edges:
        mechanisms ^= {owners[i]}
    return frozenset(mechanisms)


def check_hypothesis(h: ErrorHypergraph, shot: Shot, hypothesis: ErrorHypothesis) -> None:
    """Raise if the hypothesis does not reproduce the shot's detection events."""
    fired = triggered_detectors(h, hypothesis.mechanisms)
    if not np.array_equal(fired, shot.detection_events):
        raise ModelError("hypothesis does not reproduce the detection events")
    if not np.array_equal(hypothesis.observables, predicted_observables(h, hypothesis.mechanisms)):
        raise ModelError("hypothesis observables disagree with its mechanisms")
