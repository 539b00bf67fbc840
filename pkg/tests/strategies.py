"""
Hypothesis strategies for random error models
"""
from hypothesis import strategies as st

from harmony.decoders.matching import ErrorGraph, make_edge
from harmony.models.hypergraph import Component, ErrorHypergraph, Mechanism

probabilities = st.floats(min_value=0.01, max_value=0.45, allow_nan=False, allow_infinity=False)


@st.composite
def error_graphs(draw, max_detectors: int = 8, max_edges: int = 12) -> ErrorGraph:
    n = draw(st.integers(min_value=1, max_value=max_detectors))
    count = draw(st.integers(min_value=1, max_value=max_edges))
    edges = []
    for _ in range(count):
        if n > 1 and draw(st.booleans()):
            endpoints = tuple(draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True)))
        else:
            endpoints = (draw(st.integers(0, n - 1)),)
        edges.append(make_edge(endpoints, draw(probabilities)))
    return ErrorGraph(n, tuple(edges))


@st.composite
def hypergraphs(draw, max_detectors: int = 5, max_mechanisms: int = 10, max_observables: int = 2) -> ErrorHypergraph:
    """Arbitrary (possibly non-graphlike) models, including observable-only mechanisms."""
    n = draw(st.integers(min_value=1, max_value=max_detectors))
    k = draw(st.integers(min_value=1, max_value=max_observables))
    mechanisms = []
    for _ in range(draw(st.integers(min_value=1, max_value=max_mechanisms))):
        dets = tuple(sorted(draw(st.sets(st.integers(0, n - 1), max_size=min(n, 4)))))
        mask = draw(st.integers(min_value=0, max_value=(1 << k) - 1))
        if not dets and not mask:
            mask = 1
        mechanisms.append(Mechanism(draw(probabilities), dets, mask))
    coords = tuple((float(i), 0.0) for i in range(n)) if draw(st.booleans()) else None
    return ErrorHypergraph(tuple(mechanisms), n, k, detector_coords=coords)


@st.composite
def decomposed_hypergraphs(draw, max_detectors: int = 6, max_mechanisms: int = 8) -> ErrorHypergraph:
    """Basis-tagged models whose mechanisms are graph-like or split into one X and one Z part."""
    n = draw(st.integers(min_value=2, max_value=max_detectors))
    basis = draw(st.lists(st.sampled_from("XZ"), min_size=n, max_size=n))
    by_basis = {b: [i for i in range(n) if basis[i] == b] for b in "XZ"}

    def component(b):
        dets = by_basis[b]
        size = draw(st.integers(1, min(2, len(dets))))
        chosen = draw(st.lists(st.sampled_from(dets), min_size=size, max_size=size, unique=True))
        return Component(tuple(chosen), draw(st.integers(0, 1)))

    mechanisms = []
    for _ in range(draw(st.integers(min_value=1, max_value=max_mechanisms))):
        p = draw(probabilities)
        bases = [b for b in "XZ" if by_basis[b]]
        if len(bases) == 2 and draw(st.booleans()):
            mechanisms.append(Mechanism.from_components(p, [component("Z"), component("X")]))
        else:
            mechanisms.append(Mechanism.from_components(p, [component(draw(st.sampled_from(bases)))]))
    return ErrorHypergraph(tuple(mechanisms), n, 1, detector_basis=tuple(basis))
