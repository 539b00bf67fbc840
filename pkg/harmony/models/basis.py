"""
Detector basis tags: inference from decompositions and the JSON sidecar file.
"""
import json
import logging
from pathlib import Path
from typing import Dict, Tuple, Union

import networkx as nx
from networkx.utils import UnionFind

from harmony.core.errors import ConfigurationError
from harmony.models.hypergraph import ErrorHypergraph
from harmony.models.schemas import BasisAnnotation

logger = logging.getLogger(__name__)


def infer_basis(h: ErrorHypergraph) -> Tuple[str, ...]:
    """
    Two-colour detectors so that every decomposition component is monochromatic.

    Detectors sharing a component are one class; classes joined by the
    components of one decomposed mechanism get opposite colours. In each
    connected group the colour carrying an observable (else the one holding
    the lowest detector) is tagged Z.
    """
    classes = UnionFind(range(h.num_detectors))
    for m in h.mechanisms:
        for c in m.components():
            if len(c.detectors) == 2:
                classes.union(*c.detectors)
    # lowest detector of each class stands for it
    rep = {d: min(group) for group in classes.to_sets() for d in group}

    graph = nx.Graph()
    graph.add_nodes_from(set(rep.values()))
    carries_observable: Dict[int, bool] = {}
    for m in h.mechanisms:
        parts = m.components()
        roots = [rep[c.detectors[0]] for c in parts]
        for c, root in zip(parts, roots):
            if c.observables:
                carries_observable[root] = True
        for i in range(len(roots)):
            for j in range(i + 1, len(roots)):
                if roots[i] != roots[j]:
                    graph.add_edge(roots[i], roots[j])

    try:
        colour = nx.bipartite.color(graph)
    except nx.NetworkXError as e:
        raise ConfigurationError(
            "decompositions cannot be two-coloured into X and Z; supply a basis sidecar"
        ) from e

    tag: Dict[int, str] = {}
    for group in nx.connected_components(graph):
        flagged = {colour[r] for r in group if carries_observable.get(r)}
        if len(flagged) == 1:
            z_colour = flagged.pop()
        else:
            z_colour = colour[min(group)]
        for r in group:
            tag[r] = "Z" if colour[r] == z_colour else "X"

    basis = tuple(tag[rep[d]] for d in range(h.num_detectors))
    logger.info(f"Inferred basis: {basis.count('Z')} Z detectors, {basis.count('X')} X detectors")
    return basis


def write_basis(path: Union[str, Path], basis: Tuple[str, ...]) -> None:
    annotation = BasisAnnotation(num_detectors=len(basis), basis="".join(basis))
    Path(path).write_text(annotation.model_dump_json() + "\n")


def read_basis(path: Union[str, Path]) -> Tuple[str, ...]:
    try:
        annotation = BasisAnnotation.model_validate(json.loads(Path(path).read_text()))
    except (ValueError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"invalid basis sidecar {path}: {e}") from e
    return tuple(annotation.basis)


def sidecar_path(model_path: Union[str, Path]) -> Path:
    """Conventional sidecar location next to a model file."""
    return Path(f"{model_path}.basis.json")
