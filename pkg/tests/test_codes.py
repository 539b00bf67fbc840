"""
Tests for the phenomenological code generators
"""
import networkx as nx
import numpy as np
import pytest

from harmony.codes.generators import gen_repetition_phenom, gen_surface_phenom, generate, rotated_layout
from harmony.core.errors import ConfigurationError
from harmony.decoders.correlated import project
from harmony.models.hypergraph import triggered_detectors
from harmony.models.schemas import CodeSpec


class TestRepetition:
    def test_counts_d3_r1(self):
        """Two layers of two detectors; three space-like and two time-like mechanisms"""
        h = gen_repetition_phenom(CodeSpec(family="repetition", distance=3, rounds=1, p=0.05))
        assert h.num_detectors == 4
        assert len(h) == 5
        assert sum(1 for m in h.mechanisms if m.detectors[-1] < 2) == 3

    def test_graphlike(self, repetition_model):
        """Every mechanism touches at most two detectors"""
        assert all(len(m.detectors) <= 2 for m in repetition_model.mechanisms)
        assert set(repetition_model.detector_basis) == {"Z"}

    def test_one_logical_flip_per_round(self, repetition_model):
        """Only the first data qubit of each round carries L0"""
        assert sum(m.observables for m in repetition_model.mechanisms) == 2

    def test_wrong_family(self):
        """Generators check the family they are given"""
        with pytest.raises(ConfigurationError):
            gen_repetition_phenom(CodeSpec(family="rotated_surface", distance=3, rounds=1, p=0.05))


class TestRotatedLayout:
    @pytest.mark.parametrize("d", [3, 5, 7])
    def test_stabilizer_counts(self, d):
        """(d^2 - 1) / 2 checks of each type that pairwise commute"""
        layout = rotated_layout(d)
        xs, zs = layout.of_basis("X"), layout.of_basis("Z")
        assert len(xs) == len(zs) == (d * d - 1) // 2
        for x in xs:
            for z in zs:
                assert len(set(layout.support[x]) & set(layout.support[z])) % 2 == 0

    def test_logical_commutes_with_x_checks(self):
        """The logical Z row meets every X check evenly"""
        layout = rotated_layout(5)
        assert len(layout.logical_z) == 5
        for pq in layout.of_basis("X"):
            assert len(set(layout.support[pq]) & set(layout.logical_z)) % 2 == 0


class TestSurface:
    def test_counts_d3_r1(self):
        """One round has no X detectors, so Y errors collapse onto the Z graph"""
        h = gen_surface_phenom(CodeSpec(family="rotated_surface", distance=3, rounds=1, p=0.03))
        assert h.num_detectors == 8
        assert len(h) == 9 + 9 + 4
        assert set(h.detector_basis) == {"Z"}

    def test_y_mechanisms_decompose(self, surface_model):
        """Y errors split into one monochromatic component per basis"""
        basis = surface_model.detector_basis
        hyper = [m for m in surface_model.mechanisms if m.decomposition is not None]
        assert hyper
        for m in hyper:
            tags = [{basis[d] for d in c.detectors} for c in m.decomposition]
            assert all(len(t) == 1 for t in tags)
            assert sorted(t.pop() for t in tags) == ["X", "Z"]

    def test_measurement_probability(self, surface_model):
        """Data errors have p/3 and measurement flips 2p/3"""
        probs = {round(m.probability, 12) for m in surface_model.mechanisms}
        assert probs == {round(0.04 / 3, 12), round(0.08 / 3, 12)}

    def test_uniform_projected_edges(self):
        """Treating Y as independent X and Z puts every bulk edge at 2p/3 to first order"""
        p = 0.03
        pm = project(generate(CodeSpec(family="rotated_surface", distance=3, rounds=3, p=p)))
        for graph in (pm.graph_x, pm.graph_z):
            bulk = [e.probability for e in graph.edges if not e.is_boundary]
            assert bulk
            assert np.allclose(bulk, 2 * p / 3, rtol=p)

    def test_detectors_self_consistent(self, surface_model):
        """Each mechanism alone triggers exactly its declared detectors"""
        for i, m in enumerate(surface_model.mechanisms):
            assert np.flatnonzero(triggered_detectors(surface_model, [i])).tolist() == list(m.detectors)

    def test_time_coordinate_last(self, surface_model):
        """Coordinates end with the round index"""
        rounds = {c[-1] for c in surface_model.detector_coords}
        assert rounds == {0.0, 1.0, 2.0}

    def test_column_matches_repetition_graph(self):
        """The Z graph restricted to the checks of data column x = 1 is the d = 3 repetition graph"""
        rounds = 3
        surface = project(generate(CodeSpec(family="rotated_surface", distance=3, rounds=rounds, p=0.03)))
        repetition = project(generate(CodeSpec(family="repetition", distance=3, rounds=rounds, p=0.03)))
        coords = surface.hypergraph.detector_coords
        column = {i for i, c in enumerate(coords) if (c[0], c[1]) in ((2.0, 2.0), (4.0, 4.0))}

        def as_nx(edges):
            graph = nx.Graph()
            for e in edges:
                graph.add_edge(e.endpoints[0], "boundary" if e.is_boundary else e.endpoints[1])
            return graph

        restricted = as_nx(e for e in surface.graph_z.edges if set(e.endpoints) <= column)
        assert restricted.number_of_nodes() == len(column) + 1
        assert nx.is_isomorphic(restricted, as_nx(repetition.graph_z.edges))
