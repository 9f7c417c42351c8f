"""
Tests for layer centralities
"""
import unittest

import numpy as np
import networkx as nx

from pymlt.core.analysis.centrality import (CORRELATION_KINDS, centrality, centrality_correlations,
                                            katz_alpha)
from pymlt.core.errors import DomainError
from pymlt.core.graph import MultiplexGraph
from tests import random_graph, random_params


class TestCentrality(unittest.TestCase):

    def setUp(self):
        self.path = MultiplexGraph(3, 1, [[(0, 1), (1, 2)]])

    def test_katz_alpha(self):
        """0.85 over the spectral radius, 0.85 without cycles"""
        self.assertAlmostEqual(katz_alpha(nx.DiGraph([(0, 1), (1, 2), (2, 0)])), 0.85)
        self.assertAlmostEqual(katz_alpha(nx.complete_graph(3, create_using=nx.DiGraph)), 0.425)
        self.assertEqual(katz_alpha(self.path.layer_digraph(0)), 0.85)

    def test_katz_roles(self):
        """Targets collect along the path, sources along the reversed path"""
        np.testing.assert_allclose(centrality(self.path, 0, "katz"), [1.0, 1.85, 2.5725])
        np.testing.assert_allclose(centrality(self.path, 0, "katz", role="source"), [2.5725, 1.85, 1.0])

    def test_harmonic_closeness(self):
        np.testing.assert_allclose(centrality(self.path, 0, "closeness"), [0.0, 1.0, 1.5])
        np.testing.assert_allclose(centrality(self.path, 0, "closeness", role="source"), [1.5, 1.0, 0.0])

    def test_betweenness(self):
        """Unnormalized counts over ordered pairs"""
        graph = MultiplexGraph(4, 1, [[(0, 1), (1, 2), (2, 3)]])
        np.testing.assert_allclose(centrality(graph, 0, "betweenness"), [0.0, 2.0, 2.0, 0.0])

    def test_degrees(self):
        star = MultiplexGraph(4, 1, [[(0, 1), (0, 2), (0, 3)]])
        np.testing.assert_array_equal(centrality(star, 0, "out_degree"), [3, 0, 0, 0])
        np.testing.assert_array_equal(centrality(star, 0, "in_degree"), [0, 1, 1, 1])

    def test_empty_layer(self):
        graph = MultiplexGraph(3, 2, [[(0, 1)], []])
        for kind in ("katz", "closeness", "betweenness"):
            np.testing.assert_array_equal(centrality(graph, 1, kind), np.zeros(3))

    def test_unknown(self):
        self.assertRaises(DomainError, centrality, self.path, 0, "pagerank")
        self.assertRaises(DomainError, centrality, self.path, 0, "katz", "both")


class TestCentralityCorrelations(unittest.TestCase):

    def test_centrality_correlations(self):
        """One entry per layer, kind and bias group"""
        graph = random_graph(12, 2, density=0.3, seed=8)
        results = centrality_correlations(graph, random_params(12, 2, 2, seed=1))
        self.assertEqual(sorted(results), [0, 1])
        for layer in range(2):
            self.assertEqual(sorted(results[layer]), sorted(CORRELATION_KINDS))
            for kind in CORRELATION_KINDS:
                for name in ("beta", "gamma"):
                    rho = results[layer][kind][name]["spearman"]
                    self.assertTrue(np.isnan(rho) or -1.0 <= rho <= 1.0)

    def test_degree_tracks_bias(self):
        """A sender bias equal to the out-degree correlates perfectly"""
        graph = random_graph(12, 1, density=0.4, seed=2)
        params = random_params(12, 1, 2, seed=3)
        out_degree = graph.layer_adjacency(0).sum(axis=1).astype(float)
        params = params.with_arrays({"beta": out_degree[:, None]})
        result = centrality_correlations(graph, params, kinds=("degree",))
        self.assertAlmostEqual(result[0]["degree"]["beta"]["pearson"], 1.0)


if __name__ == "__main__":
    unittest.main()
