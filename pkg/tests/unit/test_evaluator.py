"""
Tests for folds, negative sets, ranking metrics and cross-validation
"""
import json
import unittest

import numpy as np
from scipy import stats
from sklearn import metrics

from pymlt.core.errors import DomainError, InsufficientNonEdgesError
from pymlt.core.evaluator import (evaluate_cv, make_folds, negative_sets, paired_t_test, pr_auc,
                                  roc_auc)
from pymlt.core.graph import MultiplexGraph
from pymlt.core.helpers import dumps_json
from tests import quick_config, random_graph


def path_edges(n_edges, n_nodes=30):
    """ The first ``n_edges`` pairs (i, j), i != j, in row order """
    pairs = [(i, j) for i in range(n_nodes) for j in range(n_nodes) if i != j]
    return pairs[:n_edges]


class TestFolds(unittest.TestCase):

    def test_make_folds_exact_split(self):
        """10 positives in 10 folds gives one positive per fold"""
        plan = make_folds(MultiplexGraph(30, 1, [path_edges(10)]), 10, seed=0)
        self.assertEqual([len(fold) for fold in plan.folds[0]], [1] * 10)

    def test_make_folds_partition(self):
        """23 positives: sizes 3, 3, 3, 2, ..., 2, disjoint and covering"""
        graph = MultiplexGraph(30, 1, [path_edges(23)])
        plan = make_folds(graph, 10, seed=1)
        self.assertEqual([len(fold) for fold in plan.folds[0]], [3, 3, 3] + [2] * 7)
        held_out = [tuple(pair) for fold in plan.folds[0] for pair in fold.tolist()]
        self.assertEqual(len(held_out), len(set(held_out)))
        self.assertEqual(set(held_out), set(graph.edges[0]))

    def test_make_folds_deterministic(self):
        graph = random_graph(10, 2, seed=3)
        first, second = make_folds(graph, 4, seed=9), make_folds(graph, 4, seed=9)
        for layer in range(2):
            for a, b in zip(first.folds[layer], second.folds[layer]):
                np.testing.assert_array_equal(a, b)

    def test_make_folds_small_layers(self):
        """Too few positives reduce the folds, no positives exclude the layer"""
        graph = MultiplexGraph(5, 3, [path_edges(12, 5), [(0, 1), (1, 2), (2, 3)], []])
        with self.assertLogs("pymlt.core.evaluator", level="WARNING"):
            plan = make_folds(graph, 10, seed=0)
        self.assertEqual(plan.layer_fold_count(1), 3)
        self.assertEqual(plan.excluded_layers, [2])
        self.assertEqual(plan.n_rounds, 10)
        self.assertIsNone(plan.test_positives(1, 5))

    def test_fold_mask(self):
        """The mask of a fold hides exactly that fold's positives"""
        graph = random_graph(8, 2, seed=4)
        plan = make_folds(graph, 3, seed=2)
        mask = plan.mask(1)
        for layer in range(2):
            self.assertEqual(mask.hidden_dyads[layer],
                             frozenset(tuple(pair) for pair in plan.test_positives(layer, 1).tolist()))


class TestNegativeSets(unittest.TestCase):

    def test_negative_sets(self):
        """Every set has as many distinct non-edges as there are positives"""
        graph = random_graph(10, 1, density=0.3, seed=5)
        positives = graph.sorted_edges(0)[:7]
        sets = negative_sets(graph, 0, positives, 100, np.random.default_rng(0))
        self.assertEqual(len(sets), 100)
        adjacency = graph.layer_adjacency(0)
        for negative in sets:
            self.assertEqual(negative.shape, (7, 2))
            self.assertEqual(len(set(map(tuple, negative.tolist()))), 7)
            self.assertTrue(np.all(negative[:, 0] != negative[:, 1]))
            self.assertTrue(np.all(adjacency[negative[:, 0], negative[:, 1]] == 0))

    def test_negative_sets_complete_layer(self):
        graph = MultiplexGraph.from_adjacency(np.ones((1, 4, 4)))
        self.assertRaises(InsufficientNonEdgesError, negative_sets, graph, 0,
                          graph.sorted_edges(0)[:2], 3, np.random.default_rng(0))


class TestMetrics(unittest.TestCase):

    def test_roc_auc_examples(self):
        self.assertEqual(roc_auc([0.9, 0.8], [0.7, 0.1]), 1.0)
        self.assertEqual(roc_auc([0.8, 0.4], [0.6, 0.2]), 0.75)
        self.assertEqual(roc_auc([0.5], [0.5]), 0.5)

    def test_roc_auc_matches_sklearn(self):
        rng = np.random.default_rng(1)
        pos, neg = rng.integers(0, 5, size=20), rng.integers(0, 5, size=30)
        labels = np.r_[np.ones(20), np.zeros(30)]
        self.assertAlmostEqual(roc_auc(pos, neg), metrics.roc_auc_score(labels, np.r_[pos, neg]))

    def test_roc_auc_pair_enumeration(self):
        """Small tied score sets agree exactly with counting every pair"""
        rng = np.random.default_rng(5)
        for _ in range(1000):
            n_pos = int(rng.integers(1, 12))
            n_neg = int(rng.integers(1, 13 - n_pos))
            pos, neg = rng.integers(0, 6, size=n_pos) / 5.0, rng.integers(0, 6, size=n_neg) / 5.0
            wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
            self.assertEqual(roc_auc(pos, neg), wins / (n_pos * n_neg))

    def test_pr_auc_examples(self):
        self.assertAlmostEqual(pr_auc([0.9], [0.1]), 1.0)
        self.assertAlmostEqual(pr_auc([0.9, 0.3], [0.5]), 0.5 + 0.5 * 2 / 3.0)
        self.assertAlmostEqual(pr_auc([0.4] * 3, [0.4] * 5), 3 / 8.0)

    def test_metrics_empty(self):
        self.assertRaises(DomainError, roc_auc, [], [0.1])
        self.assertRaises(DomainError, pr_auc, [0.1], [])

    def test_paired_t_test(self):
        """mean 2, sd 1, n 3"""
        result = paired_t_test([2, 1, 3])
        self.assertAlmostEqual(result.t, 2 * np.sqrt(3))
        self.assertEqual(result.df, 2)
        self.assertAlmostEqual(result.p_two_sided, 2 * stats.t.sf(2 * np.sqrt(3), 2))
        self.assertAlmostEqual(result.p_two_sided, 0.074, places=3)
        self.assertFalse(result.degenerate)

    def test_paired_t_test_sign_flip(self):
        first, second = paired_t_test([0.1, 0.4, 0.2]), paired_t_test([-0.1, -0.4, -0.2])
        self.assertAlmostEqual(first.t, -second.t)
        self.assertAlmostEqual(first.p_two_sided, second.p_two_sided)

    def test_paired_t_test_degenerate(self):
        """Zero variance is flagged, with t = 0 or +-inf"""
        self.assertEqual(tuple(paired_t_test([0.0, 0.0, 0.0])), (0.0, 1.0, 2, True))
        result = paired_t_test([0.2, 0.2])
        self.assertEqual((result.t, result.p_two_sided, result.degenerate), (np.inf, 0.0, True))
        self.assertEqual(paired_t_test([-0.2, -0.2]).t, -np.inf)
        self.assertRaises(DomainError, paired_t_test, [0.3])


class TestCrossValidation(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.graph = random_graph(10, 2, density=0.3, seed=6)
        cls.config = quick_config(max_steps=15, warm_steps=5)
        cls.plan = make_folds(cls.graph, 3, seed=4)
        cls.report = evaluate_cv(cls.graph, ["bias", "full"], cls.config, cls.plan, 4, network="toy")

    def test_report_shape(self):
        """One entry per variant, layer, fold and metric, all in [0, 1]"""
        values = self.report.values
        self.assertEqual(values.dims, ("variant", "layer", "fold", "metric"))
        self.assertEqual(values.shape, (2, 2, 3, 2))
        self.assertEqual(list(values.coords["layer"].values), [1, 2])
        self.assertTrue(np.all((values.values >= 0) & (values.values <= 1)))
        self.assertEqual(self.report.failed_folds, {"bias": [], "full": []})

    def test_report_dict(self):
        """The JSON summary has per-layer means and paired differences"""
        record = json.loads(dumps_json(self.report.to_dict()))
        self.assertEqual(record["network"], "toy")
        self.assertEqual(len(record["layers"]), 2)
        layer = record["layers"][0]
        self.assertEqual(sorted(layer["variants"]), ["bias", "full"])
        self.assertEqual(len(layer["differences"]["pr_auc"]["folds"]), 3)
        self.assertIn("p_two_sided", layer["differences"]["roc_auc"]["t_test"])

    def test_report_frames(self):
        frame = self.report.to_frame()
        self.assertEqual(list(frame.columns), ["network", "layer", "variant", "fold", "metric", "value"])
        self.assertEqual(len(frame), 24)
        self.assertEqual(sorted(frame["fold"].unique()), [1, 2, 3])
        curves = self.report.curves_frame()
        self.assertEqual(sorted(curves["curve"].unique()), ["pr", "roc"])

    def test_threads_do_not_matter(self):
        """Folds on threads give the same report"""
        threaded = evaluate_cv(self.graph, ["bias", "full"], self.config, self.plan, 4, threads=3,
                               network="toy")
        self.assertTrue(threaded.values.equals(self.report.values))


if __name__ == "__main__":
    unittest.main()
