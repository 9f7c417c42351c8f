"""
Tests for the optimizer, the learning rate schedule and fitting
"""
import os
import shutil
import tempfile
import unittest

import numpy as np
import pandas as pd
from scipy import special

from pymlt.core.errors import FitError, NumericError
from pymlt.core.graph import MultiplexGraph
from pymlt.core.helpers import named_stream
from pymlt.core.model import MltParams, log_odds_matrix, nll, sample_network
from pymlt.core.synth import SynthSpec, make_params
from pymlt.core.trainer import (AdamWState, PlateauScheduler, adamw_step, default_initializer, fit,
                                multi_restart_fit, write_loss_trace)
from tests import quick_config, random_graph


class TestAdamW(unittest.TestCase):

    def test_adamw_fixed_point(self):
        """Zero gradient and zero weight decay leave the parameters alone"""
        state = AdamWState({"p": np.array([1.0, -2.0])})
        adamw_step(state, {"p": np.zeros(2)}, lr=0.1, weight_decay=0.0)
        np.testing.assert_array_equal(state.params["p"], [1.0, -2.0])

    def test_adamw_constant_gradient(self):
        """With bias correction every step moves by about lr against the gradient"""
        state = AdamWState({"p": np.array(1.0)})
        adamw_step(state, {"p": np.array(0.5)}, lr=0.1, weight_decay=0.0)
        self.assertAlmostEqual(float(state.params["p"]), 0.9, places=6)
        adamw_step(state, {"p": np.array(0.5)}, lr=0.1, weight_decay=0.0)
        self.assertAlmostEqual(float(state.params["p"]), 0.8, places=6)
        self.assertEqual(state.steps["p"], 2)

    def test_adamw_weight_decay(self):
        """Decay alone shrinks by 1 - lr * weight_decay per step"""
        state = AdamWState({"p": np.array([2.0])})
        for _ in range(3):
            adamw_step(state, {"p": np.zeros(1)}, lr=0.1, weight_decay=0.01)
        np.testing.assert_allclose(state.params["p"], [2.0 * 0.999 ** 3])

    def test_adamw_decay_and_step(self):
        """Decay is applied before the adaptive step"""
        state = AdamWState({"p": np.array(1.0)})
        adamw_step(state, {"p": np.array(0.5)}, lr=0.1, weight_decay=0.01)
        self.assertAlmostEqual(float(state.params["p"]), 0.999 - 0.1, places=6)

    def test_adamw_untouched_groups(self):
        """Groups without a gradient keep value and step count"""
        state = AdamWState({"a": np.ones(2), "b": np.ones(2)})
        adamw_step(state, {"a": np.ones(2)}, lr=0.1, weight_decay=0.5)
        np.testing.assert_array_equal(state.params["b"], np.ones(2))
        self.assertEqual(state.steps["b"], 0)

    def test_adamw_non_finite(self):
        """A non-finite gradient aborts before anything changes"""
        state = AdamWState({"a": np.ones(2), "b": np.ones(2)})
        with self.assertRaises(NumericError) as raised:
            adamw_step(state, {"a": np.ones(2), "b": np.array([np.nan, 0.0])}, lr=0.1, weight_decay=0.0)
        self.assertEqual(raised.exception.diagnostics["group"], "b")
        np.testing.assert_array_equal(state.params["a"], np.ones(2))
        self.assertEqual(state.steps["a"], 0)


class TestPlateauScheduler(unittest.TestCase):

    def test_plateau_reduces(self):
        """After more than patience steps without progress the rate halves"""
        scheduler = PlateauScheduler(0.1, factor=0.5, patience=2)
        rates = [scheduler.step(1.0) for _ in range(4)]
        self.assertEqual(rates, [0.1, 0.1, 0.1, 0.05])
        self.assertEqual(scheduler.bad_steps, 0)
        self.assertEqual(scheduler.n_reductions, 1)

    def test_plateau_relative_threshold(self):
        """Improvements below the relative threshold count as a plateau"""
        scheduler = PlateauScheduler(0.1, patience=0, threshold=1e-3)
        scheduler.step(1.0)
        self.assertEqual(scheduler.step(0.9999), 0.05)
        self.assertEqual(scheduler.step(0.5), 0.05)

    def test_plateau_deferred(self):
        """Without permission the rate stays, the counter keeps growing"""
        scheduler = PlateauScheduler(0.1, patience=1)
        for _ in range(5):
            scheduler.step(1.0, allow_reduce=False)
        self.assertEqual(scheduler.lr, 0.1)
        self.assertEqual(scheduler.bad_steps, 4)
        scheduler.reset_counter()
        self.assertEqual(scheduler.bad_steps, 0)

    def test_plateau_done(self):
        scheduler = PlateauScheduler(1e-7, factor=0.5, patience=0, lr_min=1e-7)
        self.assertFalse(scheduler.done)
        scheduler.step(1.0)
        scheduler.step(1.0)
        self.assertTrue(scheduler.done)


class TestFit(unittest.TestCase):

    def setUp(self):
        self.graph = random_graph(8, 2, density=0.4, seed=1)
        self.test_dir = tempfile.mkdtemp()

    def test_fit_traces(self):
        """Traces have one entry per step, phases follow the warm-up"""
        result = fit(self.graph, "full", quick_config(max_steps=12, warm_steps=4))
        self.assertEqual(result.steps, 12)
        self.assertEqual(len(result.loss_trace), 12)
        frame = result.trace_frame(4)
        self.assertEqual(list(frame.columns), ["step", "phase", "lr", "loss"])
        self.assertEqual(list(frame["phase"]), ["bias"] * 4 + ["joint"] * 8)

    def test_fit_warm_phase_trains_biases_only(self):
        """During the warm-up every non-bias group keeps its initial value"""
        config = quick_config(max_steps=6, warm_steps=10)
        start = default_initializer(self.graph, "full", config.seed)
        result = fit(self.graph, "full", config)
        for name in ("z_logits", "w_logits", "u_logits", "v_logits", "level_logits", "strength_raw"):
            np.testing.assert_array_equal(getattr(result.params, name), getattr(start, name))
        self.assertFalse(np.array_equal(result.params.beta, start.beta))

    def test_fit_no_op(self):
        """No steps returns the initialization with its loss"""
        config = quick_config(max_steps=0, warm_steps=0)
        result = fit(self.graph, "tradeoff", config)
        start = default_initializer(self.graph, "tradeoff", config.seed)
        self.assertEqual(result.params, start)
        self.assertEqual(result.final_loss, nll(self.graph, start))
        self.assertEqual(result.steps, 0)

    def test_fit_deterministic(self):
        """The same configuration gives the same parameters"""
        config = quick_config(sample_size=5)
        self.assertEqual(fit(self.graph, "full", config).params, fit(self.graph, "full", config).params)

    def test_fit_bias_decreases_loss(self):
        """The bias fit ends below where it started"""
        result = fit(self.graph, "bias", quick_config(max_steps=50))
        self.assertLess(result.final_loss, result.loss_trace[0])

    def test_fit_tracks_out_degree(self):
        """The only sender gets the largest sender bias"""
        graph = MultiplexGraph(5, 1, [[(0, 1), (0, 2), (0, 3), (0, 4)]])
        beta = fit(graph, "bias", quick_config(max_steps=100, warm_steps=0)).params.beta[:, 0]
        self.assertTrue(np.all(beta[0] > beta[1:]))

    def test_fit_complete_graph(self):
        """On a complete layer every fitted dyad probability is high"""
        graph = MultiplexGraph.from_adjacency(np.ones((1, 4, 4)))
        params = fit(graph, "bias", quick_config(max_steps=200, warm_steps=0)).params
        probabilities = special.expit(log_odds_matrix(params))[0][~np.eye(4, dtype=bool)]
        self.assertTrue(np.all(probabilities >= 0.9))

    def test_fit_full_nests_bias(self):
        """With planted roles the full fit ends no higher than the bias fit on the same schedule"""
        spec = SynthSpec(24, 2, block_count=2, strength=8.0, bias_mean=-1.0, seed=3)
        graph = sample_network(make_params(spec), named_stream(3, "sample", "network"))
        config = quick_config(max_steps=400, warm_steps=100)
        bias = fit(graph, "bias", config)
        full = fit(graph, "full", config)
        self.assertLessEqual(full.final_loss, bias.final_loss + 1e-6)

    def test_fit_diverges(self):
        """A non-finite loss is a numeric error"""
        def broken(graph, variant, seed):
            return MltParams.zeros(graph.n_nodes, graph.n_layers, 1, variant).with_arrays(
                    {"beta": np.full((graph.n_nodes, graph.n_layers), np.nan)})
        self.assertRaises(NumericError, fit, self.graph, "bias", quick_config(), None, broken)

    def test_write_loss_trace(self):
        result = fit(self.graph, "bias", quick_config(max_steps=5))
        path = write_loss_trace(result, os.path.join(self.test_dir, "loss_trace.csv"), 5)
        frame = pd.read_csv(path)
        self.assertEqual(len(frame), 5)
        self.assertEqual(set(frame["phase"]), {"joint"})

    def tearDown(self):
        shutil.rmtree(self.test_dir)


class TestMultiRestartFit(unittest.TestCase):

    def setUp(self):
        self.graph = random_graph(8, 2, density=0.5, seed=2)

    def rigged(self, good_seed):
        """ Zero log-odds for ``good_seed``, far off for every other seed """
        def initializer(graph, variant, seed):
            params = MltParams.zeros(graph.n_nodes, graph.n_layers, 1, variant)
            if seed == good_seed:
                return params
            return params.with_arrays({"beta": np.full((graph.n_nodes, graph.n_layers), 4.0)})
        return initializer

    def test_multi_restart_single(self):
        """One restart is a plain fit"""
        config = quick_config()
        self.assertEqual(multi_restart_fit(self.graph, "full", config).params,
                         fit(self.graph, "full", config).params)

    def test_multi_restart_rigged(self):
        """The restart that starts at the better point wins"""
        config = quick_config(max_steps=0, restarts=3, seed=10)
        self.assertEqual(multi_restart_fit(self.graph, "bias", config, initializer=self.rigged(10)).restart_index, 0)
        self.assertEqual(multi_restart_fit(self.graph, "bias", config, initializer=self.rigged(12)).restart_index, 2)

    def test_multi_restart_tie(self):
        """Equal losses go to the lowest restart index"""
        config = quick_config(max_steps=0, restarts=3)
        result = multi_restart_fit(self.graph, "bias", config, initializer=self.rigged(-1))
        self.assertEqual(result.restart_index, 0)

    def test_multi_restart_all_diverged(self):
        def broken(graph, variant, seed):
            return MltParams.zeros(graph.n_nodes, graph.n_layers, 1, variant).with_arrays(
                    {"gamma": np.full((graph.n_nodes, graph.n_layers), np.inf)})
        self.assertRaises(FitError, multi_restart_fit, self.graph, "bias", quick_config(restarts=2), None, broken)

    def test_multi_restart_threads(self):
        """The number of threads does not change the result"""
        config = quick_config(restarts=3)
        serial = multi_restart_fit(self.graph, "full", config, threads=1)
        threaded = multi_restart_fit(self.graph, "full", config, threads=3)
        self.assertEqual(serial.params, threaded.params)
        self.assertEqual(serial.restart_index, threaded.restart_index)


if __name__ == "__main__":
    unittest.main()
