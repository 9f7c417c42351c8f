"""
Tests for configuration files, presets and validation
"""
import os
import shutil
import tempfile
import unittest

from pymlt.core.config import (AnalysisConfig, EvaluationConfig, TrainConfig, load_config,
                               merge_settings)
from pymlt.core.errors import ConfigError


class TestDefaults(unittest.TestCase):

    def test_defaults(self):
        """Without a file the packaged defaults are used"""
        config = load_config()
        train = config.train
        self.assertEqual((train.lr_init, train.weight_decay, train.plateau_factor), (0.1, 0.01, 0.5))
        self.assertEqual((train.plateau_patience, train.lr_min, train.warm_steps), (10, 1e-7, 2000))
        self.assertEqual((train.restarts, train.sample_size, train.max_steps), (5, "full", 200000))
        self.assertEqual(train.betas, (0.9, 0.999))
        self.assertEqual((config.evaluation.n_folds, config.evaluation.n_neg_sets), (10, 100))
        self.assertEqual((config.analysis.n_boot, config.analysis.n_perm), (1000, 1000))
        self.assertIsNone(config.analysis.claimed_order)
        self.assertEqual(config.threads, 1)

    def test_desk_preset(self):
        """The desk preset reduces folds, negative sets and restarts"""
        config = load_config(preset="desk")
        self.assertEqual(config.evaluation.n_folds, 5)
        self.assertEqual(config.evaluation.n_neg_sets, 20)
        self.assertEqual(config.train.restarts, 2)
        self.assertEqual(config.train.lr_init, 0.1)

    def test_paper_preset(self):
        self.assertEqual(load_config(preset="paper").resolved(), load_config().resolved())

    def test_unknown_preset(self):
        self.assertRaises(ConfigError, load_config, None, "laptop")


class TestConfigFiles(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def write(self, text):
        path = os.path.join(self.test_dir, "config.yaml")
        with open(path, "w") as config_file:
            config_file.write(text)
        return path

    def test_file_merges(self):
        """A file only changes the entries it names"""
        config = load_config(self.write("train:\n  restarts: 3\nthreads: 4\n"))
        self.assertEqual(config.train.restarts, 3)
        self.assertEqual(config.train.warm_steps, 2000)
        self.assertEqual(config.threads, 4)

    def test_json_file(self):
        """JSON is read as well"""
        config = load_config(self.write('{"evaluation": {"n_folds": 4}}'))
        self.assertEqual(config.evaluation.n_folds, 4)

    def test_unknown_key(self):
        """Typos fail instead of being ignored"""
        self.assertRaises(ConfigError, load_config, self.write("train:\n  lr_inti: 0.5\n"))
        self.assertRaises(ConfigError, load_config, self.write("training:\n  lr_init: 0.5\n"))

    def test_order_of_precedence(self):
        """File, then preset, then overrides"""
        path = self.write("evaluation:\n  n_folds: 3\n  n_neg_sets: 7\n")
        config = load_config(path, "desk", {"evaluation": {"n_neg_sets": 2, "n_folds": None}})
        self.assertEqual(config.evaluation.n_folds, 5)
        self.assertEqual(config.evaluation.n_neg_sets, 2)

    def test_invalid_value(self):
        self.assertRaises(ConfigError, load_config, self.write("train:\n  plateau_factor: 1.5\n"))
        self.assertRaises(ConfigError, load_config, self.write("threads: 0\n"))

    def tearDown(self):
        shutil.rmtree(self.test_dir)


class TestSections(unittest.TestCase):

    def test_TrainConfig_validation(self):
        """Rates must be positive, the factor in (0, 1), counts integers"""
        self.assertRaises(ConfigError, TrainConfig, lr_init=0.0)
        self.assertRaises(ConfigError, TrainConfig, plateau_factor=1.0)
        self.assertRaises(ConfigError, TrainConfig, warm_steps=-1)
        self.assertRaises(ConfigError, TrainConfig, restarts=2.5)
        self.assertRaises(ConfigError, TrainConfig, sample_size=1)
        self.assertRaises(ConfigError, TrainConfig, learning_rate=0.1)

    def test_TrainConfig_replace(self):
        """replace returns a changed copy"""
        config = TrainConfig(seed=3)
        changed = config.replace(seed=4)
        self.assertEqual((config.seed, changed.seed), (3, 4))
        self.assertEqual(changed.replace(seed=3), config)

    def test_other_sections(self):
        self.assertRaises(ConfigError, EvaluationConfig, 1, 10)
        self.assertRaises(ConfigError, AnalysisConfig, 10, 0)
        self.assertRaises(ConfigError, AnalysisConfig, 10, 10, [1, 1, 2])
        self.assertEqual(AnalysisConfig(10, 10, [2, 3, 1]).claimed_order, [2, 3, 1])

    def test_hash(self):
        """Equal settings hash alike, different settings do not"""
        self.assertEqual(load_config().hash(), load_config().hash())
        self.assertNotEqual(load_config().hash(), load_config(preset="desk").hash())
        self.assertEqual(len(load_config().hash()), 64)

    def test_merge_settings(self):
        base = {"a": {"b": 1, "c": 2}, "d": 3}
        self.assertEqual(merge_settings(base, {"a": {"c": 5}}), {"a": {"b": 1, "c": 5}, "d": 3})
        self.assertEqual(base["a"]["c"], 2)
        self.assertRaises(ConfigError, merge_settings, base, {"a": {"x": 1}})
        self.assertRaises(ConfigError, merge_settings, base, {"a": 4})


if __name__ == "__main__":
    unittest.main()
