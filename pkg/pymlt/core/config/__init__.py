"""
Run configuration.

The packaged ``defaults.yaml`` holds every setting. A user file, a preset and
command line overrides are merged on top of it, in that order, section by
section. Every key must already exist in the defaults, so typos fail early
with a ``ConfigError`` instead of being ignored.

Example
-------
>>> config = load_config(preset="desk")
>>> config.evaluation.n_folds
5
>>> config.train.lr_init
0.1
"""
import copy
import numbers
import os

import pymlt.core.logging as logging
from pymlt.core.errors import ConfigError
from pymlt.core.helpers import config_hash, yaml


logger = logging.getLogger(__name__)

DEFAULTS_FILE = "defaults.yaml"

PRESETS = {
        "paper": {},
        "desk": {"train": {"restarts": 2},
                 "evaluation": {"n_folds": 5, "n_neg_sets": 20}},
        }


def _load_defaults():
    with open(os.path.join(os.path.dirname(__file__), DEFAULTS_FILE), "r") as stream:
        return yaml.load(stream)


def _is_int(value):
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def _is_real(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _require(condition, message, *args):
    if not condition:
        raise ConfigError(message % args)


class TrainConfig(object):
    """
    Optimizer, schedule and restart settings of ``pymlt.core.trainer.fit``.

    Attributes
    ----------
    lr_init : float
        Initial learning rate of AdamW.
    weight_decay : float
        Decoupled weight decay.
    betas : tuple of float
        AdamW moment decay rates.
    eps : float
        AdamW denominator offset.
    plateau_factor : float
        Learning rate multiplier on a plateau, in (0, 1).
    plateau_patience : int
        Non-improving steps tolerated before the learning rate drops.
    plateau_threshold : float
        Relative improvement that counts as progress.
    lr_min : float
        Training stops once the learning rate falls below this.
    warm_steps : int
        Steps in which only the biases are trained.
    restarts : int
        Independent initializations tried by ``multi_restart_fit``.
    sample_size : int or "full"
        Nodes per stochastic likelihood evaluation.
    max_steps : int
        Hard cap on optimization steps.
    seed : int
        Seed of the first restart.
    """

    FIELDS = ("lr_init", "weight_decay", "betas", "eps", "plateau_factor", "plateau_patience",
              "plateau_threshold", "lr_min", "warm_steps", "restarts", "sample_size",
              "max_steps", "seed")

    def __init__(self, **settings):
        merged = _load_defaults()["train"]
        unknown = set(settings) - set(self.FIELDS)
        _require(not unknown, "Unknown train settings: %s", ", ".join(sorted(unknown)))
        merged.update(settings)
        for name in self.FIELDS:
            setattr(self, name, merged[name])
        self.betas = tuple(self.betas)
        self.validate()

    def validate(self):
        _require(_is_real(self.lr_init) and self.lr_init > 0, "lr_init must be positive, got %r", self.lr_init)
        _require(_is_real(self.weight_decay) and self.weight_decay >= 0,
                 "weight_decay must be >= 0, got %r", self.weight_decay)
        _require(len(self.betas) == 2 and all(_is_real(b) and 0 <= b < 1 for b in self.betas),
                 "betas must be two numbers in [0, 1), got %r", self.betas)
        _require(_is_real(self.eps) and self.eps > 0, "eps must be positive, got %r", self.eps)
        _require(_is_real(self.plateau_factor) and 0 < self.plateau_factor < 1,
                 "plateau_factor must lie in (0, 1), got %r", self.plateau_factor)
        _require(_is_int(self.plateau_patience) and self.plateau_patience >= 0,
                 "plateau_patience must be an integer >= 0, got %r", self.plateau_patience)
        _require(_is_real(self.plateau_threshold) and self.plateau_threshold >= 0,
                 "plateau_threshold must be >= 0, got %r", self.plateau_threshold)
        _require(_is_real(self.lr_min) and self.lr_min > 0, "lr_min must be positive, got %r", self.lr_min)
        _require(_is_int(self.warm_steps) and self.warm_steps >= 0,
                 "warm_steps must be an integer >= 0, got %r", self.warm_steps)
        _require(_is_int(self.restarts) and self.restarts >= 1,
                 "restarts must be an integer >= 1, got %r", self.restarts)
        _require(self.sample_size == "full" or (_is_int(self.sample_size) and self.sample_size >= 2),
                 "sample_size must be 'full' or an integer >= 2, got %r", self.sample_size)
        _require(_is_int(self.max_steps) and self.max_steps >= 0,
                 "max_steps must be an integer >= 0, got %r", self.max_steps)
        _require(_is_int(self.seed) and self.seed >= 0, "seed must be an integer >= 0, got %r", self.seed)

    def replace(self, **changes):
        """ A copy with some settings changed """
        settings = self.to_dict()
        settings.update(changes)
        return type(self)(**settings)

    def to_dict(self):
        settings = {name: getattr(self, name) for name in self.FIELDS}
        settings["betas"] = list(self.betas)
        return settings

    def __eq__(self, other):
        return isinstance(other, TrainConfig) and self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "TrainConfig(%s)" % ", ".join("%s=%r" % (name, getattr(self, name)) for name in self.FIELDS)


class EvaluationConfig(object):
    """ Cross-validation settings """

    def __init__(self, n_folds, n_neg_sets):
        _require(_is_int(n_folds) and n_folds >= 2, "n_folds must be an integer >= 2, got %r", n_folds)
        _require(_is_int(n_neg_sets) and n_neg_sets >= 1,
                 "n_neg_sets must be an integer >= 1, got %r", n_neg_sets)
        self.n_folds = n_folds
        self.n_neg_sets = n_neg_sets

    def to_dict(self):
        return {"n_folds": self.n_folds, "n_neg_sets": self.n_neg_sets}


class AnalysisConfig(object):
    """ Resampling settings of the post-fit statistics """

    def __init__(self, n_boot, n_perm, claimed_order=None):
        _require(_is_int(n_boot) and n_boot >= 1, "n_boot must be an integer >= 1, got %r", n_boot)
        _require(_is_int(n_perm) and n_perm >= 1, "n_perm must be an integer >= 1, got %r", n_perm)
        if claimed_order is not None:
            claimed_order = list(claimed_order)
            _require(all(_is_int(layer) for layer in claimed_order) and
                     sorted(claimed_order) == list(range(1, len(claimed_order) + 1)),
                     "claimed_order must be a permutation of the layer numbers 1..L, got %r", claimed_order)
        self.n_boot = n_boot
        self.n_perm = n_perm
        self.claimed_order = claimed_order

    def to_dict(self):
        return {"n_boot": self.n_boot, "n_perm": self.n_perm, "claimed_order": self.claimed_order}


class RunConfig(object):
    """
    The resolved configuration of one command.

    Attributes
    ----------
    train : TrainConfig
    evaluation : EvaluationConfig
    analysis : AnalysisConfig
    threads : int
    """

    def __init__(self, settings):
        self.train = TrainConfig(**settings["train"])
        self.evaluation = EvaluationConfig(**settings["evaluation"])
        self.analysis = AnalysisConfig(**settings["analysis"])
        threads = settings["threads"]
        _require(_is_int(threads) and threads >= 1, "threads must be an integer >= 1, got %r", threads)
        self.threads = threads

    def resolved(self):
        """ The plain nested dictionary of every setting """
        return {"train": self.train.to_dict(),
                "evaluation": self.evaluation.to_dict(),
                "analysis": self.analysis.to_dict(),
                "threads": self.threads}

    def hash(self):
        return config_hash(self.resolved())

    def __repr__(self):
        return "RunConfig(%s)" % self.hash()[:12]


def merge_settings(base, changes, where="config"):
    """
    Merges ``changes`` into a copy of ``base`` section by section.

    Raises
    ------
    ConfigError
        For keys not present in ``base``.
    """
    merged = copy.deepcopy(base)
    if changes is None:
        return merged
    if not isinstance(changes, dict):
        raise ConfigError("%s must be a mapping, got %s" % (where, type(changes).__name__))
    for key, value in changes.items():
        if key not in merged:
            raise ConfigError("Unknown setting %r in %s" % (key, where))
        if isinstance(merged[key], dict):
            merged[key] = merge_settings(merged[key], value, "%s.%s" % (where, key))
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_config_file(path):
    """ Reads a YAML or JSON configuration file into a dictionary """
    with open(path, "r") as config_file:
        try:
            settings = yaml.load(config_file)
        except Exception as error:
            raise ConfigError("Cannot read configuration file %s: %s" % (path, error))
    return {} if settings is None else settings


def load_config(path=None, preset=None, overrides=None):
    """
    Builds the ``RunConfig`` of a command.

    Parameters
    ----------
    path : str, optional
        User configuration file.
    preset : str, optional
        Name of a preset in ``PRESETS``, applied on top of the file.
    overrides : dict, optional
        Nested settings applied last, e.g. from command line flags. ``None``
        values are skipped.

    Returns
    -------
    RunConfig
    """
    settings = _load_defaults()
    if path is not None:
        logger.info("Reading configuration from %s", path)
        settings = merge_settings(settings, read_config_file(path), path)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("Unknown preset %r, use one of %s" % (preset, ", ".join(sorted(PRESETS))))
        settings = merge_settings(settings, PRESETS[preset], "preset %s" % preset)
    if overrides:
        settings = merge_settings(settings, _drop_none(overrides), "command line")
    config = RunConfig(settings)
    logger.debug("Resolved configuration %s", config.resolved())
    return config


def _drop_none(settings):
    cleaned = {}
    for key, value in settings.items():
        if isinstance(value, dict):
            value = _drop_none(value)
            if value:
                cleaned[key] = value
        elif value is not None:
            cleaned[key] = value
    return cleaned
