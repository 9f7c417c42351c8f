import contextlib
import os

import numpy as np

from pymlt.core.config import TrainConfig
from pymlt.core.graph import MultiplexGraph
from pymlt.core.helpers import load_environmental_variable_1_0
from pymlt.core.model import MltParams


ACCEPTANCE = load_environmental_variable_1_0("PYMLT_ACCEPTANCE")

FIXTURE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


@contextlib.contextmanager
def set_env(**environ):
    """
    Temporarily set the process environment variables.
    """
    old_environ = dict(os.environ)
    os.environ.update(environ)
    try:
        yield
    finally:
        os.environ.clear()
        os.environ.update(old_environ)


def fixture(name):
    return os.path.join(FIXTURE_DIR, name)


def random_graph(n_nodes, n_layers, density=0.3, seed=0):
    """ Erdos-Renyi layers over the same nodes """
    rng = np.random.default_rng(seed)
    return MultiplexGraph.from_adjacency(rng.random((n_layers, n_nodes, n_nodes)) < density)


def random_params(n_nodes, n_layers, depth, variant="full", seed=0):
    """ Every parameter group drawn from a standard normal """
    rng = np.random.default_rng(seed)
    dimension = 2 ** depth
    return MltParams(beta=rng.normal(size=(n_nodes, n_layers)),
                     gamma=rng.normal(size=(n_nodes, n_layers)),
                     z_logits=rng.normal(size=(n_nodes, n_layers)),
                     w_logits=rng.normal(size=(n_nodes, n_layers)),
                     u_logits=rng.normal(size=(n_layers, n_nodes, dimension)),
                     v_logits=rng.normal(size=(n_layers, n_nodes, dimension)),
                     level_logits=rng.normal(size=(n_layers, depth + 1)),
                     strength_raw=rng.normal(),
                     variant=variant)


def quick_config(**changes):
    """ A short schedule for tests """
    settings = {"max_steps": 30, "warm_steps": 5, "restarts": 1}
    settings.update(changes)
    return TrainConfig(**settings)
