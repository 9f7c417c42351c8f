"""
Synthetic networks with known parameters.

``make_params`` turns a ``SynthSpec`` into full-variant parameters with
planted block memberships; ``pymlt.core.model.sample_network`` then draws
networks from them.

A spec file is YAML or JSON with the ``SynthSpec`` fields, e.g.::

    n_nodes: 120
    n_layers: 3
    block_count: 4
    strength: 25.0
    seed: 3
"""
import numpy as np

import pymlt.core.logging as logging
from pymlt.core.errors import SpecError
from pymlt.core.helpers import named_stream, yaml
from pymlt.core.model import MltParams
from pymlt.core.simplex import depth_for, is_power_of_two, softplus_inverse


logger = logging.getLogger(__name__)

SMOOTHING = 0.05
LEVEL_SLOPE = 2.0


class SynthSpec(object):
    """
    Specification of a synthetic multiplex network.

    Parameters
    ----------
    n_nodes : int
    n_layers : int
    depth : int or "auto"
        Hierarchy depth ``H``; ``depth_for(n_nodes)`` if "auto".
    block_count : int
        Planted groups, a power of two no larger than ``2**H``. They live on
        level ``log2(block_count)``.
    strength : float
        Global interdependence strength ``s >= 0``.
    bias_spread : float
        Standard deviation of the biases.
    bias_mean : float
        Mean of the biases; negative values give sparser networks.
    concentration : float
        Sharpness of the role simplices; large values give one-hot rows.
    seed : int
    """

    FIELDS = ("n_nodes", "n_layers", "depth", "block_count", "strength", "bias_spread",
              "bias_mean", "concentration", "seed")

    def __init__(self, n_nodes, n_layers, depth="auto", block_count=4, strength=0.0,
                 bias_spread=1.0, bias_mean=0.0, concentration=1.0, seed=0):
        if not isinstance(n_nodes, int) or n_nodes < 2:
            raise SpecError("n_nodes must be an integer >= 2, got %r" % (n_nodes,))
        if not isinstance(n_layers, int) or n_layers < 1:
            raise SpecError("n_layers must be a positive integer, got %r" % (n_layers,))
        if depth == "auto":
            depth = depth_for(n_nodes)
        if not isinstance(depth, int) or depth < 1:
            raise SpecError("depth must be 'auto' or an integer >= 1, got %r" % (depth,))
        if not isinstance(block_count, int) or not is_power_of_two(block_count):
            raise SpecError("block_count must be a power of two, got %r" % (block_count,))
        if block_count > 2 ** depth:
            raise SpecError("block_count %s exceeds the %s finest groups of depth %s" %
                            (block_count, 2 ** depth, depth))
        if not strength >= 0:
            raise SpecError("strength must be >= 0, got %r" % (strength,))
        if not bias_spread >= 0:
            raise SpecError("bias_spread must be >= 0, got %r" % (bias_spread,))
        if not concentration > 0:
            raise SpecError("concentration must be positive, got %r" % (concentration,))
        self.n_nodes = n_nodes
        self.n_layers = n_layers
        self.depth = depth
        self.block_count = block_count
        self.strength = float(strength)
        self.bias_spread = float(bias_spread)
        self.bias_mean = float(bias_mean)
        self.concentration = float(concentration)
        self.seed = int(seed)

    @property
    def planted_level(self):
        return int(self.block_count).bit_length() - 1

    @classmethod
    def from_dict(cls, record):
        unknown = set(record) - set(cls.FIELDS)
        if unknown:
            raise SpecError("Unknown spec fields: %s" % ", ".join(sorted(unknown)))
        try:
            return cls(**record)
        except TypeError as error:
            raise SpecError("Invalid spec: %s" % error)

    @classmethod
    def load(cls, path):
        with open(path, "r") as spec_file:
            record = yaml.load(spec_file)
        if not isinstance(record, dict):
            raise SpecError("Spec file %s does not hold a mapping" % path)
        return cls.from_dict(record)

    def to_dict(self):
        return {name: getattr(self, name) for name in self.FIELDS}

    def __repr__(self):
        return "SynthSpec(%s)" % ", ".join("%s=%r" % (name, getattr(self, name)) for name in self.FIELDS)


def _draw(spec):
    """ Every random quantity of a spec, in a fixed order """
    rng = named_stream(spec.seed, "sample", "params")
    shape = (spec.n_nodes, spec.n_layers)
    draws = {"beta": rng.normal(spec.bias_mean, spec.bias_spread, size=shape),
             "gamma": rng.normal(spec.bias_mean, spec.bias_spread, size=shape),
             "z_logits": spec.concentration * rng.normal(size=shape),
             "w_logits": spec.concentration * rng.normal(size=shape),
             "source_blocks": rng.integers(0, spec.block_count, size=(spec.n_layers, spec.n_nodes)),
             "target_blocks": rng.integers(0, spec.block_count, size=(spec.n_layers, spec.n_nodes))}
    return draws


def planted_labels(spec):
    """
    Planted source and target groups, each an (L, N) integer array, as used
    by ``make_params``.
    """
    draws = _draw(spec)
    return draws["source_blocks"], draws["target_blocks"]


def _planted_logits(blocks, spec):
    """ One-hot leaf per node, smoothed with ``SMOOTHING`` mass spread uniformly """
    dimension = 2 ** spec.depth
    leaf = blocks * 2 ** (spec.depth - spec.planted_level)
    memberships = np.full(blocks.shape + (dimension,), SMOOTHING / dimension)
    np.put_along_axis(memberships, leaf[..., None], 1.0 - SMOOTHING + SMOOTHING / dimension, axis=-1)
    return np.log(memberships)


def make_params(spec):
    """
    Full-variant parameters of a synthetic network.

    + biases from Normal(bias_mean, bias_spread**2)
    + role logits ``concentration * Normal(0, 1)``
    + every node planted into one source and one target group per layer:
      the first finest-level leaf below its group gets the membership mass,
      smoothed by ``SMOOTHING``
    + level proportions growing with depth, ``softmax(2 h)``
    + global strength ``spec.strength``

    Returns
    -------
    MltParams
    """
    draws = _draw(spec)
    level_logits = np.tile(LEVEL_SLOPE * np.arange(spec.depth + 1, dtype=float), (spec.n_layers, 1))
    params = MltParams(beta=draws["beta"], gamma=draws["gamma"],
                       z_logits=draws["z_logits"], w_logits=draws["w_logits"],
                       u_logits=_planted_logits(draws["source_blocks"], spec),
                       v_logits=_planted_logits(draws["target_blocks"], spec),
                       level_logits=level_logits,
                       strength_raw=softplus_inverse(spec.strength),
                       variant="full")
    logger.debug("Synthetic parameters for %s", spec)
    return params
