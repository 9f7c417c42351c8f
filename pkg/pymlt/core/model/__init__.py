"""
The multiplex latent trade-off model.

Every ordered dyad ``(i, j)`` of layer ``l`` is an independent Bernoulli
trial with log-odds

    r = beta[i, l] + gamma[j, l] + eta

where ``eta`` depends on the variant:

+ ``bias``: ``eta = 0``
+ ``tradeoff``: ``eta = z_i[l] * s * w_j[l]``
+ ``full``: ``eta = z_i[l] * w_j[l] * sum_h s_h^l <u_i^{l,h}, v_j^{l,h}>``

The loss is the Bernoulli negative log-likelihood summed over layers and
divided by ``N (N - 1)``. Dyads of a ``MaskPlan`` are left out entirely.

Internally the hierarchy sum is written as ``U @ C @ V.T`` with the
finest-level memberships and a D x D level kernel ``C`` (see
``pymlt.core.simplex.level_kernel``), which gives every dyad of a layer in
one product and makes the gradients plain matrix products.

----
"""
import collections
import copy

import numpy as np
from scipy import special

import pymlt.core.logging as logging
from pymlt.core.errors import DomainError, ShapeError
from pymlt.core.graph import MultiplexGraph
from pymlt.core.helpers import read_json, write_json
from pymlt.core.simplex import (StrengthProfile, build_ladder, level_kernel, level_kernel_backward,
                                softmax_backward, softplus, to_simplex)


logger = logging.getLogger(__name__)

VARIANTS = ("bias", "tradeoff", "full")

PARAMETER_GROUPS = ("beta", "gamma", "z_logits", "w_logits", "u_logits", "v_logits",
                    "level_logits", "strength_raw")

ACTIVE_GROUPS = {
        "bias": ("beta", "gamma"),
        "tradeoff": ("beta", "gamma", "z_logits", "w_logits", "strength_raw"),
        "full": PARAMETER_GROUPS,
        }

PARAMS_FORMAT_VERSION = 1


def check_variant(variant):
    if variant not in VARIANTS:
        raise DomainError("Unknown variant %r, use one of %s" % (variant, ", ".join(VARIANTS)))
    return variant


################################################################################
#
#           P A R A M E T E R S
#
################################################################################
class MltParams(object):
    """
    All free parameters of one model variant.

    Every group is stored unconstrained; the simplex valued quantities are
    derived through ``to_simplex``.

    Parameters
    ----------
    beta, gamma : array_like
        (N, L) sender and receiver biases.
    z_logits, w_logits : array_like
        (N, L) logits of the source and target role simplices.
    u_logits, v_logits : array_like
        (L, N, 2**H) logits of the finest-level source and target memberships.
    level_logits : array_like
        (L, H+1) logits of the level proportions ``pi``.
    strength_raw : float
        Global strength ``s = softplus(strength_raw)``; may be ``-inf``.
    variant : str
        ``bias``, ``tradeoff`` or ``full``.
    node_labels : sequence of str, optional
        Labels of the graph the parameters belong to.
    """

    def __init__(self, beta, gamma, z_logits, w_logits, u_logits, v_logits,
                 level_logits, strength_raw, variant="full", node_labels=None):
        self.variant = check_variant(variant)
        self.beta = np.array(beta, dtype=float)
        self.gamma = np.array(gamma, dtype=float)
        self.z_logits = np.array(z_logits, dtype=float)
        self.w_logits = np.array(w_logits, dtype=float)
        self.u_logits = np.array(u_logits, dtype=float)
        self.v_logits = np.array(v_logits, dtype=float)
        self.level_logits = np.array(level_logits, dtype=float)
        self.strength_raw = float(strength_raw)
        self.node_labels = None if node_labels is None else tuple(str(label) for label in node_labels)
        self._check_shapes()

    def _check_shapes(self):
        if self.beta.ndim != 2:
            raise ShapeError("beta must be (N, L), got shape %s" % (self.beta.shape,))
        n_nodes, n_layers = self.beta.shape
        depth = self.level_logits.shape[-1] - 1 if self.level_logits.ndim == 2 else -1
        if depth < 1:
            raise ShapeError("level_logits must be (L, H+1) with H >= 1, got shape %s" % (self.level_logits.shape,))
        expected = {
                "beta": (n_nodes, n_layers),
                "gamma": (n_nodes, n_layers),
                "z_logits": (n_nodes, n_layers),
                "w_logits": (n_nodes, n_layers),
                "u_logits": (n_layers, n_nodes, 2 ** depth),
                "v_logits": (n_layers, n_nodes, 2 ** depth),
                "level_logits": (n_layers, depth + 1),
                }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ShapeError("%s has shape %s, expected %s" % (name, getattr(self, name).shape, shape))
        if np.isnan(self.strength_raw) or self.strength_raw == np.inf:
            raise ShapeError("strength_raw must be a real number or -inf, got %s" % self.strength_raw)
        if self.node_labels is not None and len(self.node_labels) != n_nodes:
            raise ShapeError("Got %s node labels for %s nodes" % (len(self.node_labels), n_nodes))

    @property
    def n_nodes(self):
        return self.beta.shape[0]

    @property
    def n_layers(self):
        return self.beta.shape[1]

    @property
    def depth(self):
        return self.level_logits.shape[1] - 1

    @property
    def dimension(self):
        return 2 ** self.depth

    @property
    def Z(self):
        """ (N, L) source role simplices """
        return to_simplex(self.z_logits, axis=1)

    @property
    def W(self):
        """ (N, L) target role simplices """
        return to_simplex(self.w_logits, axis=1)

    @property
    def U(self):
        """ (L, N, 2**H) finest-level source memberships """
        return to_simplex(self.u_logits, axis=2)

    @property
    def V(self):
        """ (L, N, 2**H) finest-level target memberships """
        return to_simplex(self.v_logits, axis=2)

    @property
    def strength(self):
        return StrengthProfile(self.strength_raw, self.level_logits)

    @property
    def active_groups(self):
        return ACTIVE_GROUPS[self.variant]

    def ladder(self, layer, side="source"):
        """ ``HierarchyLadder`` of every node's memberships in one layer """
        memberships = self.U if side == "source" else self.V
        return build_ladder(memberships[layer], self.depth)

    def arrays(self):
        """ OrderedDict of every parameter group; ``strength_raw`` as a 0-d array """
        groups = collections.OrderedDict()
        for name in PARAMETER_GROUPS:
            groups[name] = np.array(getattr(self, name), dtype=float)
        return groups

    def with_arrays(self, arrays, variant=None):
        """ A copy with some parameter groups replaced """
        groups = self.arrays()
        groups.update(arrays)
        return type(self)(variant=variant or self.variant, node_labels=self.node_labels, **groups)

    def copy(self):
        return copy.deepcopy(self)

    @classmethod
    def zeros(cls, n_nodes, n_layers, depth, variant="full", node_labels=None):
        """ Zero biases and logits, ``s = softplus(0) = ln 2`` """
        dimension = 2 ** depth
        return cls(beta=np.zeros((n_nodes, n_layers)),
                   gamma=np.zeros((n_nodes, n_layers)),
                   z_logits=np.zeros((n_nodes, n_layers)),
                   w_logits=np.zeros((n_nodes, n_layers)),
                   u_logits=np.zeros((n_layers, n_nodes, dimension)),
                   v_logits=np.zeros((n_layers, n_nodes, dimension)),
                   level_logits=np.zeros((n_layers, depth + 1)),
                   strength_raw=0.0,
                   variant=variant,
                   node_labels=node_labels)

    def to_dict(self):
        record = {"format_version": PARAMS_FORMAT_VERSION,
                  "variant": self.variant,
                  "n_nodes": self.n_nodes,
                  "n_layers": self.n_layers,
                  "depth": self.depth,
                  "node_labels": None if self.node_labels is None else list(self.node_labels)}
        for name, values in self.arrays().items():
            record[name] = values.tolist()
        return record

    @classmethod
    def from_dict(cls, record):
        try:
            groups = {name: record[name] for name in PARAMETER_GROUPS}
            params = cls(variant=record["variant"], node_labels=record.get("node_labels"), **groups)
        except KeyError as missing:
            raise ShapeError("Parameter record lacks the entry %s" % missing)
        for key in ("n_nodes", "n_layers", "depth"):
            if key in record and record[key] != getattr(params, key):
                raise ShapeError("Parameter record says %s=%s, the arrays say %s" %
                                 (key, record[key], getattr(params, key)))
        return params

    def save(self, path):
        write_json(path, self.to_dict())
        return path

    @classmethod
    def load(cls, path):
        return cls.from_dict(read_json(path))

    def __eq__(self, other):
        if not isinstance(other, MltParams) or self.variant != other.variant:
            return False
        if self.node_labels != other.node_labels:
            return False
        mine, theirs = self.arrays(), other.arrays()
        return all(mine[name].shape == theirs[name].shape and np.array_equal(mine[name], theirs[name])
                   for name in PARAMETER_GROUPS)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "MltParams(variant=%r, n_nodes=%s, n_layers=%s, depth=%s)" % \
                (self.variant, self.n_nodes, self.n_layers, self.depth)


class MaskPlan(object):
    """
    Dyads left out of the likelihood, e.g. the held-out positives of a
    cross-validation fold.

    Parameters
    ----------
    hidden_dyads : sequence of iterables of (int, int)
        One iterable of ordered pairs per layer.
    """

    def __init__(self, hidden_dyads):
        layers = []
        for layer, dyads in enumerate(hidden_dyads):
            layer_set = frozenset((int(i), int(j)) for i, j in dyads)
            for i, j in layer_set:
                if i == j:
                    raise DomainError("Masked dyad (%s, %s) in layer %s is on the diagonal" % (i, j, layer))
            layers.append(layer_set)
        self.hidden_dyads = tuple(layers)

    @classmethod
    def empty(cls, n_layers):
        return cls([()] * n_layers)

    @property
    def n_hidden(self):
        return sum(len(dyads) for dyads in self.hidden_dyads)

    def weights(self, n_nodes, n_layers):
        """
        (L, N, N) array of ones with zeros on the diagonal and on every
        hidden dyad.
        """
        if len(self.hidden_dyads) != n_layers:
            raise ShapeError("MaskPlan has %s layers, the graph %s" % (len(self.hidden_dyads), n_layers))
        omega = np.ones((n_layers, n_nodes, n_nodes))
        omega[:, np.arange(n_nodes), np.arange(n_nodes)] = 0.0
        for layer, dyads in enumerate(self.hidden_dyads):
            if dyads:
                pairs = np.array(sorted(dyads), dtype=np.intp)
                if pairs.max() >= n_nodes or pairs.min() < 0:
                    raise DomainError("Masked dyad outside of [0, %s) in layer %s" % (n_nodes, layer))
                omega[layer, pairs[:, 0], pairs[:, 1]] = 0.0
        return omega

    def __repr__(self):
        return "MaskPlan(n_hidden=%s)" % [len(dyads) for dyads in self.hidden_dyads]


################################################################################
#
#           P E R - D Y A D   T E R M S
#
################################################################################
def _check_dyad(params, i, j, layer):
    if i == j:
        raise DomainError("Dyad (%s, %s) is on the diagonal" % (i, j))
    for node in (i, j):
        if not 0 <= node < params.n_nodes:
            raise DomainError("Node %s is outside of [0, %s)" % (node, params.n_nodes))
    if not 0 <= layer < params.n_layers:
        raise DomainError("Layer %s is outside of [0, %s)" % (layer, params.n_layers))


def interdependence(params, i, j, layer):
    """
    The dyadic interdependence term ``eta`` of ``(i, j)`` in ``layer``.

    For the full variant this walks the membership ladders of ``i`` and
    ``j`` level by level, the level 0 inner product being 1. The tradeoff
    variant puts the whole strength ``s`` on level 0; the bias variant has no
    interdependence.

    Raises
    ------
    DomainError
        If ``i == j``.
    """
    _check_dyad(params, i, j, layer)
    if params.variant == "bias":
        return 0.0
    z_i = params.Z[i, layer]
    w_j = params.W[j, layer]
    if params.variant == "tradeoff":
        return float(z_i * params.strength.s * w_j)
    source = build_ladder(to_simplex(params.u_logits[layer, i]), params.depth)
    target = build_ladder(to_simplex(params.v_logits[layer, j]), params.depth)
    level_strengths = params.strength.s * to_simplex(params.level_logits[layer])
    total = sum(level_strengths[h] * np.dot(source.level(h), target.level(h))
                for h in range(params.depth + 1))
    return float(z_i * w_j * total)


def log_odds(params, i, j, layer):
    """ ``r = beta[i, l] + gamma[j, l] + eta``; the link probability is ``expit(r)`` """
    _check_dyad(params, i, j, layer)
    return float(params.beta[i, layer] + params.gamma[j, layer] + interdependence(params, i, j, layer))


################################################################################
#
#           L I K E L I H O O D
#
################################################################################
class _Forward(object):
    """ Every intermediate of the log-odds on a node subset """

    def __init__(self, params, nodes):
        self.params = params
        self.nodes = nodes
        self.Z = params.Z[nodes].T
        self.W = params.W[nodes].T
        logits = params.beta[nodes].T[:, :, None] + params.gamma[nodes].T[:, None, :]
        self.s = params.strength.s
        if params.variant == "full":
            self.U = params.U[:, nodes]
            self.V = params.V[:, nodes]
            self.C = np.stack([level_kernel(level_strengths, params.depth)
                               for level_strengths in params.strength.table()])
            self.K = np.einsum("lid,lde,lje->lij", self.U, self.C, self.V)
            logits = logits + self.Z[:, :, None] * self.K * self.W[:, None, :]
        elif params.variant == "tradeoff":
            logits = logits + self.s * self.Z[:, :, None] * self.W[:, None, :]
        self.R = logits


def log_odds_matrix(params, nodes=None):
    """
    (L, S, S) log-odds of every ordered pair of ``nodes`` (all nodes by
    default). The diagonal holds the formula's value and carries no meaning.
    """
    nodes = np.arange(params.n_nodes) if nodes is None else np.asarray(nodes, dtype=np.intp)
    return _Forward(params, nodes).R


class Objective(object):
    """
    The normalized Bernoulli negative log-likelihood of one graph under one
    mask, evaluated for any parameters and any node sample.

    Parameters
    ----------
    graph : MultiplexGraph
    mask : MaskPlan, optional
        Dyads to leave out; nothing is left out by default.
    """

    def __init__(self, graph, mask=None):
        self.graph = graph
        self.mask = mask if mask is not None else MaskPlan.empty(graph.n_layers)
        self.observed = graph.adjacency().astype(float)
        self.omega = self.mask.weights(graph.n_nodes, graph.n_layers)

    def _check(self, params):
        if (params.n_nodes, params.n_layers) != (self.graph.n_nodes, self.graph.n_layers):
            raise ShapeError("Parameters for N=%s, L=%s do not fit a graph with N=%s, L=%s" %
                             (params.n_nodes, params.n_layers, self.graph.n_nodes, self.graph.n_layers))

    def _restrict(self, nodes):
        if nodes is None:
            nodes = np.arange(self.graph.n_nodes)
        nodes = np.asarray(nodes, dtype=np.intp)
        if len(nodes) < 2:
            raise DomainError("The likelihood needs at least 2 nodes, got %s" % len(nodes))
        index = np.ix_(np.arange(self.graph.n_layers), nodes, nodes)
        return nodes, self.observed[index], self.omega[index]

    def loss(self, params, nodes=None):
        """
        Loss over the ordered pairs inside ``nodes``, divided by
        ``S (S - 1)``. With all nodes this is the exact loss, with a uniform
        sample of ``S`` distinct nodes an unbiased estimate of it.
        """
        self._check(params)
        nodes, observed, omega = self._restrict(nodes)
        forward = _Forward(params, nodes)
        n_sample = len(nodes)
        terms = omega * (softplus(forward.R) - observed * forward.R)
        return float(terms.sum() / (n_sample * (n_sample - 1)))

    def loss_and_grad(self, params, nodes=None, wrt=None):
        """
        Loss and its gradient with respect to the unconstrained parameters.

        Parameters
        ----------
        params : MltParams
        nodes : array_like, optional
            Sorted node sample; all nodes by default.
        wrt : iterable of str, optional
            Parameter groups to differentiate; every active group of the
            variant by default. Groups outside the variant get zeros.

        Returns
        -------
        (float, OrderedDict)
            The loss and one gradient array per requested group, shaped like
            ``params.arrays()``.
        """
        self._check(params)
        wrt = params.active_groups if wrt is None else tuple(wrt)
        unknown = set(wrt) - set(PARAMETER_GROUPS)
        if unknown:
            raise DomainError("Unknown parameter groups %s" % sorted(unknown))
        nodes, observed, omega = self._restrict(nodes)
        forward = _Forward(params, nodes)
        n_sample = len(nodes)
        normalizer = float(n_sample * (n_sample - 1))
        loss = float((omega * (softplus(forward.R) - observed * forward.R)).sum() / normalizer)
        # d loss / d r for every pair of the sample
        G = omega * (special.expit(forward.R) - observed) / normalizer

        partial = {"beta": G.sum(axis=2).T, "gamma": G.sum(axis=1).T}
        needs_roles = bool({"z_logits", "w_logits"} & set(wrt))
        if params.variant == "tradeoff":
            if needs_roles:
                partial["Z"] = forward.s * np.einsum("lij,lj->il", G, forward.W)
                partial["W"] = forward.s * np.einsum("lij,li->jl", G, forward.Z)
            if "strength_raw" in wrt:
                partial["s"] = float(np.einsum("lij,li,lj->", G, forward.Z, forward.W))
        elif params.variant == "full":
            if needs_roles:
                GK = G * forward.K
                partial["Z"] = np.einsum("lij,lj->il", GK, forward.W)
                partial["W"] = np.einsum("lij,li->jl", GK, forward.Z)
            A = G * forward.Z[:, :, None] * forward.W[:, None, :]
            if "u_logits" in wrt:
                partial["U"] = np.einsum("lij,lje,lde->lid", A, forward.V, forward.C)
            if "v_logits" in wrt:
                partial["V"] = np.einsum("lij,lid,lde->lje", A, forward.U, forward.C)
            if {"level_logits", "strength_raw"} & set(wrt):
                grad_kernel = np.einsum("lid,lij,lje->lde", forward.U, A, forward.V)
                partial["level_strengths"] = level_kernel_backward(grad_kernel, params.depth)
        return loss, self._pull_back(params, nodes, partial, wrt)

    def _pull_back(self, params, nodes, partial, wrt):
        """ Maps gradients of derived quantities to the unconstrained groups """
        grads = collections.OrderedDict()
        for name in wrt:
            grads[name] = np.zeros_like(np.asarray(getattr(params, name), dtype=float))
        for name in ("beta", "gamma"):
            if name in grads:
                grads[name][nodes] = partial[name]
        for name, key, simplices in (("z_logits", "Z", params.Z), ("w_logits", "W", params.W)):
            if name in grads and key in partial:
                dense = np.zeros_like(simplices)
                dense[nodes] = partial[key]
                grads[name] = softmax_backward(simplices, dense, axis=1)
        for name, key, memberships in (("u_logits", "U", params.U), ("v_logits", "V", params.V)):
            if name in grads and key in partial:
                dense = np.zeros_like(memberships)
                dense[:, nodes] = partial[key]
                grads[name] = softmax_backward(memberships, dense, axis=2)
        profile = params.strength
        if "level_strengths" in partial:
            grad_strengths = partial["level_strengths"]
            pi = profile.pi
            if "level_logits" in grads:
                grads["level_logits"] = softmax_backward(pi, grad_strengths * profile.s, axis=1)
            partial["s"] = float((grad_strengths * pi).sum())
        if "strength_raw" in grads and "s" in partial:
            grads["strength_raw"] = np.array(partial["s"] * special.expit(profile.global_raw))
        return grads


def draw_sample(n_nodes, sample_size, rng):
    """
    ``sample_size`` distinct nodes drawn uniformly, sorted.

    Raises
    ------
    DomainError
        Unless ``2 <= sample_size <= n_nodes``.
    """
    if not 2 <= sample_size <= n_nodes:
        raise DomainError("Sample size must lie in [2, %s], got %s" % (n_nodes, sample_size))
    if sample_size == n_nodes:
        return np.arange(n_nodes)
    return np.sort(rng.choice(n_nodes, size=sample_size, replace=False))


def nll(graph, params, mask=None):
    """ Normalized Bernoulli negative log-likelihood over every unmasked dyad """
    return Objective(graph, mask).loss(params)


def nll_sampled(graph, params, mask, sample_size, rng):
    """
    Unbiased estimate of ``nll`` from ``sample_size`` distinct nodes drawn
    uniformly with ``rng``.

    Every ordered pair is inside the sample with probability
    ``S (S - 1) / (N (N - 1))``, so dividing the sampled sum by ``S (S - 1)``
    instead of ``N (N - 1)`` keeps the expectation equal to ``nll``.
    """
    nodes = draw_sample(graph.n_nodes, sample_size, rng)
    return Objective(graph, mask).loss(params, nodes)


def nll_and_grad(graph, params, mask=None, sample=None, wrt=None):
    """ Loss and gradient, see ``Objective.loss_and_grad`` """
    return Objective(graph, mask).loss_and_grad(params, sample, wrt)


def nll_grad(graph, params, mask=None, sample=None):
    """ Gradient of the (sampled) loss for every active parameter group """
    return nll_and_grad(graph, params, mask, sample)[1]


def sample_network(params, rng):
    """
    Draws a multiplex network from the model: every ordered dyad of every
    layer independently with probability ``expit(r)``.

    Parameters
    ----------
    params : MltParams
    rng : numpy.random.Generator

    Returns
    -------
    MultiplexGraph
        Labelled with ``params.node_labels`` if present.
    """
    probabilities = special.expit(log_odds_matrix(params))
    draws = rng.random(probabilities.shape) < probabilities
    draws[:, np.arange(params.n_nodes), np.arange(params.n_nodes)] = False
    graph = MultiplexGraph.from_adjacency(draws, params.node_labels)
    logger.debug("Sampled %s", graph)
    return graph
