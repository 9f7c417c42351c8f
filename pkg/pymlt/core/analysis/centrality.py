"""
Node centralities of one layer and their relation to the fitted biases.

Source-role centralities measure outbound influence: Katz and closeness are
computed on the layer with every tie reversed. Target-role centralities use
the layer as it is.
"""
import numpy as np
import networkx as nx

import pymlt.core.logging as logging
from pymlt.core.analysis import _pearson, _spearman
from pymlt.core.errors import DomainError


logger = logging.getLogger(__name__)

KINDS = ("in_degree", "out_degree", "katz", "closeness", "betweenness")
ROLES = ("source", "target")
CORRELATION_KINDS = ("degree", "katz", "closeness", "betweenness")

KATZ_DAMPING = 0.85
SPECTRAL_RADIUS_TOLERANCE = 1e-10


def katz_alpha(digraph):
    """
    Attenuation ``0.85 / lambda_max`` with the spectral radius of the
    adjacency matrix. A nilpotent adjacency (no cycles) has spectral radius
    zero; every attenuation converges there and 0.85 is used.
    """
    adjacency = nx.to_numpy_array(digraph, nodelist=sorted(digraph.nodes()))
    radius = float(np.max(np.abs(np.linalg.eigvals(adjacency)))) if adjacency.size else 0.0
    if radius < SPECTRAL_RADIUS_TOLERANCE:
        return KATZ_DAMPING
    return KATZ_DAMPING / radius


def centrality(graph, layer, kind, role="target"):
    """
    One centrality of every node of a layer.

    Parameters
    ----------
    graph : MultiplexGraph
    layer : int
    kind : str
        ``in_degree`` and ``out_degree`` are edge counts. ``katz`` solves
        ``x = alpha A.T x + 1`` with ``alpha = 0.85 / lambda_max``.
        ``closeness`` is harmonic closeness, the sum of reciprocal distances,
        which stays finite on disconnected layers. ``betweenness`` counts
        shortest paths between ordered pairs, endpoints excluded.
    role : str
        ``source`` reverses the ties for ``katz`` and ``closeness``.

    Returns
    -------
    numpy.ndarray
        Length N; zeros for Katz, closeness and betweenness of an empty layer.
    """
    if kind not in KINDS:
        raise DomainError("Unknown centrality %r, use one of %s" % (kind, ", ".join(KINDS)))
    if role not in ROLES:
        raise DomainError("role must be 'source' or 'target', got %r" % (role,))
    adjacency = graph.layer_adjacency(layer)
    if kind == "out_degree":
        return adjacency.sum(axis=1).astype(float)
    if kind == "in_degree":
        return adjacency.sum(axis=0).astype(float)
    n_nodes = graph.n_nodes
    if not adjacency.any():
        return np.zeros(n_nodes)
    digraph = graph.layer_digraph(layer)
    if role == "source" and kind in ("katz", "closeness"):
        digraph = digraph.reverse(copy=True)
    if kind == "katz":
        values = nx.katz_centrality_numpy(digraph, alpha=katz_alpha(digraph), beta=1.0, normalized=False)
    elif kind == "closeness":
        values = nx.harmonic_centrality(digraph)
    else:
        values = nx.betweenness_centrality(digraph, normalized=False)
    return np.array([values[node] for node in range(n_nodes)], dtype=float)


def paired_centralities(graph, layer, kinds=CORRELATION_KINDS):
    """
    The centralities each bias is compared with: ``result["beta"][kind]`` in
    the source role (out-degree for ``degree``), ``result["gamma"][kind]``
    in the target role (in-degree for ``degree``).
    """
    paired = {"beta": {}, "gamma": {}}
    for kind in kinds:
        if kind == "degree":
            paired["beta"][kind] = centrality(graph, layer, "out_degree")
            paired["gamma"][kind] = centrality(graph, layer, "in_degree")
        else:
            paired["beta"][kind] = centrality(graph, layer, kind, role="source")
            paired["gamma"][kind] = centrality(graph, layer, kind, role="target")
    return paired


def centrality_correlations(graph, params, kinds=CORRELATION_KINDS, centralities=None):
    """
    Correlates the sender biases with source-role centralities and the
    receiver biases with target-role centralities, layer by layer.

    For ``degree`` the sender bias is paired with the out-degree and the
    receiver bias with the in-degree. ``centralities`` maps layers to
    precomputed ``paired_centralities``.

    Returns
    -------
    dict
        ``result[layer][kind]["beta" | "gamma"]`` holds ``spearman`` and
        ``pearson``; NaN where a centrality is constant.
    """
    results = {}
    for layer in range(graph.n_layers):
        results[layer] = {}
        if centralities is not None:
            paired = centralities[layer]
        else:
            paired = paired_centralities(graph, layer, kinds)
        for kind in kinds:
            entry = {}
            for name, biases in (("beta", params.beta[:, layer]), ("gamma", params.gamma[:, layer])):
                values = paired[name][kind]
                entry[name] = {"spearman": _spearman(biases, values), "pearson": _pearson(biases, values)}
                if np.isnan(entry[name]["spearman"]):
                    logger.warning("Layer %s: %s centrality is constant, correlation with %s undefined",
                                   layer + 1, kind, name)
            results[layer][kind] = entry
    return results
