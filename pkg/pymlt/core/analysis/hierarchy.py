"""
Diagnostics of the fitted hierarchical memberships.

At a level ``h`` every node gets a dominant source and a dominant target
group, the argmax of its coarsened memberships. The block density of a layer
is the mean link density from the source members to the target members of
the same group. As a control, the finest-level dimensions are shuffled
before coarsening, which assigns parent blocks to child blocks at random.
"""
import numpy as np

import pymlt.core.logging as logging
from pymlt.core.errors import DomainError
from pymlt.core.helpers import iteration_streams
from pymlt.core.simplex import build_ladder


logger = logging.getLogger(__name__)


def _check_level(params, level):
    if not 0 <= level <= params.depth:
        raise DomainError("Level %s is outside of [0, %s]" % (level, params.depth))


def _dominant(memberships, depth, level):
    return build_ladder(memberships, depth).level(level).argmax(axis=1)


def dominant_blocks(params, layer, level, side="source"):
    """
    Dominant group of every node at ``level``; ties go to the lowest group.

    Parameters
    ----------
    params : MltParams
    layer : int
    level : int
        ``0 .. H``
    side : str
        ``source`` for u, ``target`` for v.
    """
    _check_level(params, level)
    if side not in ("source", "target"):
        raise DomainError("side must be 'source' or 'target', got %r" % (side,))
    memberships = params.U[layer] if side == "source" else params.V[layer]
    return _dominant(memberships, params.depth, level)


def block_order(params, layer, level):
    """ Node orderings by dominant source and target group, for reordering an adjacency matrix """
    source = dominant_blocks(params, layer, level, "source")
    target = dominant_blocks(params, layer, level, "target")
    return np.argsort(source, kind="stable"), np.argsort(target, kind="stable")


def _block_density(adjacency, source_blocks, target_blocks):
    densities = []
    for group in np.intersect1d(source_blocks, target_blocks):
        senders = source_blocks == group
        receivers = target_blocks == group
        n_pairs = senders.sum() * receivers.sum() - np.sum(senders & receivers)
        if n_pairs == 0:
            continue
        densities.append(adjacency[np.ix_(senders, receivers)].sum() / float(n_pairs))
    return float(np.mean(densities)) if densities else 0.0


def block_density(graph, params, layer, level):
    """
    Mean over the groups present on both sides of the link density from
    nodes whose dominant source group is ``k`` to nodes whose dominant target
    group is ``k``; self pairs are not counted.
    """
    _check_level(params, level)
    return _block_density(graph.layer_adjacency(layer),
                          dominant_blocks(params, layer, level, "source"),
                          dominant_blocks(params, layer, level, "target"))


def permuted_block_density(graph, params, layer, level, n_perm, rng):
    """
    ``block_density`` after shuffling the finest-level dimensions, one
    shuffle shared by the source and target memberships per draw.

    Returns
    -------
    numpy.ndarray
        ``n_perm`` densities.
    """
    _check_level(params, level)
    adjacency = graph.layer_adjacency(layer)
    source, target = params.U[layer], params.V[layer]
    densities = []
    for stream in iteration_streams(rng, n_perm):
        leaves = stream.permutation(params.dimension)
        densities.append(_block_density(adjacency,
                                        _dominant(source[:, leaves], params.depth, level),
                                        _dominant(target[:, leaves], params.depth, level)))
    return np.array(densities)


def hierarchy_density_profile(graph, params, layer, n_perm, rng):
    """
    Observed and shuffled block densities for every level ``1 .. H``.

    Returns
    -------
    list of dict
        ``level``, ``observed``, ``permuted_mean`` per level.
    """
    profile = []
    for level, stream in zip(range(1, params.depth + 1), iteration_streams(rng, params.depth)):
        permuted = permuted_block_density(graph, params, layer, level, n_perm, stream)
        profile.append({"level": level,
                        "observed": block_density(graph, params, layer, level),
                        "permuted_mean": float(permuted.mean()) if permuted.size else np.nan})
        logger.debug("Layer %s level %s: block density %.4f, shuffled %.4f",
                     layer + 1, level, profile[-1]["observed"], profile[-1]["permuted_mean"])
    return profile
