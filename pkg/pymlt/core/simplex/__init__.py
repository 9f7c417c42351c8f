"""
Simplex parameterizations and hierarchical memberships.

Points on a simplex are stored as unconstrained logits and mapped with an
exp-normalize (softmax). Hierarchical memberships are stored at the finest
level of a binary tree of depth ``H``; coarser levels come from summing
adjacent pairs of entries, so level ``h`` has ``D_h = 2**h`` entries and level
0 is the scalar 1.

The strength of each hierarchy level in layer ``l`` is
``s_h = s * pi_h`` with a global ``s = softplus(global_raw) >= 0`` and a
per-layer distribution ``pi = softmax(level_logits[l])`` over ``h = 0..H``.

----
"""
import functools
import math

import numpy as np
from scipy import special

from pymlt.core.errors import DomainError, ShapeError


SIMPLEX_TOLERANCE = 1e-9


def softplus(x):
    """ log(1 + exp(x)), stable for large positive and negative x """
    return np.logaddexp(0.0, x)


def softplus_inverse(y):
    """
    Inverse of ``softplus`` for ``y >= 0``; ``y == 0`` maps to ``-inf``.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("softplus_inverse is only defined for y >= 0")
    with np.errstate(divide="ignore", over="ignore"):
        # log(expm1(y)) == y + log(1 - exp(-y)), the second form does not overflow
        out = np.where(y > 20.0, y + np.log1p(-np.exp(-np.maximum(y, 20.0))), np.log(np.expm1(y)))
    return out if out.ndim else float(out)


def to_simplex(logits, axis=-1):
    """
    Maps logits onto the probability simplex along ``axis``.

    Parameters
    ----------
    logits : array_like
        Finite real values.
    axis : int, optional
        The axis holding the simplex coordinates (default the last one).

    Returns
    -------
    numpy.ndarray
        Positive entries summing to one along ``axis``; invariant under
        adding a constant to all logits.

    Raises
    ------
    DomainError
        If any logit is not finite.
    """
    logits = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(logits)):
        raise DomainError("to_simplex needs finite logits")
    return special.softmax(logits, axis=axis)


def softmax_backward(probabilities, grad_probabilities, axis=-1):
    """ Pulls a gradient with respect to softmax outputs back to the logits """
    inner = np.sum(grad_probabilities * probabilities, axis=axis, keepdims=True)
    return probabilities * (grad_probabilities - inner)


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


class SimplexVector(object):
    """
    A point on a simplex, stored as logits.

    Attributes
    ----------
    logits : numpy.ndarray
        Length ``D`` real vector.
    value : numpy.ndarray
        ``to_simplex(logits)``
    """

    def __init__(self, logits):
        self.logits = np.asarray(logits, dtype=float)
        if self.logits.ndim != 1:
            raise ShapeError("SimplexVector needs a 1-d logit vector, got shape %s" % (self.logits.shape,))
        self.value = to_simplex(self.logits)

    @classmethod
    def from_probabilities(cls, probabilities):
        """ Builds a SimplexVector from strictly positive probabilities """
        probabilities = np.asarray(probabilities, dtype=float)
        if np.any(probabilities <= 0):
            raise DomainError("from_probabilities needs strictly positive entries")
        return cls(np.log(probabilities))

    def __len__(self):
        return len(self.logits)

    def __repr__(self):
        return "SimplexVector(%s)" % np.array2string(self.value, precision=4)


class HierarchyLadder(object):
    """
    Membership vectors of one node at every level of a binary hierarchy.

    Attributes
    ----------
    depth : int
        ``H``, the level of the finest memberships.
    levels : list of numpy.ndarray
        ``levels[h]`` has ``2**h`` entries along its last axis; ``levels[0]``
        is all ones.
    """

    def __init__(self, levels):
        self.levels = list(levels)
        self.depth = len(self.levels) - 1

    def level(self, h):
        return self.levels[h]

    @property
    def finest(self):
        return self.levels[-1]

    def __len__(self):
        return len(self.levels)

    def __repr__(self):
        return "HierarchyLadder(depth=%s)" % self.depth


def coarsen(level):
    """ Sums adjacent pairs along the last axis: entry k <- entries 2k and 2k+1 """
    level = np.asarray(level)
    return level.reshape(level.shape[:-1] + (level.shape[-1] // 2, 2)).sum(axis=-1)


def build_ladder(finest, depth=None):
    """
    Builds every coarser level from finest-level memberships.

    Parameters
    ----------
    finest : SimplexVector or array_like
        Memberships at level ``H``; the last axis must have ``2**H`` entries.
        Leading axes (e.g. nodes) are carried along.
    depth : int, optional
        ``H``. Derived from the dimension if not given.

    Returns
    -------
    HierarchyLadder

    Raises
    ------
    ShapeError
        If the dimension is not a power of two, or not ``2**depth``.

    Examples
    --------
    >>> build_ladder([0.1, 0.2, 0.3, 0.4]).levels[1]
    array([0.3, 0.7])
    """
    if isinstance(finest, SimplexVector):
        finest = finest.value
    finest = np.asarray(finest, dtype=float)
    dimension = finest.shape[-1]
    if not is_power_of_two(dimension):
        raise ShapeError("Finest level dimension %s is not a power of two" % dimension)
    derived_depth = int(dimension).bit_length() - 1
    if depth is not None and int(depth) != derived_depth:
        raise ShapeError("Finest level dimension %s does not match depth %s" % (dimension, depth))
    levels = [finest]
    for _ in range(derived_depth):
        levels.append(coarsen(levels[-1]))
    return HierarchyLadder(levels[::-1])


def kron_membership(branches):
    """
    Membership over the ``2**h`` root-to-leaf paths of a binary hierarchy.

    Parameters
    ----------
    branches : list of array_like
        Binary branching proportions, one 2-vector per level, root first.

    Returns
    -------
    numpy.ndarray
        The Kronecker product of the branches; ``array([1.])`` for an empty
        list.

    Examples
    --------
    >>> kron_membership([[0.7, 0.3], [0.2, 0.8]])
    array([0.14, 0.56, 0.06, 0.24])
    """
    checked = []
    for branch in branches:
        branch = np.asarray(branch, dtype=float)
        if branch.shape != (2,) or np.any(branch < 0) or abs(branch.sum() - 1.0) > SIMPLEX_TOLERANCE:
            raise DomainError("Branch %s is not a point on the 1-simplex" % (branch,))
        checked.append(branch)
    return functools.reduce(np.kron, checked, np.ones(1))


def depth_for(n_nodes):
    """
    Number of binary splits of the hierarchy for a network of ``n_nodes``:
    the floor of the natural logarithm, at least 1.

    Examples
    --------
    >>> depth_for(150)
    5
    """
    if n_nodes < 2:
        raise DomainError("depth_for needs at least 2 nodes, got %s" % n_nodes)
    return max(1, int(math.floor(math.log(n_nodes))))


def level_masks(depth):
    """
    (H+1, D, D) boolean array; ``masks[h, a, b]`` is True when finest
    entries ``a`` and ``b`` fall into the same group at level ``h``.

    With these masks ``<U_h[i], V_h[j]> = U[i] @ masks[h] @ V[j]`` for
    finest-level rows ``U[i]`` and ``V[j]``.
    """
    dimension = 2 ** depth
    index = np.arange(dimension)
    return np.stack([(index[:, None] >> (depth - h)) == (index[None, :] >> (depth - h))
                     for h in range(depth + 1)])


def level_kernel(level_strengths, depth):
    """
    ``C = sum_h s_h * masks[h]``: the D x D matrix for which
    ``sum_h s_h <U_h[i], V_h[j]> = U[i] @ C @ V[j]``.
    """
    level_strengths = np.asarray(level_strengths, dtype=float)
    return np.tensordot(level_strengths, level_masks(depth).astype(float), axes=1)


def level_kernel_backward(grad_kernel, depth):
    """
    Gradient with respect to the level strengths, given one for ``level_kernel``.

    ``grad_kernel`` may stack several D x D gradients in its leading axes, one
    row of level gradients comes back per kernel.
    """
    return np.tensordot(np.asarray(grad_kernel, dtype=float), level_masks(depth).astype(float),
                        axes=([-2, -1], [1, 2]))


class StrengthProfile(object):
    """
    Hierarchy strengths ``s_h^l = s * pi_h^l``.

    Parameters
    ----------
    global_raw : float
        ``s = softplus(global_raw)``; ``-inf`` switches interdependence off.
    level_logits : array_like
        (L, H+1) logits; ``pi^l = softmax(level_logits[l])``.
    """

    def __init__(self, global_raw, level_logits):
        self.global_raw = float(global_raw)
        self.level_logits = np.atleast_2d(np.asarray(level_logits, dtype=float))
        if np.isnan(self.global_raw) or self.global_raw == np.inf:
            raise DomainError("global_raw must be a real number or -inf, got %s" % global_raw)

    @property
    def s(self):
        return float(softplus(self.global_raw))

    @property
    def pi(self):
        """ (L, H+1) level proportions """
        return to_simplex(self.level_logits, axis=1)

    @property
    def depth(self):
        return self.level_logits.shape[1] - 1

    def table(self):
        """ (L, H+1) array of every ``s_h^l`` """
        return self.s * self.pi

    def __repr__(self):
        return "StrengthProfile(s=%.4g, n_layers=%s, depth=%s)" % \
                (self.s, self.level_logits.shape[0], self.depth)


def strengths(profile, layer):
    """
    The level strengths ``s_0^l .. s_H^l`` of one layer; they sum to ``s``.

    Examples
    --------
    >>> profile = StrengthProfile(softplus_inverse(2.0), [np.log([0.25, 0.25, 0.5])])
    >>> strengths(profile, 0)
    array([0.5, 0.5, 1. ])
    """
    layer = int(layer)
    if not 0 <= layer < profile.level_logits.shape[0]:
        raise DomainError("Layer %s is outside of [0, %s)" % (layer, profile.level_logits.shape[0]))
    return profile.s * to_simplex(profile.level_logits[layer])
