"""
Statistics on fitted embeddings and networks.

+ soft normalized mutual information between row-simplex assignments
+ rank and product-moment correlations
+ bootstrap distributions of mean correlations
+ permutation tests with the add-one p-value rule
+ the one-sided Mann-Whitney U test

Every resampling loop derives one random generator per iteration from the
generator it is given (``pymlt.core.helpers.iteration_streams``), so results
do not depend on the number of threads.

----
"""
import collections
import math

import numpy as np
import pandas as pd
from scipy import special, stats

import pymlt.core.logging as logging
from pymlt.core.errors import DomainError, ShapeError
from pymlt.core.helpers import iteration_streams, parallel_map


logger = logging.getLogger(__name__)

ROW_TOLERANCE = 1e-9
CI_PERCENTILES = (2.5, 97.5)
EXACT_MANN_WHITNEY_LIMIT = 20
BOOTSTRAP_MODES = ("within", "across")


PermutationResult = collections.namedtuple(
    "PermutationResult", ["observed_stat", "null_samples", "p_value", "alternative"])
PermutationResult.__doc__ = """Observed statistic, its permutation null and the add-one p-value"""

BootstrapResult = collections.namedtuple(
    "BootstrapResult", ["observed", "samples", "ci_low", "ci_high", "n_degenerate", "mode"])
BootstrapResult.__doc__ = """Bootstrap distribution of a mean correlation with its percentile interval"""

MannWhitneyResult = collections.namedtuple("MannWhitneyResult", ["U", "p_value", "method"])


class SoftAssignment(object):
    """
    An N x K matrix whose rows are points on a simplex.

    Parameters
    ----------
    matrix : array_like
        Rows must sum to one within 1e-9.

    Raises
    ------
    ShapeError
        If ``matrix`` is not two dimensional.
    DomainError
        For negative entries or rows that do not sum to one.
    """

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ShapeError("A soft assignment is an N x K matrix, got shape %s" % (matrix.shape,))
        if np.any(matrix < 0) or np.any(np.abs(matrix.sum(axis=1) - 1.0) > ROW_TOLERANCE):
            raise DomainError("Every row of a soft assignment must lie on the simplex")
        self.matrix = matrix

    @classmethod
    def from_profile(cls, profile):
        """ The active rows of a ``DegreeProfile`` """
        return cls(profile.normalized[profile.active])

    def rows(self, index):
        return type(self)(self.matrix[index])

    @property
    def n_rows(self):
        return self.matrix.shape[0]

    @property
    def n_columns(self):
        return self.matrix.shape[1]

    def __repr__(self):
        return "SoftAssignment(%s x %s)" % self.matrix.shape


def _matrix(assignment):
    return assignment.matrix if isinstance(assignment, SoftAssignment) else SoftAssignment(assignment).matrix


def add_one_p_value(null_samples, observed):
    """ ``(1 + #{null >= observed}) / (1 + n)`` """
    null_samples = np.asarray(null_samples, dtype=float)
    return float((1 + np.count_nonzero(null_samples >= observed)) / (1.0 + null_samples.size))


################################################################################
#
#           M U T U A L   I N F O R M A T I O N
#
################################################################################
def nmi_soft(a, b):
    """
    Normalized mutual information of two soft assignments of the same rows.

    The joint distribution is ``P = a.T @ b / N``; with its marginals the
    mutual information ``I`` and the entropies give ``NMI = 2 I / (H_a + H_b)``.
    For hard (one-hot) assignments this is the usual contingency table NMI
    with arithmetic normalization.

    Returns
    -------
    float
        In [0, 1]; 0 if either assignment has zero entropy.

    Raises
    ------
    ShapeError
        If the row counts differ.
    """
    a, b = _matrix(a), _matrix(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError("Assignments have %s and %s rows" % (a.shape[0], b.shape[0]))
    if a.shape[0] == 0:
        raise ShapeError("Assignments have no rows")
    joint = a.T.dot(b) / a.shape[0]
    p_a, p_b = joint.sum(axis=1), joint.sum(axis=0)
    h_a, h_b = special.entr(p_a).sum(), special.entr(p_b).sum()
    if h_a <= 0 or h_b <= 0:
        return 0.0
    independent = np.outer(p_a, p_b)
    positive = joint > 0
    mutual = np.sum(joint[positive] * np.log(joint[positive] / independent[positive]))
    return float(np.clip(2.0 * mutual / (h_a + h_b), 0.0, 1.0))


def nmi_permutation_null(a, b, n_perm, rng, threads=1):
    """
    ``nmi_soft(a, b)`` against the NMI after randomly permuting the rows of
    ``b``; one-sided (greater) add-one p-value.
    """
    a, b = _matrix(a), _matrix(b)
    observed = nmi_soft(a, b)

    def permuted(stream):
        return nmi_soft(a, b[stream.permutation(b.shape[0])])

    null = np.array(parallel_map(permuted, iteration_streams(rng, n_perm), threads))
    return PermutationResult(observed, null, add_one_p_value(null, observed), "greater")


################################################################################
#
#           C O R R E L A T I O N S
#
################################################################################
def _paired(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ShapeError("Vectors have lengths %s and %s" % (x.size, y.size))
    if x.size < 3:
        raise DomainError("A correlation needs at least 3 pairs, got %s" % x.size)
    return x, y


def _is_constant(values):
    return bool(np.all(values == values[0]))


def _spearman(x, y):
    if _is_constant(x) or _is_constant(y):
        return np.nan
    rho, _ = stats.spearmanr(x, y)
    return float(rho)


def _pearson(x, y):
    if _is_constant(x) or _is_constant(y):
        return np.nan
    r, _ = stats.pearsonr(x, y)
    return float(r)


CORRELATIONS = {"spearman": _spearman, "pearson": _pearson}


def spearman(x, y):
    """
    Pearson correlation of the average ranks of ``x`` and ``y``.

    Returns NaN, with a warning, if either vector is constant.

    Example
    -------
    >>> round(spearman([1, 2, 3, 4], [10, 20, 30, 400]), 6)
    1.0
    """
    x, y = _paired(x, y)
    rho = _spearman(x, y)
    if np.isnan(rho):
        logger.warning("Spearman correlation undefined for a constant vector")
    return rho


def pearson(x, y):
    """ Product-moment correlation; NaN with a warning for a constant vector """
    x, y = _paired(x, y)
    r = _pearson(x, y)
    if np.isnan(r):
        logger.warning("Pearson correlation undefined for a constant vector")
    return r


def bootstrap_mean_corr(datasets, n_boot, mode, rng, statistic="spearman", threads=1):
    """
    Bootstrap distribution of a mean correlation over networks.

    Parameters
    ----------
    datasets : sequence of (x, y)
        One pair of equally long vectors per network.
    n_boot : int
    mode : str
        ``within``: resample the nodes of every network with replacement and
        average the per-network correlations. ``across``: resample the
        networks with replacement and correlate their pooled pairs.
    rng : numpy.random.Generator
    statistic : str, optional
        ``spearman`` or ``pearson``.

    Returns
    -------
    BootstrapResult
        ``samples`` has ``n_boot`` entries, NaN for resamples where every
        correlation was undefined; ``n_degenerate`` counts the undefined
        correlations that were skipped.
    """
    if mode not in BOOTSTRAP_MODES:
        raise DomainError("mode must be one of %s, got %r" % (BOOTSTRAP_MODES, mode))
    correlate = CORRELATIONS[statistic]
    datasets = [(np.asarray(x, dtype=float).ravel(), np.asarray(y, dtype=float).ravel()) for x, y in datasets]
    if not datasets:
        raise DomainError("bootstrap_mean_corr needs at least one network")
    if mode == "within":
        for x, y in datasets:
            _paired(x, y)
    else:
        _paired(np.concatenate([x for x, _ in datasets]), np.concatenate([y for _, y in datasets]))

    def pooled(indices):
        x = np.concatenate([datasets[k][0] for k in indices])
        y = np.concatenate([datasets[k][1] for k in indices])
        return correlate(x, y) if x.size >= 3 else np.nan

    def within(stream):
        values = []
        for x, y in datasets:
            index = stream.integers(0, x.size, size=x.size)
            values.append(correlate(x[index], y[index]))
        return np.array(values)

    def across(stream):
        return np.array([pooled(stream.integers(0, len(datasets), size=len(datasets)))])

    draws = parallel_map(within if mode == "within" else across, iteration_streams(rng, n_boot), threads)
    n_degenerate = int(sum(np.count_nonzero(np.isnan(values)) for values in draws))
    samples = np.array([np.nanmean(values) if np.isfinite(values).any() else np.nan for values in draws])
    if n_degenerate:
        logger.info("Bootstrap skipped %s undefined correlations", n_degenerate)
    if mode == "within":
        observed = np.array([correlate(x, y) for x, y in datasets])
        observed = float(np.nanmean(observed)) if np.isfinite(observed).any() else np.nan
    else:
        observed = pooled(range(len(datasets)))
    finite = samples[np.isfinite(samples)]
    if finite.size:
        ci_low, ci_high = np.percentile(finite, CI_PERCENTILES)
    else:
        ci_low = ci_high = np.nan
    return BootstrapResult(observed, samples, float(ci_low), float(ci_high), n_degenerate, mode)


################################################################################
#
#           P E R M U T A T I O N   T E S T S
#
################################################################################
def permute_rows_test(assignment, layer, n_perm, rng, threads=1):
    """
    Is the mean of column ``layer`` further from ``1/K`` than expected if
    every row's components were exchangeable?

    The null permutes the components of every row independently. The
    p-value is two-sided through the absolute deviation from ``1/K``.

    Returns
    -------
    PermutationResult
        ``observed_stat`` and ``null_samples`` are column means.
    """
    matrix = _matrix(assignment)
    center = 1.0 / matrix.shape[1]
    observed = float(matrix[:, layer].mean())

    def permuted(stream):
        return float(stream.permuted(matrix, axis=1)[:, layer].mean())

    null = np.array(parallel_map(permuted, iteration_streams(rng, n_perm), threads))
    p_value = add_one_p_value(np.abs(null - center), abs(observed - center))
    return PermutationResult(observed, null, p_value, "two-sided")


def order_holds(per_network_means, claimed_order):
    """ Per network: do the means strictly decrease along ``claimed_order``? """
    ordered = np.asarray(per_network_means, dtype=float)[:, list(claimed_order)]
    return np.all(ordered[:, :-1] > ordered[:, 1:], axis=1)


def layer_order_test(per_network_means, claimed_order, n_perm, rng, threads=1):
    """
    Fraction of networks whose layer means follow ``claimed_order`` (layer
    indices, largest mean first), tested against layer labels that are
    exchangeable within every network.

    Parameters
    ----------
    per_network_means : array_like
        (networks, L) matrix.
    claimed_order : sequence of int
        A permutation of ``0 .. L-1``.

    Returns
    -------
    PermutationResult
        One-sided (greater), add-one p-value.
    """
    means = np.atleast_2d(np.asarray(per_network_means, dtype=float))
    claimed_order = [int(layer) for layer in claimed_order]
    if sorted(claimed_order) != list(range(means.shape[1])):
        raise DomainError("claimed_order %s is not a permutation of the %s layers" %
                          (claimed_order, means.shape[1]))
    if means.shape[0] < 2:
        logger.warning("Layer order test on %s network(s); the p-value cannot drop below %.3f",
                       means.shape[0], 1.0 / math.factorial(means.shape[1]))
    observed = float(order_holds(means, claimed_order).mean())

    def permuted(stream):
        return float(order_holds(stream.permuted(means, axis=1), claimed_order).mean())

    null = np.array(parallel_map(permuted, iteration_streams(rng, n_perm), threads))
    return PermutationResult(observed, null, add_one_p_value(null, observed), "greater")


def _u_statistic(x, y, axis=-1):
    x = np.moveaxis(np.asarray(x, dtype=float), axis, -1)
    y = np.moveaxis(np.asarray(y, dtype=float), axis, -1)
    greater = x[..., :, None] > y[..., None, :]
    ties = x[..., :, None] == y[..., None, :]
    return (greater + 0.5 * ties).sum(axis=(-2, -1))


def mann_whitney_one_sided(a, b):
    """
    Mann-Whitney U test of ``a`` being stochastically greater than ``b``.

    ``U`` counts the pairs with ``a_i > b_j``, ties counting one half. Up to
    20 values in total the p-value is exact: from the exact null
    distribution without ties, by enumerating every split of the pooled
    values with ties. Larger samples use the normal approximation with tie
    correction.

    Example
    -------
    >>> result = mann_whitney_one_sided([3, 4], [1, 2])
    >>> result.U, round(result.p_value, 4)
    (4.0, 0.1667)
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise DomainError("The Mann-Whitney test needs two nonempty samples")
    u_value = float(_u_statistic(a, b))
    pooled = np.concatenate([a, b])
    if pooled.size <= EXACT_MANN_WHITNEY_LIMIT:
        if np.unique(pooled).size == pooled.size:
            result = stats.mannwhitneyu(a, b, alternative="greater", method="exact")
            return MannWhitneyResult(u_value, float(result.pvalue), "exact")
        result = stats.permutation_test((a, b), _u_statistic, permutation_type="independent",
                                        alternative="greater", n_resamples=np.inf,
                                        vectorized=True, batch=10000)
        return MannWhitneyResult(u_value, float(result.pvalue), "exact-ties")
    result = stats.mannwhitneyu(a, b, alternative="greater", method="asymptotic", use_continuity=True)
    return MannWhitneyResult(u_value, float(result.pvalue), "asymptotic")


def compare_layer_distributions(samples_by_layer):
    """
    One-sided Mann-Whitney tests between the bootstrap distributions of
    every ordered pair of layers.

    Parameters
    ----------
    samples_by_layer : dict
        Layer to a vector of bootstrap samples; NaN samples are dropped.

    Returns
    -------
    list of dict
        One entry per ordered pair with ``greater`` and ``lesser`` layers,
        ``U``, ``p_value`` (for ``greater`` stochastically larger) and
        ``method``. Layers without finite samples are left out.
    """
    finite = {}
    for layer, samples in samples_by_layer.items():
        samples = np.asarray(samples, dtype=float).ravel()
        samples = samples[np.isfinite(samples)]
        if samples.size:
            finite[layer] = samples
        else:
            logger.warning("Layer %s has no finite bootstrap samples to compare", layer)
    comparisons = []
    for greater in sorted(finite):
        for lesser in sorted(finite):
            if greater == lesser:
                continue
            result = mann_whitney_one_sided(finite[greater], finite[lesser])
            comparisons.append({"greater": greater, "lesser": lesser, "U": result.U,
                                "p_value": result.p_value, "method": result.method})
    return comparisons


################################################################################
#
#           S U M M A R I E S
#
################################################################################
def role_layer_means(params):
    """ Column means of the source and target role simplices, one entry per layer """
    return params.Z.mean(axis=0), params.W.mean(axis=0)


def gain_statistic_correlations(gains, statistics, n_boot, rng, threads=1):
    """
    Relates per-network link prediction gains to network statistics.

    Parameters
    ----------
    gains : array_like
        (networks, L) fold-averaged gains (full minus bias).
    statistics : dict
        Statistic name to a (networks, L) array aligned with ``gains``.
    n_boot : int
    rng : numpy.random.Generator

    Returns
    -------
    dict
        ``result[layer][name]`` holds spearman, pearson and the across-network
        ``BootstrapResult`` of the Spearman correlation; ``layer`` is the
        layer index.
    """
    gains = np.atleast_2d(np.asarray(gains, dtype=float))
    if gains.shape[0] < 3:
        raise DomainError("Gain correlations need at least 3 networks, got %s" % gains.shape[0])
    streams = iteration_streams(rng, gains.shape[1] * len(statistics))
    results = {}
    for layer in range(gains.shape[1]):
        results[layer] = {}
        for k, name in enumerate(sorted(statistics)):
            values = np.asarray(statistics[name], dtype=float)
            if values.shape != gains.shape:
                raise ShapeError("Statistic %s has shape %s, the gains %s" % (name, values.shape, gains.shape))
            x, y = values[:, layer], gains[:, layer]
            datasets = [(x[i:i + 1], y[i:i + 1]) for i in range(len(x))]
            results[layer][name] = {
                    "spearman": _spearman(x, y),
                    "pearson": _pearson(x, y),
                    "bootstrap": bootstrap_mean_corr(datasets, n_boot, "across",
                                                     streams[layer * len(statistics) + k], threads=threads),
                    }
    return results


class AnalysisReport(object):
    """
    Results of the post-fit analyses of one network.

    Attributes
    ----------
    network : str
    sections : dict
        Section name to a JSON serializable payload.
    records : list of tuple
        ``(layer, statistic, value)`` rows of the long format table; layer
        numbers are 1-based, 0 for network-wide values.
    """

    def __init__(self, network=""):
        self.network = network
        self.sections = collections.OrderedDict()
        self.records = []

    def add_section(self, name, payload):
        self.sections[name] = payload

    def add_record(self, layer, statistic, value):
        self.records.append((int(layer), str(statistic), _finite_or_none(value)))

    def to_dict(self):
        return {"network": self.network, "sections": _clean(self.sections)}

    def to_frame(self):
        frame = pd.DataFrame(self.records, columns=["layer", "statistic", "value"])
        frame.insert(0, "network", self.network)
        return frame

    def __repr__(self):
        return "AnalysisReport(network=%r, sections=%s)" % (self.network, list(self.sections))


def _finite_or_none(value):
    if value is None:
        return None
    value = float(value)
    return value if np.isfinite(value) else None


def _clean(payload):
    """ Replaces NaN and infinities by None and converts numpy values and tuples """
    if isinstance(payload, dict):
        return {str(key): _clean(value) for key, value in payload.items()}
    if isinstance(payload, (list, tuple)):
        if hasattr(payload, "_asdict"):
            return _clean(payload._asdict())
        return [_clean(value) for value in payload]
    if isinstance(payload, np.ndarray):
        return [_clean(value) for value in payload.tolist()]
    if isinstance(payload, (bool, np.bool_)):
        return bool(payload)
    if isinstance(payload, (int, np.integer)):
        return int(payload)
    if isinstance(payload, (float, np.floating)):
        return _finite_or_none(payload)
    return payload
