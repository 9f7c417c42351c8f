"""
Link prediction by cross-validation.

The positive dyads (edges) of every layer are split into folds. For each
fold, every model variant is fitted with that fold's positives masked out of
the likelihood, and the held-out positives are scored against sets of
sampled non-edges of the same size. ROC-AUC and PR-AUC are averaged over the
negative sets of a fold and then over folds.

----
"""
import collections

import numpy as np
import pandas as pd
import xarray as xr
from scipy import special, stats
from sklearn import metrics

import pymlt.core.logging as logging
from pymlt.core.errors import DomainError, InsufficientNonEdgesError, NumericError
from pymlt.core.helpers import named_stream, parallel_map
from pymlt.core.model import MaskPlan, check_variant, log_odds_matrix
from pymlt.core.trainer import multi_restart_fit


logger = logging.getLogger(__name__)

METRICS = ("roc_auc", "pr_auc")

TTestResult = collections.namedtuple("TTestResult", ["t", "p_two_sided", "df", "degenerate"])


################################################################################
#
#           F O L D S   A N D   N E G A T I V E S
#
################################################################################
class FoldPlan(object):
    """
    Partition of every layer's positive dyads into folds.

    Attributes
    ----------
    n_folds : int
        Requested number of folds.
    seed : int
    folds : list of list of numpy.ndarray
        ``folds[l][f]`` is the (n, 2) array of positives held out in fold
        ``f`` of layer ``l``. A layer with fewer positives than folds has
        fewer entries; a layer without positives has none.
    """

    def __init__(self, n_folds, seed, folds):
        self.n_folds = n_folds
        self.seed = seed
        self.folds = folds

    @property
    def n_layers(self):
        return len(self.folds)

    @property
    def n_rounds(self):
        """ Number of fits per variant: the most folds of any layer """
        return max([len(layer_folds) for layer_folds in self.folds] + [0])

    def layer_fold_count(self, layer):
        return len(self.folds[layer])

    @property
    def excluded_layers(self):
        return [layer for layer, layer_folds in enumerate(self.folds) if not layer_folds]

    def test_positives(self, layer, fold):
        """ Held-out positives of ``layer`` in ``fold``, None if the layer has no such fold """
        if fold >= len(self.folds[layer]):
            return None
        return self.folds[layer][fold]

    def mask(self, fold):
        """ ``MaskPlan`` hiding the positives of ``fold`` in every layer """
        hidden = []
        for layer in range(self.n_layers):
            positives = self.test_positives(layer, fold)
            hidden.append([] if positives is None else [tuple(pair) for pair in positives.tolist()])
        return MaskPlan(hidden)

    def __repr__(self):
        return "FoldPlan(n_folds=%s, seed=%s, per_layer=%s)" % \
                (self.n_folds, self.seed, [len(layer_folds) for layer_folds in self.folds])


def make_folds(graph, n_folds, seed):
    """
    Uniform random partition of each layer's positive dyads into folds whose
    sizes differ by at most one; the larger folds come first.

    A layer with fewer positives than ``n_folds`` gets one fold per
    positive, a layer without positives is left out of the evaluation. Both
    are logged as warnings.

    Returns
    -------
    FoldPlan
    """
    if n_folds < 1:
        raise DomainError("n_folds must be positive, got %s" % n_folds)
    rng = named_stream(seed, "folds")
    folds = []
    for layer in range(graph.n_layers):
        positives = graph.sorted_edges(layer)
        if len(positives) == 0:
            logger.warning("Layer %s has no positive dyads and is excluded from evaluation", layer + 1)
            folds.append([])
            continue
        layer_folds = n_folds
        if len(positives) < n_folds:
            logger.warning("Layer %s has %s positives, reducing its folds from %s to %s",
                           layer + 1, len(positives), n_folds, len(positives))
            layer_folds = len(positives)
        order = rng.permutation(len(positives))
        folds.append([positives[index] for index in np.array_split(order, layer_folds)])
    return FoldPlan(n_folds, seed, folds)


def negative_sets(graph, layer, test_positives, n_sets, rng):
    """
    Sets of non-edges of ``layer``, each as large as ``test_positives``.

    Each set is drawn uniformly without replacement from the off-diagonal
    dyads that are not edges of the observed layer; sets are independent of
    each other.

    Returns
    -------
    list of numpy.ndarray
        ``n_sets`` arrays of shape (n, 2).

    Raises
    ------
    InsufficientNonEdgesError
        If the layer has fewer non-edges than test positives.
    """
    n_wanted = len(test_positives)
    adjacency = graph.layer_adjacency(layer).astype(bool)
    eligible = ~adjacency
    np.fill_diagonal(eligible, False)
    candidates = np.flatnonzero(eligible)
    if len(candidates) < n_wanted:
        raise InsufficientNonEdgesError("Layer %s has %s non-edges, %s are needed per negative set" %
                                        (layer + 1, len(candidates), n_wanted))
    sets = []
    for _ in range(n_sets):
        chosen = rng.choice(candidates, size=n_wanted, replace=False)
        sets.append(np.column_stack(np.divmod(chosen, graph.n_nodes)).astype(np.intp))
    return sets


################################################################################
#
#           M E T R I C S
#
################################################################################
def _check_scores(pos_scores, neg_scores):
    pos_scores = np.asarray(pos_scores, dtype=float).ravel()
    neg_scores = np.asarray(neg_scores, dtype=float).ravel()
    if pos_scores.size == 0 or neg_scores.size == 0:
        raise DomainError("Need at least one positive and one negative score")
    return pos_scores, neg_scores


def roc_auc(pos_scores, neg_scores):
    """
    Probability that a random positive outscores a random negative, ties
    counting one half.

    Computed as the Mann-Whitney ``U`` of the positives divided by
    ``n_pos * n_neg``.

    Example
    -------
    >>> roc_auc([0.8, 0.4], [0.6, 0.2])
    0.75
    """
    pos_scores, neg_scores = _check_scores(pos_scores, neg_scores)
    ranks = stats.rankdata(np.concatenate([pos_scores, neg_scores]))
    n_pos, n_neg = len(pos_scores), len(neg_scores)
    u_statistic = ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))


def pr_auc(pos_scores, neg_scores):
    """
    Average precision: the precision at every distinct score threshold,
    weighted by the gain in recall. Equal scores form a single threshold.

    Example
    -------
    >>> round(pr_auc([0.9, 0.3], [0.5]), 4)
    0.8333
    """
    pos_scores, neg_scores = _check_scores(pos_scores, neg_scores)
    labels = np.concatenate([np.ones(len(pos_scores)), np.zeros(len(neg_scores))])
    return float(metrics.average_precision_score(labels, np.concatenate([pos_scores, neg_scores])))


def paired_t_test(diffs):
    """
    Student t-test of paired differences against zero.

    Returns
    -------
    TTestResult
        ``(t, p_two_sided, df, degenerate)``. Differences without variance
        are flagged degenerate: ``t = 0, p = 1`` if they are all zero,
        otherwise ``t = +-inf, p = 0``.

    Raises
    ------
    DomainError
        For fewer than two differences.

    Example
    -------
    >>> result = paired_t_test([2, 1, 3])
    >>> round(result.t, 3), result.df
    (3.464, 2)
    """
    diffs = np.asarray(diffs, dtype=float).ravel()
    if diffs.size < 2:
        raise DomainError("The paired t-test needs at least 2 differences, got %s" % diffs.size)
    df = diffs.size - 1
    if np.all(diffs == diffs[0]):
        mean = float(diffs[0])
        if mean == 0:
            return TTestResult(0.0, 1.0, df, True)
        logger.warning("Paired differences have no variance (all %s), the t statistic is infinite", mean)
        return TTestResult(float(np.copysign(np.inf, mean)), 0.0, df, True)
    result = stats.ttest_1samp(diffs, 0.0)
    return TTestResult(float(result.statistic), float(result.pvalue), df, False)


################################################################################
#
#           C R O S S - V A L I D A T I O N
#
################################################################################
class MetricReport(object):
    """
    Cross-validated link prediction metrics.

    Attributes
    ----------
    values : xarray.DataArray
        Dimensions ``(variant, layer, fold, metric)``; ``layer`` holds the
        1-based layer numbers. Entries are averages over the negative sets
        and NaN where a layer has no such fold or the fit failed.
    failed_folds : dict
        Variant name to the folds whose fit diverged.
    scores : dict
        ``(variant, layer index)`` to the pooled positive scores and the
        scores of the first negative set of every fold.
    n_neg_sets : int
    network : str
    """

    def __init__(self, values, failed_folds, scores, n_neg_sets, network=""):
        self.values = values
        self.failed_folds = failed_folds
        self.scores = scores
        self.n_neg_sets = n_neg_sets
        self.network = network

    @property
    def variants(self):
        return [str(variant) for variant in self.values.coords["variant"].values]

    @property
    def n_layers(self):
        return self.values.sizes["layer"]

    def means(self):
        """ Fold averages, dimensions ``(variant, layer, metric)`` """
        return self.values.mean(dim="fold", skipna=True)

    def differences(self, variant="full", baseline="bias"):
        """ Per-fold differences ``variant - baseline``, dimensions ``(layer, fold, metric)`` """
        return self.values.sel(variant=variant) - self.values.sel(variant=baseline)

    def t_tests(self, variant="full", baseline="bias"):
        """
        Paired t-test of the per-fold differences for every layer and metric.
        Entries are None where fewer than two folds are complete.
        """
        results = {}
        if not {variant, baseline} <= set(self.variants):
            return results
        diffs = self.differences(variant, baseline)
        for index in range(self.n_layers):
            for metric in METRICS:
                values = diffs.isel(layer=index).sel(metric=metric).values
                values = values[np.isfinite(values)]
                results[(index, metric)] = paired_t_test(values) if values.size >= 2 else None
        return results

    def to_dict(self):
        means = self.means()
        has_pair = {"full", "bias"} <= set(self.variants)
        tests = self.t_tests()
        layers = []
        for index in range(self.n_layers):
            entry = {"layer": index + 1, "variants": {}}
            for variant in self.variants:
                summary = {}
                for metric in METRICS:
                    summary["%s_mean" % metric] = _json_number(means.sel(variant=variant, metric=metric)
                                                               .isel(layer=index).item())
                    summary["%s_folds" % metric] = [_json_number(value) for value in
                                                    self.values.sel(variant=variant, metric=metric)
                                                    .isel(layer=index).values]
                entry["variants"][variant] = summary
            if has_pair:
                diffs = self.differences().isel(layer=index)
                entry["differences"] = {}
                for metric in METRICS:
                    folds = diffs.sel(metric=metric).values
                    test = tests[(index, metric)]
                    entry["differences"][metric] = {
                            "folds": [_json_number(value) for value in folds],
                            "mean": _json_number(np.nanmean(folds)) if np.isfinite(folds).any() else None,
                            "t_test": None if test is None else {"t": _json_number(test.t),
                                                                 "p_two_sided": _json_number(test.p_two_sided),
                                                                 "df": test.df,
                                                                 "degenerate": test.degenerate},
                            }
            layers.append(entry)
        return {"network": self.network,
                "n_folds": self.values.sizes["fold"],
                "n_neg_sets": self.n_neg_sets,
                "variants": self.variants,
                "failed_folds": {variant: list(folds) for variant, folds in self.failed_folds.items()},
                "layers": layers}

    def to_frame(self):
        """ Long format: network, layer, variant, fold, metric, value """
        frame = self.values.to_dataframe(name="value").reset_index()
        frame = frame.dropna(subset=["value"])
        frame.insert(0, "network", self.network)
        frame["fold"] = frame["fold"] + 1
        return frame[["network", "layer", "variant", "fold", "metric", "value"]].reset_index(drop=True)

    def curves_frame(self):
        """ Long format ROC and PR points: network, layer, variant, curve, point, x, y """
        rows = []
        for variant in self.variants:
            for index in range(self.n_layers):
                if not self.scores.get((variant, index), ([], []))[0]:
                    continue
                for kind in ("roc", "pr"):
                    x, y = curve_points(self, index, variant, kind)
                    rows.append(pd.DataFrame({"network": self.network, "layer": index + 1,
                                              "variant": variant, "curve": kind,
                                              "point": np.arange(len(x)), "x": x, "y": y}))
        columns = ["network", "layer", "variant", "curve", "point", "x", "y"]
        if not rows:
            return pd.DataFrame(columns=columns)
        return pd.concat(rows, ignore_index=True)[columns]

    def __repr__(self):
        return "MetricReport(network=%r, variants=%s, n_layers=%s)" % \
                (self.network, self.variants, self.n_layers)


def _json_number(value):
    value = float(value)
    return value if np.isfinite(value) else None


def curve_points(report, layer, variant, kind):
    """
    Plotting points from the pooled held-out positives and the first
    negative set of every fold.

    Returns
    -------
    (numpy.ndarray, numpy.ndarray)
        ``(fpr, tpr)`` for ``kind="roc"``, ``(recall, precision)`` for
        ``kind="pr"``.
    """
    if kind not in ("roc", "pr"):
        raise DomainError("kind must be 'roc' or 'pr', got %r" % (kind,))
    pos_scores, neg_scores = report.scores.get((variant, layer), ([], []))
    pos_scores, neg_scores = _check_scores(pos_scores, neg_scores)
    labels = np.concatenate([np.ones(len(pos_scores)), np.zeros(len(neg_scores))])
    scores = np.concatenate([pos_scores, neg_scores])
    if kind == "roc":
        fpr, tpr, _ = metrics.roc_curve(labels, scores)
        return fpr, tpr
    precision, recall, _ = metrics.precision_recall_curve(labels, scores)
    return recall, precision


def _evaluate_fold(graph, variants, train_config, fold_plan, n_neg_sets, fold):
    mask = fold_plan.mask(fold)
    negatives = {}
    for layer in range(graph.n_layers):
        positives = fold_plan.test_positives(layer, fold)
        if positives is not None:
            rng = named_stream(fold_plan.seed, "negatives", layer, fold)
            negatives[layer] = negative_sets(graph, layer, positives, n_neg_sets, rng)
    outcome = {}
    for variant in variants:
        try:
            result = multi_restart_fit(graph, variant, train_config, mask)
        except NumericError as error:
            logger.warning("Fold %s: the %s fit failed and is left out: %s", fold + 1, variant, error)
            outcome[variant] = None
            continue
        probabilities = special.expit(log_odds_matrix(result.params))
        layers = {}
        for layer, sets in negatives.items():
            positives = fold_plan.test_positives(layer, fold)
            pos_scores = probabilities[layer, positives[:, 0], positives[:, 1]]
            values = []
            for negative in sets:
                neg_scores = probabilities[layer, negative[:, 0], negative[:, 1]]
                values.append((roc_auc(pos_scores, neg_scores), pr_auc(pos_scores, neg_scores)))
            first = probabilities[layer, sets[0][:, 0], sets[0][:, 1]] if sets else np.array([])
            layers[layer] = (np.mean(values, axis=0) if values else np.full(2, np.nan), pos_scores, first)
        outcome[variant] = layers
        logger.info("Fold %s, %s: %s", fold + 1, variant,
                    ", ".join("layer %s pr_auc %.4f" % (layer + 1, entry[0][1])
                              for layer, entry in sorted(layers.items())))
    return outcome


def evaluate_cv(graph, variants, train_config, fold_plan, n_neg_sets, threads=1, network=""):
    """
    Cross-validated link prediction of several model variants.

    Parameters
    ----------
    graph : MultiplexGraph
    variants : sequence of str
    train_config : TrainConfig
        Used for every fit, including ``restarts``.
    fold_plan : FoldPlan
        Its seed also seeds the negative sets.
    n_neg_sets : int
        Negative sets per fold and layer.
    threads : int, optional
        Folds evaluated in parallel; results do not depend on it.
    network : str, optional
        Name recorded in the report.

    Returns
    -------
    MetricReport
    """
    variants = [check_variant(variant) for variant in variants]
    n_rounds = fold_plan.n_rounds

    def run(fold):
        return _evaluate_fold(graph, variants, train_config, fold_plan, n_neg_sets, fold)

    outcomes = parallel_map(run, range(n_rounds), threads)

    values = np.full((len(variants), graph.n_layers, n_rounds, len(METRICS)), np.nan)
    failed_folds = {variant: [] for variant in variants}
    scores = {}
    for fold, outcome in enumerate(outcomes):
        for v_index, variant in enumerate(variants):
            layers = outcome[variant]
            if layers is None:
                failed_folds[variant].append(fold + 1)
                continue
            for layer, (means, pos_scores, first) in layers.items():
                values[v_index, layer, fold] = means
                pooled = scores.setdefault((variant, layer), ([], []))
                pooled[0].extend(pos_scores.tolist())
                pooled[1].extend(first.tolist())
    cube = xr.DataArray(values, dims=("variant", "layer", "fold", "metric"),
                        coords={"variant": list(variants),
                                "layer": np.arange(1, graph.n_layers + 1),
                                "fold": np.arange(n_rounds),
                                "metric": list(METRICS)},
                        name="auc")
    return MetricReport(cube, failed_folds, scores, n_neg_sets, network)
