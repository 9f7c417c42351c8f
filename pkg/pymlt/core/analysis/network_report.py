"""
Analysis batteries behind ``pymlt analyze`` and ``pymlt summarize``.

``analyze_network`` studies one network with its fitted parameters;
``summarize_networks`` compares many networks through their evaluation and
analysis reports.
"""
import numpy as np

import pymlt.core.logging as logging
from pymlt.core.analysis import (AnalysisReport, SoftAssignment, bootstrap_mean_corr,
                                 compare_layer_distributions, gain_statistic_correlations,
                                 layer_order_test, nmi_permutation_null, permute_rows_test,
                                 role_layer_means)
from pymlt.core.analysis.centrality import centrality_correlations, paired_centralities
from pymlt.core.analysis.hierarchy import hierarchy_density_profile
from pymlt.core.errors import DomainError, ShapeError
from pymlt.core.evaluator import paired_t_test
from pymlt.core.graph import degree_profile, layer_stats
from pymlt.core.helpers import named_stream


logger = logging.getLogger(__name__)

NETWORK_STATISTICS = ("reciprocity", "transitivity", "clustering", "avg_degree")
ROLE_STATISTICS = ("z_mean", "w_mean")
GAIN_METRICS = ("pr_auc", "roc_auc")


def resolve_order(means, claimed_order=None):
    """
    Layer indices in claimed order: ``claimed_order`` (1-based layer
    numbers) if given, else the observed ranking of ``means``, largest first.

    The observed ranking is taken from the data it is then tested on, so the
    p-value is optimistic; a warning says so.
    """
    means = np.asarray(means, dtype=float)
    if claimed_order is not None:
        if sorted(claimed_order) != list(range(1, means.shape[-1] + 1)):
            raise DomainError("claimed_order %s does not fit %s layers" % (claimed_order, means.shape[-1]))
        return [int(layer) - 1 for layer in claimed_order]
    order = [int(layer) for layer in np.argsort(-means, kind="stable")]
    logger.warning("No claimed layer order; testing the observed ranking %s, the p-value is optimistic",
                   [layer + 1 for layer in order])
    return order


def _role_params(params_by_variant):
    for variant in ("full", "tradeoff"):
        if variant in params_by_variant:
            return params_by_variant[variant]
    return None


def _test_payload(result):
    return {"observed": result.observed_stat, "p_value": result.p_value,
            "alternative": result.alternative, "null": result.null_samples}


def _bootstrap_payload(result):
    return {"observed": result.observed, "ci_low": result.ci_low, "ci_high": result.ci_high,
            "n_degenerate": result.n_degenerate, "samples": result.samples}


################################################################################
#
#           O N E   N E T W O R K
#
################################################################################
def analyze_network(graph, params_by_variant, config, seed, threads=1, network=""):
    """
    Every single-network analysis.

    Parameters
    ----------
    graph : MultiplexGraph
        The network the parameters were fitted to.
    params_by_variant : dict
        Variant name to ``MltParams``.
    config : AnalysisConfig
    seed : int
        Top-level seed; the resampling loops use the ``permutation`` and
        ``bootstrap`` streams of it.

    Returns
    -------
    AnalysisReport
        The ``node_vectors`` section keeps the biases and the centralities
        they are compared with, for the pooled bootstrap of
        ``summarize_networks``.
    """
    for variant, params in params_by_variant.items():
        if (params.n_nodes, params.n_layers) != (graph.n_nodes, graph.n_layers):
            raise ShapeError("The %s parameters (N=%s, L=%s) do not fit the network (N=%s, L=%s)" %
                             (variant, params.n_nodes, params.n_layers, graph.n_nodes, graph.n_layers))
    report = AnalysisReport(network)

    stats_section = {}
    for layer in range(graph.n_layers):
        values = layer_stats(graph, layer)._asdict()
        stats_section[layer + 1] = values
        for name in NETWORK_STATISTICS:
            report.add_record(layer + 1, name, values[name])
    report.add_section("layer_stats", stats_section)

    profiles = {direction: degree_profile(graph, direction) for direction in ("out", "in")}
    report.add_section("degree_profiles", {
            direction: {"n_active": int(profile.active.sum()),
                        "mean_profile": profile.normalized[profile.active].mean(axis=0)
                        if profile.active.any() else np.zeros(graph.n_layers)}
            for direction, profile in profiles.items()})

    role_params = _role_params(params_by_variant)
    if role_params is not None:
        _analyze_roles(report, role_params, profiles, config, seed, threads)
    if "full" in params_by_variant:
        full = params_by_variant["full"]
        report.add_section("hierarchy", {
                layer + 1: hierarchy_density_profile(graph, full, layer, config.n_perm,
                                                     named_stream(seed, "permutation", "hierarchy", layer))
                for layer in range(graph.n_layers)})

    centralities = {layer: paired_centralities(graph, layer) for layer in range(graph.n_layers)}
    correlations = {}
    biases = {}
    for variant in sorted(params_by_variant):
        params = params_by_variant[variant]
        by_layer = centrality_correlations(graph, params, centralities=centralities)
        bootstraps = {}
        for layer in range(graph.n_layers):
            for kind, entry in by_layer[layer].items():
                for bias, values in entry.items():
                    for method, value in values.items():
                        report.add_record(layer + 1, "%s_%s_%s_%s" % (variant, bias, kind, method), value)
            rng = named_stream(seed, "bootstrap", variant, layer)
            out_degree = centralities[layer]["beta"]["degree"]
            bootstraps[layer + 1] = bootstrap_mean_corr([(params.beta[:, layer], out_degree)],
                                                        config.n_boot, "within", rng, threads=threads)
        correlations[variant] = {"by_layer": {layer + 1: by_layer[layer] for layer in by_layer},
                                 "beta_out_degree_bootstrap": bootstraps}
        biases[variant] = {layer + 1: {"beta": params.beta[:, layer], "gamma": params.gamma[:, layer]}
                           for layer in range(graph.n_layers)}
    report.add_section("centrality_correlations", correlations)
    report.add_section("node_vectors", {"biases": biases,
                                        "centralities": {layer + 1: paired
                                                         for layer, paired in centralities.items()}})
    return report


def _analyze_roles(report, params, profiles, config, seed, threads):
    z_means, w_means = role_layer_means(params)
    roles = {"variant": params.variant, "z_mean": z_means, "w_mean": w_means,
             "z_by_layer": params.Z.T, "w_by_layer": params.W.T}
    report.add_section("roles", roles)
    for layer in range(params.n_layers):
        report.add_record(layer + 1, "z_mean", z_means[layer])
        report.add_record(layer + 1, "w_mean", w_means[layer])

    nmi = {}
    for name, simplices, direction in (("z_out_profile", params.Z, "out"), ("w_in_profile", params.W, "in")):
        profile = profiles[direction]
        if profile.active.sum() < 2:
            logger.warning("Fewer than 2 nodes with %s-edges, NMI %s skipped", direction, name)
            continue
        result = nmi_permutation_null(SoftAssignment(simplices[profile.active]),
                                      SoftAssignment.from_profile(profile), config.n_perm,
                                      named_stream(seed, "permutation", "nmi", name), threads)
        nmi[name] = _test_payload(result)
        report.add_record(0, "nmi_%s" % name, result.observed_stat)
        report.add_record(0, "nmi_%s_p" % name, result.p_value)
    report.add_section("nmi", nmi)

    row_tests = {}
    for name, simplices in (("z", params.Z), ("w", params.W)):
        row_tests[name] = {}
        for layer in range(params.n_layers):
            result = permute_rows_test(SoftAssignment(simplices), layer, config.n_perm,
                                       named_stream(seed, "permutation", "rows", name, layer), threads)
            row_tests[name][layer + 1] = _test_payload(result)
            report.add_record(layer + 1, "%s_row_permutation_p" % name, result.p_value)
    report.add_section("row_permutation", row_tests)

    order_tests = {}
    if config.claimed_order is None:
        # the observed ranking of one network always holds
        logger.warning("No claimed layer order, the single network layer order test is skipped")
    else:
        for name, means in (("z", z_means), ("w", w_means)):
            order = resolve_order(means, config.claimed_order)
            result = layer_order_test(means[None, :], order, config.n_perm,
                                      named_stream(seed, "permutation", "order", name), threads)
            order_tests[name] = dict(_test_payload(result), claimed_order=[layer + 1 for layer in order])
            report.add_record(0, "%s_layer_order_p" % name, result.p_value)
    report.add_section("layer_order", order_tests)


################################################################################
#
#           M A N Y   N E T W O R K S
#
################################################################################
def _gains(eval_reports, n_layers):
    """ Per metric a (networks, L) matrix of fold-averaged full minus bias values """
    gains = {metric: np.full((len(eval_reports), n_layers), np.nan) for metric in GAIN_METRICS}
    for k, entry in enumerate(eval_reports):
        for layer_entry in entry["layers"]:
            variants = layer_entry["variants"]
            if "full" not in variants or "bias" not in variants:
                raise DomainError("Evaluation report of %r lacks the full or bias variant" % entry.get("network"))
            for metric in gains:
                full = variants["full"]["%s_mean" % metric]
                bias = variants["bias"]["%s_mean" % metric]
                if full is not None and bias is not None:
                    gains[metric][k, layer_entry["layer"] - 1] = full - bias
    return gains


def _role_statistics(analysis_reports, n_layers):
    """ The per-network Z and W layer means, or nothing if a network has none """
    roles = [entry["sections"].get("roles") for entry in analysis_reports]
    if not roles or any(role is None for role in roles):
        return {}
    statistics = {name: np.array([role[name] for role in roles], dtype=float) for name in ROLE_STATISTICS}
    for name, values in statistics.items():
        if values.shape != (len(roles), n_layers):
            raise ShapeError("Role means %s have shape %s, expected %s" %
                             (name, values.shape, (len(roles), n_layers)))
    return statistics


def _centrality_bootstraps(report, analysis_reports, config, seed, threads):
    """
    Node-resampling bootstrap of the bias-centrality correlations, averaged
    over networks, per variant, layer, bias and centrality.
    """
    vectors = [entry["sections"].get("node_vectors") for entry in analysis_reports]
    if any(entry is None for entry in vectors):
        logger.warning("An analysis report has no node vectors, the pooled centrality bootstrap is skipped")
        return {}
    variants = set(vectors[0]["biases"])
    for entry in vectors[1:]:
        variants &= set(entry["biases"])
    payload = {}
    for variant in sorted(variants):
        payload[variant] = {}
        for layer_key in sorted(vectors[0]["centralities"], key=int):
            layer = int(layer_key)
            payload[variant][layer] = {}
            for bias, by_kind in sorted(vectors[0]["centralities"][layer_key].items()):
                payload[variant][layer][bias] = {}
                for kind in sorted(by_kind):
                    datasets = [(entry["biases"][variant][layer_key][bias],
                                 entry["centralities"][layer_key][bias][kind]) for entry in vectors]
                    rng = named_stream(seed, "bootstrap", "centrality", variant, bias, kind, layer)
                    result = bootstrap_mean_corr(datasets, config.n_boot, "within", rng, threads=threads)
                    payload[variant][layer][bias][kind] = _bootstrap_payload(result)
                    report.add_record(layer, "%s_%s_%s_bootstrap_mean" % (variant, bias, kind), result.observed)
    return payload


def _gain_correlations(report, gains, statistics, config, seed, threads):
    """ Gain-statistic correlations per metric, and the layer comparisons of their bootstraps """
    correlations, comparisons = {}, {}
    for metric in GAIN_METRICS:
        finite = np.all(np.isfinite(gains[metric]), axis=1)
        if finite.sum() < 3:
            logger.warning("Fewer than 3 networks with %s gains on every layer, no gain correlations", metric)
            continue
        by_layer = gain_statistic_correlations(gains[metric][finite],
                                               {name: values[finite] for name, values in statistics.items()},
                                               config.n_boot, named_stream(seed, "bootstrap", "gains", metric),
                                               threads)
        correlations[metric] = {}
        for layer, by_statistic in by_layer.items():
            correlations[metric][layer + 1] = {}
            for name, entry in by_statistic.items():
                bootstrap = entry["bootstrap"]
                correlations[metric][layer + 1][name] = {
                        "spearman": entry["spearman"], "pearson": entry["pearson"],
                        "ci_low": bootstrap.ci_low, "ci_high": bootstrap.ci_high,
                        "bootstrap_samples": bootstrap.samples}
                report.add_record(layer + 1, "%s_gain_%s_spearman" % (metric, name), entry["spearman"])
        comparisons[metric] = {}
        for name in sorted(statistics):
            samples = {layer + 1: by_layer[layer][name]["bootstrap"].samples for layer in by_layer}
            comparisons[metric][name] = compare_layer_distributions(samples)
            for entry in comparisons[metric][name]:
                statistic = "%s_gain_%s_above_layer_%s_p" % (metric, name, entry["lesser"])
                report.add_record(entry["greater"], statistic, entry["p_value"])
    return correlations, comparisons


def summarize_networks(eval_reports, analysis_reports, graphs, config, seed, threads=1):
    """
    Cross-network summary.

    Parameters
    ----------
    eval_reports : list of dict
        ``MetricReport.to_dict()`` of every network, with variants bias and
        full.
    analysis_reports : list of dict
        ``AnalysisReport.to_dict()`` of every network, aligned with
        ``eval_reports``; may be empty.
    graphs : list of MultiplexGraph
        The networks, aligned with ``eval_reports``.
    config : AnalysisConfig
    seed : int

    Returns
    -------
    AnalysisReport
        Network name ``"all"``. Sections:

        + ``gain_t_tests``: paired t-tests of the PR and ROC gains per layer
        + ``layer_order``: layer order tests of the Z and W layer means
        + ``centrality_bootstrap``: pooled node-resampling bootstrap of the
          bias-centrality correlations
        + ``gain_statistic_correlations``: PR and ROC gains against network
          statistics and the Z and W layer means
        + ``layer_bootstrap_comparisons``: one-sided Mann-Whitney tests
          between the layers' bootstrap distributions of those correlations
    """
    if len(graphs) != len(eval_reports) or (analysis_reports and len(analysis_reports) != len(graphs)):
        raise ShapeError("Got %s evaluation reports, %s analysis reports and %s networks" %
                         (len(eval_reports), len(analysis_reports), len(graphs)))
    n_layers = {graph.n_layers for graph in graphs}
    if len(n_layers) != 1:
        raise ShapeError("Networks have different layer counts: %s" % sorted(n_layers))
    n_layers = n_layers.pop()
    report = AnalysisReport("all")
    report.add_section("networks", [entry.get("network", "") for entry in eval_reports])

    gains = _gains(eval_reports, n_layers)
    t_tests = {}
    for metric, values in gains.items():
        t_tests[metric] = {}
        for layer in range(n_layers):
            column = values[:, layer][np.isfinite(values[:, layer])]
            if column.size < 2:
                logger.warning("Layer %s: fewer than 2 networks with %s gains, no t-test", layer + 1, metric)
                continue
            result = paired_t_test(column)
            t_tests[metric][layer + 1] = dict(result._asdict(), mean_gain=float(column.mean()))
            report.add_record(layer + 1, "%s_gain_mean" % metric, column.mean())
            report.add_record(layer + 1, "%s_gain_t_p" % metric, result.p_two_sided)
    report.add_section("gain_t_tests", t_tests)

    role_statistics = {}
    if analysis_reports:
        role_statistics = _role_statistics(analysis_reports, n_layers)
        order_tests = {}
        if not role_statistics or len(analysis_reports) < 2:
            logger.warning("Fewer than 2 networks with role means, no layer order test")
        else:
            for name in ("z", "w"):
                means = role_statistics["%s_mean" % name]
                order = resolve_order(means.mean(axis=0), config.claimed_order)
                result = layer_order_test(means, order, config.n_perm,
                                          named_stream(seed, "permutation", "order", name), threads)
                order_tests[name] = dict(_test_payload(result), claimed_order=[layer + 1 for layer in order])
                report.add_record(0, "%s_layer_order_fraction" % name, result.observed_stat)
                report.add_record(0, "%s_layer_order_p" % name, result.p_value)
        report.add_section("layer_order", order_tests)
        report.add_section("centrality_bootstrap",
                           _centrality_bootstraps(report, analysis_reports, config, seed, threads))

    if len(graphs) >= 3:
        statistics = {name: np.array([[getattr(layer_stats(graph, layer), name) for layer in range(n_layers)]
                                      for graph in graphs])
                      for name in NETWORK_STATISTICS}
        statistics.update(role_statistics)
        correlations, comparisons = _gain_correlations(report, gains, statistics, config, seed, threads)
        report.add_section("gain_statistic_correlations", correlations)
        report.add_section("layer_bootstrap_comparisons", comparisons)
    else:
        logger.warning("Gain correlations need at least 3 networks, got %s", len(graphs))
    return report
