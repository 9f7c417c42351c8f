"""
The ``pymlt`` command line tool.

Sub-commands::

    pymlt fit       --edges net.tsv [--variant full] --out results/
    pymlt sample    (--spec spec.yaml | --params params.json) --out synthetic/
    pymlt eval      --edges net.tsv [--preset desk] --out cv/
    pymlt analyze   --edges net.tsv --params full/params.json [--params bias/params.json] --out analysis/
    pymlt summarize --eval a/metrics.json b/metrics.json ... --edges a.tsv b.tsv ... --out summary/

All outputs of a command are staged and only appear in ``--out`` once the
command succeeded; every run writes a ``manifest.json``.

Exit codes: 0 success, 2 usage, 3 invalid input, 4 numerical failure,
5 file system error.
"""
import argparse
import os
import sys

import pymlt
import pymlt.core.logging as logging
from pymlt.core.analysis.network_report import analyze_network, summarize_networks
from pymlt.core.config import PRESETS, load_config
from pymlt.core.errors import MltError, NumericError, ShapeError
from pymlt.core.evaluator import evaluate_cv, make_folds
from pymlt.core.graph import load_edge_list, restrict_to_scc, save_edge_list
from pymlt.core.helpers import named_stream, read_json, staging_area, write_json
from pymlt.core.model import VARIANTS, MltParams, sample_network
from pymlt.core.parser.manifest import RunManifest
from pymlt.core.synth import SynthSpec, make_params
from pymlt.core.trainer import multi_restart_fit, write_loss_trace


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_NUMERIC = 4
EXIT_IO = 5

CSV_FLOAT_FORMAT = "%.10g"


def network_name(path):
    return os.path.splitext(os.path.basename(path))[0]


def prepare_graph(path):
    """ Loads an edge list and keeps its largest strongly connected component """
    graph = load_edge_list(path)
    restricted = restrict_to_scc(graph)
    logger.info("%s: %s nodes, %s in the strongly connected component",
                path, graph.n_nodes, restricted.n_nodes)
    return restricted


def _config(args):
    overrides = {"train": {"seed": getattr(args, "seed", None),
                           "restarts": getattr(args, "restarts", None)},
                 "evaluation": {"n_folds": getattr(args, "folds", None),
                                "n_neg_sets": getattr(args, "neg_sets", None)},
                 "threads": getattr(args, "threads", None)}
    return load_config(args.config, args.preset, overrides)


def _align(params, graph, path):
    """ Checks that parameters belong to the graph's nodes, in the graph's order """
    if params.node_labels is not None and params.node_labels != graph.node_labels:
        raise ShapeError("Parameters in %s were fitted to different nodes than the network" % path)
    if (params.n_nodes, params.n_layers) != (graph.n_nodes, graph.n_layers):
        raise ShapeError("Parameters in %s have N=%s, L=%s, the network N=%s, L=%s" %
                         (path, params.n_nodes, params.n_layers, graph.n_nodes, graph.n_layers))
    return params


################################################################################
#
#           C O M M A N D S
#
################################################################################
def cmd_fit(args):
    """ Fits one variant with restarts; writes params.json, loss_trace.csv, manifest.json """
    config = _config(args)
    graph = prepare_graph(args.edges)
    result = multi_restart_fit(graph, args.variant, config.train, threads=config.threads)
    manifest = RunManifest("fit", config.hash(),
                           {"seed": config.train.seed,
                            "restart_seeds": [config.train.seed + k for k in range(config.train.restarts)],
                            "best_restart": result.restart_index},
                           [path for path in (args.edges, args.config) if path])
    with staging_area(args.out) as area:
        result.params.save(area.path("params.json"))
        write_loss_trace(result, area.path("loss_trace.csv"), config.train.warm_steps)
        manifest.write(area)
    return result


def cmd_sample(args):
    """ Draws a network from a synthetic spec or from fitted parameters """
    config = _config(args)
    inputs = [args.spec or args.params]
    if args.spec:
        spec = SynthSpec.load(args.spec)
        params = make_params(spec)
        seed = spec.seed if args.seed is None else args.seed
    else:
        params = MltParams.load(args.params)
        seed = config.train.seed
    graph = sample_network(params, named_stream(seed, "sample", "network"))
    logger.info("Sampled %s", graph)
    manifest = RunManifest("sample", config.hash(), {"seed": seed}, inputs)
    with staging_area(args.out) as area:
        edge_path = area.path("edges.tsv")
        area.path("edges.tsv.json")
        save_edge_list(graph, edge_path)
        if args.spec:
            params.save(area.path("params.json"))
        manifest.write(area)
    return graph


def cmd_eval(args):
    """ Cross-validates the bias and full variants; writes metrics.json, metrics.csv, curves.csv """
    config = _config(args)
    graph = prepare_graph(args.edges)
    seed = config.train.seed
    plan = make_folds(graph, config.evaluation.n_folds, seed)
    report = evaluate_cv(graph, ["bias", "full"], config.train, plan, config.evaluation.n_neg_sets,
                         threads=config.threads, network=network_name(args.edges))
    manifest = RunManifest("eval", config.hash(), {"seed": seed, "folds": seed, "negatives": seed},
                           [path for path in (args.edges, args.config) if path])
    with staging_area(args.out) as area:
        write_json(area.path("metrics.json"), report.to_dict())
        report.to_frame().to_csv(area.path("metrics.csv"), index=False, float_format=CSV_FLOAT_FORMAT)
        report.curves_frame().to_csv(area.path("curves.csv"), index=False, float_format=CSV_FLOAT_FORMAT)
        manifest.write(area)
    return report


def cmd_analyze(args):
    """ Runs the single-network analyses; writes analysis.json and analysis.csv """
    config = _config(args)
    graph = prepare_graph(args.edges)
    params_by_variant = {}
    for path in args.params:
        params = _align(MltParams.load(path), graph, path)
        params_by_variant[params.variant] = params
    seed = config.train.seed
    report = analyze_network(graph, params_by_variant, config.analysis, seed,
                             threads=config.threads, network=network_name(args.edges))
    manifest = RunManifest("analyze", config.hash(), {"seed": seed},
                           [path for path in [args.edges, args.config] + list(args.params) if path])
    with staging_area(args.out) as area:
        write_json(area.path("analysis.json"), report.to_dict())
        report.to_frame().to_csv(area.path("analysis.csv"), index=False, float_format=CSV_FLOAT_FORMAT)
        manifest.write(area)
    return report


def cmd_summarize(args):
    """ Compares networks through their evaluation and analysis reports """
    config = _config(args)
    graphs = [prepare_graph(path) for path in args.edges]
    eval_reports = [read_json(path) for path in args.eval]
    analysis_reports = [read_json(path) for path in args.analysis]
    seed = config.train.seed
    report = summarize_networks(eval_reports, analysis_reports, graphs, config.analysis, seed,
                                threads=config.threads)
    manifest = RunManifest("summarize", config.hash(), {"seed": seed},
                           [path for path in list(args.edges) + list(args.eval) + list(args.analysis)])
    with staging_area(args.out) as area:
        write_json(area.path("summary.json"), report.to_dict())
        report.to_frame().to_csv(area.path("summary.csv"), index=False, float_format=CSV_FLOAT_FORMAT)
        manifest.write(area)
    return report


################################################################################
#
#           A R G U M E N T S
#
################################################################################
def _add_common(parser, resampling=False):
    parser.add_argument("--config", help="YAML or JSON configuration file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="Named set of reduced or paper settings")
    parser.add_argument("--out", required=True, help="Output directory")
    parser.add_argument("--seed", type=int, help="Top-level seed of every random stream")
    parser.add_argument("--threads", type=int, help="Worker threads")
    parser.add_argument("--restarts", type=int, help="Initializations per fit")
    if resampling:
        parser.add_argument("--folds", type=int, help="Cross-validation folds")
        parser.add_argument("--neg-sets", dest="neg_sets", type=int, help="Negative sets per fold and layer")


def build_parser():
    parser = argparse.ArgumentParser(prog="pymlt", description="Multiplex latent trade-off models")
    parser.add_argument("--version", action="version", version="%(prog)s " + pymlt.__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More output, repeat for debugging")
    parser.add_argument("--log-dir", help="Also write the log to a file in this directory")
    subparsers = parser.add_subparsers(dest="command", help="sub-command help")
    subparsers.required = True

    parser_fit = subparsers.add_parser("fit", help="Fit a model variant to a multiplex network")
    parser_fit.add_argument("--edges", required=True, help="Edge list: src dst layer")
    parser_fit.add_argument("--variant", choices=VARIANTS, default="full")
    _add_common(parser_fit)
    parser_fit.set_defaults(func=cmd_fit)

    parser_sample = subparsers.add_parser("sample", help="Draw a network from a spec or fitted parameters")
    source = parser_sample.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", help="Synthetic network spec (YAML or JSON)")
    source.add_argument("--params", help="Parameter file written by fit")
    _add_common(parser_sample)
    parser_sample.set_defaults(func=cmd_sample)

    parser_eval = subparsers.add_parser("eval", help="Cross-validated link prediction, bias versus full")
    parser_eval.add_argument("--edges", required=True, help="Edge list: src dst layer")
    _add_common(parser_eval, resampling=True)
    parser_eval.set_defaults(func=cmd_eval)

    parser_analyze = subparsers.add_parser("analyze", help="Statistics of a fitted network")
    parser_analyze.add_argument("--edges", required=True, help="Edge list: src dst layer")
    parser_analyze.add_argument("--params", required=True, action="append",
                                help="Parameter file; repeat for several variants")
    _add_common(parser_analyze)
    parser_analyze.set_defaults(func=cmd_analyze)

    parser_summarize = subparsers.add_parser("summarize", help="Compare several networks")
    parser_summarize.add_argument("--eval", required=True, nargs="+", help="metrics.json of every network")
    parser_summarize.add_argument("--analysis", nargs="*", default=[], help="analysis.json of every network")
    parser_summarize.add_argument("--edges", required=True, nargs="+", help="Edge list of every network")
    _add_common(parser_summarize)
    parser_summarize.set_defaults(func=cmd_summarize)
    return parser


def parse_args(argv=None):
    return build_parser().parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    logging.set_logging_main_output(args.command, args.verbose, args.log_dir)
    try:
        args.func(args)
    except NumericError as error:
        logger.error("%s", error)
        return EXIT_NUMERIC
    except MltError as error:
        logger.error("%s", error)
        return EXIT_INVALID
    except (IOError, OSError) as error:
        logger.error("%s", error)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
