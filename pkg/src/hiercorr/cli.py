"""Command-line front end.

Every subcommand reads raw data (``--data``) or a correlation matrix
(``--corr``), writes its artifacts into ``--out`` and finishes with a
``manifest.json`` listing them.  Exit codes: 0 success, 2 input error,
3 numeric failure, 4 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import BootstrapConfig, link_bootstrap_values, node_bootstrap_values, reduce_dendrogram
from .errors import AlphaOutOfRange, ConfigError, HierCorrError, InputError
from .evaluation import full_report
from .filters import make_filter
from .hclust import cluster, from_newick, to_newick
from .hnfm import dump_spec, hnfm_from_dendrogram, load_spec, simulate_gaussian, simulate_student
from .io import (
    ingest_csv,
    read_correlation_csv,
    write_correlation_csv,
    write_data_csv,
    write_graph_dot,
    write_graph_json,
    write_manifest,
)
from .kl import KL_MODES, estimate_mu, student_mle_correlation
from .linalg import pearson_correlation
from .networks import build_graph

log = logging.getLogger("hiercorr")


class Stage:
    """Tags errors with the pipeline stage that raised them."""

    current = "setup"

    def __call__(self, name):
        self.current = name
        log.info("stage: %s", name)


def parse_alphas(text):
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ConfigError(f"alpha step must be positive, got {step}")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            grid = [round(start + k * step, 12) for k in range(count)]
        else:
            grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad alpha grid {text!r}: {exc}") from exc
    if not grid:
        raise ConfigError("empty alpha grid")
    bad = [a for a in grid if not 0.0 <= a <= 1.0]
    if bad:
        raise AlphaOutOfRange(f"alpha values outside [0, 1]: {bad}")
    return grid


def _need_data(args):
    if args.data is None:
        raise InputError(f"{args.command} needs raw data (--data)")
    return ingest_csv(args.data)


def _correlation(args):
    if args.corr is not None:
        return read_correlation_csv(args.corr)
    if args.data is None:
        raise InputError("give --data or --corr")
    return pearson_correlation(ingest_csv(args.data))


def _config(args):
    skip = {"out", "func", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# -- subcommands ----------------------------------------------------------------


def cmd_correlate(args, out, stage):
    stage("ingest")
    data = _need_data(args)
    stage("correlate")
    if args.estimator == "pearson":
        c = pearson_correlation(data)
    else:
        mu = args.mu if args.mu is not None else estimate_mu(data)[0]
        c = student_mle_correlation(data, mu)
    path = out / f"correlation_{args.estimator}.csv"
    write_correlation_csv(c, path)
    return [path]


def cmd_cluster(args, out, stage):
    stage("ingest")
    c = _correlation(args)
    stage("cluster")
    tree, filt = cluster(c, args.method)
    if args.replicas:
        stage("bootstrap")
        data = _need_data(args)
        cfg = BootstrapConfig(args.replicas, args.seed)
        tree = tree.with_support(node_bootstrap_values(data, args.method, cfg))
    m = args.method.lower()
    paths = [out / f"filtered_{m}.csv", out / f"dendrogram_{m}.nwk"]
    write_correlation_csv(filt, paths[0])
    paths[1].write_text(to_newick(tree) + "\n", encoding="utf-8")
    return paths


def cmd_network(args, out, stage):
    stage("ingest")
    c = _correlation(args)
    stage("network")
    g = build_graph(c, args.kind)
    if args.replicas:
        stage("bootstrap")
        data = _need_data(args)
        g = g.with_support(link_bootstrap_values(data, args.kind, BootstrapConfig(args.replicas, args.seed)))
    k = args.kind.lower()
    paths = [out / f"graph_{k}.json", out / f"graph_{k}.dot"]
    write_graph_json(g, paths[0])
    write_graph_dot(g, paths[1])
    return paths


def cmd_bootstrap(args, out, stage):
    stage("ingest")
    data = _need_data(args)
    cfg = BootstrapConfig(args.replicas, args.seed, args.threshold)
    stage("cluster")
    tree, _ = cluster(pearson_correlation(data), args.method)
    stage("bootstrap")
    support = node_bootstrap_values(data, args.method, cfg)
    tree = tree.with_support(support)
    reduced = reduce_dendrogram(tree, support, cfg.threshold)
    m = args.method.lower()
    paths = [out / f"dendrogram_{m}_bootstrap.nwk", out / f"dendrogram_{m}_reduced.nwk"]
    paths[0].write_text(to_newick(tree) + "\n", encoding="utf-8")
    paths[1].write_text(to_newick(reduced) + "\n", encoding="utf-8")
    return paths


def cmd_hnfm(args, out, stage):
    stage("ingest")
    if args.tree is not None:
        tree = from_newick(Path(args.tree).read_text(encoding="utf-8"))
    else:
        c = _correlation(args)
        stage("cluster")
        tree, _ = cluster(c, args.method)
        if args.replicas:
            stage("bootstrap")
            data = _need_data(args)
            cfg = BootstrapConfig(args.replicas, args.seed, args.threshold)
            support = node_bootstrap_values(data, args.method, cfg)
            tree = reduce_dendrogram(tree.with_support(support), support, cfg.threshold)
    stage("hnfm")
    spec = hnfm_from_dendrogram(tree, args.mu)
    path = out / "hnfm.json"
    with open(path, "w", encoding="utf-8") as fp:
        dump_spec(spec, fp)
    return [path]


def cmd_simulate(args, out, stage):
    stage("ingest")
    with open(args.spec, encoding="utf-8") as fp:
        spec = load_spec(fp)
    stage("simulate")
    rng = np.random.default_rng(args.seed)
    mu = args.mu if args.mu is not None else spec.mu
    data = simulate_gaussian(spec, args.t, rng) if mu is None else simulate_student(spec, args.t, rng, mu)
    path = out / "simulated.csv"
    write_data_csv(data, path)
    return [path]


def cmd_evaluate(args, out, stage):
    stage("ingest")
    data = _need_data(args)
    stage("config")
    grid = parse_alphas(args.alphas) if args.alphas else []
    names = [f.strip() for f in args.filters.split(",") if f.strip()]
    sweep = "shrink" in [n.lower() for n in names]
    names = [n for n in names if n.lower() != "shrink"]
    filters = {n: make_filter(n, data.t) for n in names}
    if sweep and not grid:
        raise ConfigError("filter 'shrink' needs an --alphas grid")
    cfg = BootstrapConfig(args.replicas, args.seed)
    kl_mode = None if args.kl_mode == "auto" else args.kl_mode
    stage("evaluate")
    report = full_report(data, filters, grid if sweep else [], cfg, kl_mode, None, args.sims, args.boots)
    paths = [out / "evaluation.json", out / "evaluation.csv"]
    with open(paths[0], "w", encoding="utf-8") as fp:
        report.write_json(fp)
    with open(paths[1], "w", newline="", encoding="utf-8") as fp:
        report.write_csv(fp)
    return paths


# -- parser -------------------------------------------------------------------


def _source_args(p, corr=True):
    p.add_argument("--data", help="CSV of records: header of labels, one row per time step")
    if corr:
        p.add_argument("--corr", help="correlation matrix CSV (as written by 'correlate')")


def _boot_args(p, default=0):
    p.add_argument("--replicas", type=int, default=default, help="bootstrap replicas (0 disables)")


def build_parser():
    parser = argparse.ArgumentParser(prog="hiercorr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correlate", parents=[common], help="sample correlation matrix")
    _source_args(p, corr=False)
    p.add_argument("--estimator", choices=["pearson", "student"], default="pearson")
    p.add_argument("--mu", type=float, help="Student degrees of freedom (default: fitted)")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("cluster", parents=[common], help="hierarchical clustering and filtered matrix")
    _source_args(p)
    p.add_argument("--method", choices=["alca", "slca"], default="alca")
    _boot_args(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("network", parents=[common], help="MST, ALMST or PMFG")
    _source_args(p)
    p.add_argument("--kind", choices=["mst", "almst", "pmfg"], default="mst")
    _boot_args(p)
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("bootstrap", parents=[common], help="node support and reduced dendrogram")
    _source_args(p, corr=False)
    p.add_argument("--method", choices=["alca", "slca"], default="alca")
    _boot_args(p, 1000)
    p.add_argument("--threshold", type=float, default=0.70)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("hnfm", parents=[common], help="factor model from a dendrogram")
    _source_args(p)
    p.add_argument("--tree", help="Newick dendrogram instead of clustering the input")
    p.add_argument("--method", choices=["alca", "slca"], default="alca")
    _boot_args(p)
    p.add_argument("--threshold", type=float, default=0.70)
    p.add_argument("--mu", type=float, help="Student degrees of freedom stored in the model")
    p.set_defaults(func=cmd_hnfm)

    p = sub.add_parser("simulate", parents=[common], help="sample series from an HNFM JSON")
    p.add_argument("--spec", required=True, help="HNFM JSON written by 'hnfm'")
    p.add_argument("--t", type=int, required=True, help="number of records")
    p.add_argument("--mu", type=float, help="Student degrees of freedom (default: Gaussian)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", parents=[common], help="stability-information report")
    _source_args(p, corr=False)
    p.add_argument("--filters", default="slca,alca,rmt,shrink", help="comma list of slca, alca, rmt, identity, shrink[:alpha]")
    p.add_argument("--alphas", default="0:1:0.05", help="shrinkage grid, start:stop:step or a comma list")
    _boot_args(p, 100)
    p.add_argument("--kl-mode", choices=["auto", *KL_MODES], default="auto")
    p.add_argument("--sims", type=int, default=100, help="simulations for the Student reference")
    p.add_argument("--boots", type=int, default=100, help="bootstrap replicas per simulation")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    stage = Stage()
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        paths = args.func(args, out, stage)
        stage("manifest")
        write_manifest(out, paths, _config(args), args.seed)
    except HierCorrError as exc:
        print(f"hiercorr {args.command}: error in {stage.current}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"hiercorr {args.command}: error in {stage.current}: {exc}", file=sys.stderr)
        return InputError.exit_code
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
