"""Command-line pipeline: build -> compose -> train -> select-paths -> eval -> query.

Every command writes a ``provenance.json`` (or ``<out>.provenance.json``)
beside its outputs holding the argv, resolved configuration and version.
Failures print one ``error: <Kind>: <message>`` line on stderr; usage
errors exit with status 2, pipeline errors with status 1.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import subprocess
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .corpus import instances_from_graph, load_instances, temporal_holdout
from .errors import AuthorIdError, UsageError
from .evaluation import _rank_whole, eligible_authors, evaluate, parse_protocol
from .graph_store import NodeType, load_edges, load_nodes, load_store, save_store
from .metapath import (
    load_adjacency,
    materialize,
    parse_path_spec,
    prune,
    read_path_list,
    save_adjacency,
)
from .model_io import load_model, save_model
from .objectives import PaperInstance, paper_repr
from .path_selection import SelectionData, select_paths
from .trainer import TrainConfig, train

VERBS = ("build", "compose", "train", "select-paths", "eval", "query")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def version_string() -> str:
    try:
        desc = subprocess.run(["git", "describe", "--always", "--dirty"],
                              cwd=Path(__file__).parent, capture_output=True, text=True,
                              timeout=5)
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_provenance(path, argv, command, config=None, extra=None) -> None:
    record = {"command": command, "argv": list(argv), "version": version_string()}
    if config is not None:
        record["config"] = config
    if extra:
        record.update(extra)
    Path(path).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def adjacency_filename(spec: str) -> str:
    return spec.replace("<", "~") + ".adj"


# ------------------------------------------------------------------ parser

def _train_flags(p, samples_default=1_000_000):
    d = TrainConfig()
    p.add_argument("--omega", type=float, default=d.omega)
    p.add_argument("--lambda", dest="lam", type=float, default=d.lam)
    p.add_argument("--margin", type=float, default=d.margin)
    p.add_argument("--k", dest="k_negatives", type=int, default=d.k_negatives)
    p.add_argument("--dim", type=int, default=d.dim)
    p.add_argument("--lr", dest="lr_initial", type=float, default=d.lr_initial)
    p.add_argument("--samples", dest="total_samples", type=int, default=samples_default)
    p.add_argument("--batch", dest="batch_size", type=int, default=d.batch_size)
    p.add_argument("--threads", type=int, default=d.threads)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--noise-exponent", type=float, default=d.noise_exponent)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="authorid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"authorid {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", metavar="{" + ",".join(VERBS) + "}",
                                parser_class=_Parser)

    p = sub.add_parser("build", help="load nodes/edges TSV into a binary graph store")
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("compose", help="materialize meta-path adjacencies")
    p.add_argument("--graph", required=True)
    p.add_argument("--paths", required=True, help="path list file, one spec per line")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--prune", type=float, default=None, help="minimum raw path weight")
    p.add_argument("--keep-self-loops", action="store_true")

    p = sub.add_parser("train", help="joint training")
    p.add_argument("--graph", required=True)
    p.add_argument("--paths", help="path list file (required unless --omega 0)")
    p.add_argument("--adjacency-dir", help="reuse adjacencies written by 'compose'")
    p.add_argument("--instances", help="training instances; default: every paper in the graph")
    p.add_argument("--out", required=True, help="model file to write")
    _train_flags(p)

    p = sub.add_parser("select-paths", help="greedy task-guided path selection")
    p.add_argument("--graph", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--budget-per-run", type=int, default=1_000_000)
    p.add_argument("--val-size", type=int, default=100, help="candidate set size for validation")
    p.add_argument("--no-baseline", action="store_true")
    p.add_argument("--out-dir", required=True)
    _train_flags(p)

    p = sub.add_parser("eval", help="rank candidate authors for test papers")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--protocol", default="sampled:100", help="'sampled:<size>' or 'whole'")
    p.add_argument("--k", default="3,10", help="comma-separated cut-offs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--group-by-degree", action="store_true")
    p.add_argument("--as-printed-ap", action="store_true",
                   help="omit the relevance factor inside AP@K")
    p.add_argument("--out", help="metrics TSV (default: stdout)")

    p = sub.add_parser("query", help="top authors for a keyword or an ad-hoc paper")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--keyword", help="keyword external id or label")
    g.add_argument("--instance-line", help="one instance-file row")
    p.add_argument("--top", type=int, default=10)
    return parser


# ------------------------------------------------------------------ commands

def _config(args, paths) -> TrainConfig:
    return TrainConfig(omega=args.omega, lam=args.lam, margin=args.margin,
                       k_negatives=args.k_negatives, dim=args.dim, lr_initial=args.lr_initial,
                       total_samples=args.total_samples, batch_size=args.batch_size,
                       threads=args.threads, seed=args.seed, paths=list(paths),
                       noise_exponent=args.noise_exponent)


def cmd_build(args, argv):
    catalog = load_nodes(args.nodes)
    edges = load_edges(args.edges, catalog)
    save_store(args.out, catalog, edges)
    counts = {t.tsv_name: n for t, n in catalog.per_type_counts.items()}
    write_provenance(f"{args.out}.provenance.json", argv, "build",
                     extra={"nodes": len(catalog), "edges": len(edges), "per_type": counts})
    print(f"nodes={len(catalog)} edges={len(edges)} " +
          " ".join(f"{k}={v}" for k, v in counts.items()))


def cmd_compose(args, argv):
    catalog, edges = load_store(args.graph)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for path in read_path_list(args.paths):
        adj = materialize(path, edges, len(catalog), drop_self_loops=not args.keep_self_loops)
        if args.prune is not None:
            adj = prune(adj, args.prune)
        save_adjacency(adj, out / adjacency_filename(adj.spec))
        written.append({"path": adj.spec, "entries": len(adj), "total_raw_weight": adj.total_raw_weight})
        print(f"{adj.spec}\tentries={len(adj)}\ttotal_raw_weight={adj.total_raw_weight!r}")
    write_provenance(out / "provenance.json", argv, "compose", extra={"paths": written})


def _adjacencies(specs, catalog, edges, adjacency_dir=None):
    out = []
    for spec in specs:
        if adjacency_dir is not None:
            f = Path(adjacency_dir) / adjacency_filename(spec)
            if f.exists():
                out.append(load_adjacency(f))
                continue
        out.append(materialize(parse_path_spec(spec), edges, len(catalog)))
    return out


def cmd_train(args, argv):
    catalog, edges = load_store(args.graph)
    if args.paths:
        specs = [str(p) for p in read_path_list(args.paths)]
    elif args.omega > 0:
        raise UsageError("train: --paths is required unless --omega 0")
    else:
        specs = []
    config = _config(args, specs)
    if args.instances:
        instances, _ = load_instances(args.instances, catalog)
    else:
        instances = instances_from_graph(catalog, edges)
    adjs = _adjacencies(specs, catalog, edges, args.adjacency_dir)
    model, report = train(config, catalog, adjs, instances)
    save_model(model, catalog, args.out)
    report.model_path = str(args.out)
    report.write(f"{args.out}.report")
    write_provenance(f"{args.out}.provenance.json", argv, "train", config=asdict(config))
    print(f"trained {report.total_processed} samples in {report.wall_time:.2f}s "
          f"({report.samples_processed['network']} network, {report.samples_processed['task']} task)")


def cmd_select(args, argv):
    catalog, edges = load_store(args.graph)
    candidates = [str(p) for p in read_path_list(args.candidates)]
    config = _config(args, []).replace(total_samples=args.budget_per_run)
    holdout = temporal_holdout(catalog, edges)
    data = SelectionData(holdout, parse_protocol(f"sampled:{args.val_size}"), eval_seed=args.seed)
    report = select_paths(candidates, config, data, use_baseline=not args.no_baseline)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "selection.tsv").write_text(report.to_tsv(), encoding="utf-8")
    (out / "selection.txt").write_text(report.summary(), encoding="utf-8")
    (out / "selected_paths.txt").write_text("\n".join(report.selected) + "\n", encoding="utf-8")
    write_provenance(out / "provenance.json", argv, "select-paths", config=asdict(config),
                     extra={"validation_year": holdout.valid_year, "runs": report.runs})
    print(report.summary(), end="")


def cmd_eval(args, argv):
    catalog, _ = load_store(args.graph)
    model = load_model(args.model, catalog)
    instances, stats = load_instances(args.instances, catalog)
    ks = [int(k) for k in args.k.split(",") if k.strip()]
    result = evaluate(model, instances, catalog, parse_protocol(args.protocol), ks=ks,
                      seed=args.seed, threads=args.threads, group_by_degree=args.group_by_degree,
                      include_relevance=not args.as_printed_ap)
    tsv = result.to_tsv()
    if args.out:
        Path(args.out).write_text(tsv, encoding="utf-8")
        write_provenance(f"{args.out}.provenance.json", argv, "eval",
                         extra={"papers": result.n_papers, "skipped_papers": result.skipped_papers,
                                "excluded_authors": result.excluded_authors + stats.unknown_authors,
                                "unknown_neighbors": stats.unknown_neighbors})
    sys.stdout.write(tsv)
    print(f"# papers={result.n_papers} skipped={result.skipped_papers} "
          f"excluded_authors={result.excluded_authors + stats.unknown_authors}", file=sys.stderr)


def cmd_query(args, argv):
    catalog, _ = load_store(args.graph)
    model = load_model(args.model, catalog)
    if args.keyword is not None:
        node = catalog.index.get(args.keyword)
        if node is None:
            hits = [i for i in catalog.nodes_of_type(NodeType.KEYWORD)
                    if catalog.labels[i] == args.keyword]
            if not hits:
                raise UsageError(f"query: unknown keyword {args.keyword!r}")
            node = int(hits[0])
        inst = PaperInstance.build(-1, keywords=[node], name=args.keyword)
    else:
        instances, _ = load_instances(io.StringIO(args.instance_line.rstrip("\n") + "\n"), catalog)
        inst = instances[0]
    paper_repr(inst, model)
    ranked = _rank_whole(model, inst, eligible_authors(catalog), inst.authors, args.top)
    for rank, (a, s) in enumerate(zip(ranked.authors, ranked.scores), start=1):
        mark = "*" if a in inst.authors else ""
        print(f"{rank}\t{catalog.ids[a]}\t{catalog.labels[a]}\t{float(s)!r}{mark}")


COMMANDS = {"build": cmd_build, "compose": cmd_compose, "train": cmd_train,
            "select-paths": cmd_select, "eval": cmd_eval, "query": cmd_query}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:          # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: UsageError: {exc}", file=sys.stderr)
        return 2
    if args.verb is None:
        parser.print_usage(sys.stderr)
        print("error: UsageError: no command given", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.verb](args, argv)
    except UsageError as exc:
        print(f"error: UsageError: {exc}", file=sys.stderr)
        return 2
    except (AuthorIdError, OSError, ValueError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
