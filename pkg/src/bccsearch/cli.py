"""Command-line front end.

Exit codes: 0 success, 1 infeasible query (structured reason on stderr),
2 usage or input error.  Standard output is deterministic byte-for-byte for
identical inputs; anything timing- or environment-dependent goes to files or
stderr.  Vertex ids on this boundary are the external ids from the input
files.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .graph import GraphFormatError, LabeledGraph, load_graph

log = logging.getLogger("bcc")

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2


def _setup_logging() -> None:
    level = os.environ.get("BCC_LOG", "warning").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load(graph_path: str, labels_path: str, strict: bool = False) -> LabeledGraph:
    with open(graph_path, "r", encoding="utf-8") as f:
        edge_lines = f.readlines()
    with open(labels_path, "r", encoding="utf-8") as f:
        label_lines = f.readlines()
    return load_graph(edge_lines, label_lines, strict=strict)


def _int_ids(g: LabeledGraph, ext: int) -> int:
    try:
        return g.ext_to_int[ext]
    except KeyError:
        raise GraphFormatError(f"vertex {ext} not present in the graph") from None


def _ext(g: LabeledGraph, ids) -> list[int]:
    return [int(g.ext_ids[v]) for v in ids]


def _warn_ignored_flags(args, algorithm: str) -> None:
    relevant = {
        "online": set(),
        "lp": {"rho"},
        "l2p": {"rho", "eta", "gamma1", "gamma2"},
    }[algorithm]
    for flag in ("eta", "rho", "gamma1", "gamma2"):
        if getattr(args, flag) is not None and flag not in relevant:
            print(f"warning: --{flag} has no effect with --algorithm {algorithm}",
                  file=sys.stderr)


def _index_for(g: LabeledGraph, args, label_l: int, label_r: int):
    from .local import IndexFormatError, build_bcindex, load_bcindex

    path = args.index or (args.graph + ".bcindex")
    want_l, want_r = g.label_names[label_l], g.label_names[label_r]
    if Path(path).exists():
        try:
            idx = load_bcindex(path)
            if idx.matches(g, want_l, want_r):
                return idx
            print(f"warning: index {path} covers a different graph or label pair; "
                  "rebuilding in memory", file=sys.stderr)
        except IndexFormatError as exc:
            print(f"warning: unusable index {path} ({exc}); rebuilding in memory",
                  file=sys.stderr)
    else:
        print(f"warning: index {path} missing; rebuilding in memory", file=sys.stderr)
    return build_bcindex(g, label_l, label_r)


def cmd_build_index(args) -> int:
    from .local import build_bcindex, save_bcindex

    g = _load(args.graph, args.labels)
    if args.pair:
        label_l, label_r = (g.label_id(p) for p in args.pair)
    elif len(g.label_names) == 2:
        label_l, label_r = 0, 1
    else:
        print("error: graph has more than two labels; pass --pair L R", file=sys.stderr)
        return EXIT_USAGE
    idx = build_bcindex(g, label_l, label_r)
    out = args.out or (args.graph + ".bcindex")
    save_bcindex(idx, out)
    print(f"index: {out}")
    print(f"pair: {idx.label_left} {idx.label_right}")
    print(f"delta_max: {idx.delta_max}")
    print(f"chi_max: {idx.chi_max}")
    return EXIT_OK


def _print_result(g: LabeledGraph, res) -> int:
    if not res.found:
        print("status: infeasible")
        print(f"reason: {res.reason}")
        print(f"reason: {res.reason}", file=sys.stderr)
        return EXIT_INFEASIBLE
    vl, vr = _ext(g, [res.leader_left, res.leader_right])
    print("status: found")
    print(f"leaders: {vl} {vr} chi {res.leader_chi[0]} {res.leader_chi[1]}")
    print(f"query_distance: {res.query_distance}")
    print(f"diameter: {res.diameter}")
    print(f"iterations: {res.iterations}")
    print("left: " + " ".join(str(x) for x in sorted(_ext(g, res.left_group))))
    print("right: " + " ".join(str(x) for x in sorted(_ext(g, res.right_group))))
    return EXIT_OK


def cmd_query(args) -> int:
    from .online import BccQuery, lp_search, online_search

    g = _load(args.graph, args.labels)
    _warn_ignored_flags(args, args.algorithm)
    q = BccQuery(
        ql=_int_ids(g, args.ql), qr=_int_ids(g, args.qr),
        k1=args.k1, k2=args.k2, b=args.b, algorithm=args.algorithm,
        gamma1=args.gamma1 if args.gamma1 is not None else 0.5,
        gamma2=args.gamma2 if args.gamma2 is not None else 0.5,
        eta=args.eta if args.eta is not None else 1000,
        rho=args.rho if args.rho is not None else 3,
    )
    q.validate(g)
    if args.algorithm == "online":
        res = online_search(g, q)
    elif args.algorithm == "lp":
        res = lp_search(g, q)
    else:
        from .local import l2p_search
        idx = _index_for(g, args, int(g.label_of[q.ql]), int(g.label_of[q.qr]))
        res = l2p_search(g, idx, q)
    log.info("butterfly countings: %d, iterations: %d",
             res.butterfly_count_calls, res.iterations)
    return _print_result(g, res)


def cmd_query_multi(args) -> int:
    from .multi import MbccQuery, mbcc_search

    g = _load(args.graph, args.labels)
    _warn_ignored_flags(args, args.algorithm)
    queries = [_int_ids(g, x) for x in args.q]
    ks = None
    if args.k:
        if len(args.k) != len(queries):
            print("error: --k needs one value per query vertex", file=sys.stderr)
            return EXIT_USAGE
        ks = [None if x < 0 else x for x in args.k]
    q = MbccQuery(
        queries=queries, ks=ks, b=args.b, algorithm=args.algorithm,
        gamma1=args.gamma1 if args.gamma1 is not None else 0.5,
        gamma2=args.gamma2 if args.gamma2 is not None else 0.5,
        eta=args.eta if args.eta is not None else 1000,
        rho=args.rho if args.rho is not None else 3,
    )
    q.validate(g)
    res = mbcc_search(g, q)
    if not res.found:
        print("status: infeasible")
        print(f"reason: {res.reason}")
        print(f"reason: {res.reason}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print("status: found")
    print(f"groups: {len(res.groups)}")
    for name in sorted(res.groups):
        ids = " ".join(str(x) for x in sorted(_ext(g, res.groups[name])))
        print(f"group {name}: {ids}")
    for (a, b), (va, vb, ca, cb) in sorted(res.leader_pairs.items()):
        ea, eb = _ext(g, [va, vb])
        print(f"leaders {a} {b}: {ea} {eb} chi {ca} {cb}")
    print(f"query_distance: {res.query_distance}")
    print(f"diameter: {res.diameter}")
    print(f"iterations: {res.iterations}")
    return EXIT_OK


def cmd_gen_queries(args) -> int:
    from .evalharness import EvalConfig, generate_queries

    g = _load(args.graph, args.labels)
    cfg = EvalConfig(degree_rank=args.degree_rank, inter_distance=args.inter_distance,
                     num_queries=args.num, rng_seed=args.seed)
    pairs = generate_queries(g, cfg)
    for ql, qr in pairs:
        eql, eqr = _ext(g, [ql, qr])
        print(f"{eql} {eqr}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evalharness import run_eval, render_figures, summarize, write_report

    g = _load(args.graph, args.labels)
    truths = []
    with open(args.truth, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            truths.append({_int_ids(g, int(tok)) for tok in line.split()})
    queries = []
    with open(args.queries, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split()
            queries.append((_int_ids(g, int(a)), _int_ids(g, int(b))))
    algorithms = args.algorithms.split(",")
    rows = run_eval(g, truths, queries, algorithms, jobs=args.jobs)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_report(rows, outdir / "report.tsv")
    figures = render_figures(rows, outdir)
    for alg, stats in summarize(rows).items():
        print(f"algorithm {alg}: queries {int(stats['queries'])} "
              f"found {int(stats['found'])} "
              f"precision {stats['precision']:.6f} recall {stats['recall']:.6f} "
              f"f1 {stats['f1']:.6f}")
    print(f"report: {outdir / 'report.tsv'}")
    for fig in figures:
        print(f"figure: {fig}")
    return EXIT_OK


def cmd_stats(args) -> int:
    from .core import core_decompose

    g = _load(args.graph, args.labels)
    print(f"vertices: {g.n}")
    print(f"edges: {g.num_edges}")
    if g.duplicate_edges:
        print(f"duplicate_edges_collapsed: {g.duplicate_edges}")
    print(f"labels: {len(g.label_names)}")
    for name in sorted(g.label_names):
        count = int((g.label_of == g.label_id(name)).sum())
        print(f"label {name}: {count}")
    print(f"k_max: {core_decompose(g).k_max}")
    names = sorted(g.label_names)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            la, lb = g.label_id(a), g.label_id(b)
            count = 0
            for v in g.vertices_with_label(la):
                nb = g.neighbors(int(v))
                count += int((g.label_of[nb] == lb).sum())
            print(f"cross {a} {b}: {count}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bcc",
        description="Butterfly-core community search over labeled graphs",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_io(p):
        p.add_argument("--graph", required=True, help="edge list file")
        p.add_argument("--labels", required=True, help="vertex label file")

    def add_query_flags(p):
        p.add_argument("--b", type=int, default=1, help="butterfly threshold (default 1)")
        p.add_argument("--algorithm", choices=["online", "lp", "l2p"], default="online")
        p.add_argument("--gamma1", type=float, default=None,
                       help="coreness shortfall penalty (l2p, default 0.5)")
        p.add_argument("--gamma2", type=float, default=None,
                       help="butterfly shortfall penalty (l2p, default 0.5)")
        p.add_argument("--eta", type=int, default=None,
                       help="local expansion budget (l2p, default 1000)")
        p.add_argument("--rho", type=int, default=None,
                       help="leader search hop radius (lp/l2p, default 3)")
        p.add_argument("--index", default=None, help="index file (l2p)")

    p = sub.add_parser("build-index", help="precompute and store the coreness/butterfly index")
    add_io(p)
    p.add_argument("--pair", nargs=2, metavar=("LEFT", "RIGHT"), default=None,
                   help="label pair (defaults to the two labels of a 2-label graph)")
    p.add_argument("--out", default=None, help="output path (default <graph>.bcindex)")
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("query", help="two-label community query")
    add_io(p)
    p.add_argument("--ql", type=int, required=True, help="left query vertex id")
    p.add_argument("--qr", type=int, required=True, help="right query vertex id")
    p.add_argument("--k1", type=int, default=None, help="left core bound (default: coreness of ql)")
    p.add_argument("--k2", type=int, default=None, help="right core bound (default: coreness of qr)")
    add_query_flags(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("query-multi", help="multi-label community query")
    add_io(p)
    p.add_argument("--q", type=int, nargs="+", required=True,
                   help="query vertex ids, one per label")
    p.add_argument("--k", type=int, nargs="+", default=None,
                   help="per-group core bounds (-1 for automatic)")
    add_query_flags(p)
    p.set_defaults(func=cmd_query_multi)

    p = sub.add_parser("gen-queries", help="sample a query workload")
    add_io(p)
    p.add_argument("--degree-rank", type=int, default=80)
    p.add_argument("--inter-distance", type=int, default=1)
    p.add_argument("--num", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_queries)

    p = sub.add_parser("eval", help="score algorithms against ground truth")
    add_io(p)
    p.add_argument("--truth", required=True, help="ground-truth community file")
    p.add_argument("--queries", required=True, help="query pair file (one 'ql qr' per line)")
    p.add_argument("--algorithms", default="online,lp,l2p")
    p.add_argument("--jobs", type=int, default=1, help="worker pool size")
    p.add_argument("--out-dir", default="eval_out", help="report and figure directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="graph statistics")
    add_io(p)
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (GraphFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
