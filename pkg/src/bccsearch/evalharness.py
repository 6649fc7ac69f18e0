"""Experimental protocol support: overlap scoring against ground truth,
degree-rank/inter-distance query workloads, and synthetic two-label graph
construction with planted communities.

All randomness flows from one seed through named streams, so labels, edge
noise and query sampling are each independently reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import LabeledGraph, WorkingSubgraph, bfs_distances, from_edges

# Stream ids for the seeded generators (order is part of the format).
_STREAM_LABELS = 0
_STREAM_LOCAL_EDGES = 1
_STREAM_GLOBAL_EDGES = 2
_STREAM_QUERIES = 3
_STREAM_BUTTERFLY_SEED = 4


@dataclass
class EvalConfig:
    degree_rank: int = 80          # vertex qualifies above this percentile
    inter_distance: int = 1        # exact hop distance between query pairs
    num_queries: int = 20
    cross_edge_ratio_local: float = 0.10
    cross_edge_ratio_global: float = 0.10
    rng_seed: int = 0
    ensure_butterflies: bool = True   # plant one butterfly anchor per pair

    def validate(self) -> None:
        if not (0 < self.degree_rank <= 100):
            raise ValueError("degree_rank must be in (0, 100]")
        if self.inter_distance < 1:
            raise ValueError("inter_distance must be >= 1")
        for r in (self.cross_edge_ratio_local, self.cross_edge_ratio_global):
            if not (0.0 <= r <= 1.0):
                raise ValueError("cross-edge ratios must lie in [0, 1]")


def _stream(cfg: EvalConfig, which: int) -> np.random.Generator:
    return np.random.default_rng([cfg.rng_seed, which])


def f1_score(found, truth) -> tuple[float, float, float]:
    """Precision/recall/F1 between a discovered and a ground-truth community.

    Empty discovery scores (0, 0, 0); an empty truth set is a caller error.
    """
    truth = set(truth)
    if not truth:
        raise ValueError("ground-truth community must be nonempty")
    found = set(found)
    if not found:
        return 0.0, 0.0, 0.0
    inter = len(found & truth)
    prec = inter / len(found)
    recall = inter / len(truth)
    if prec + recall == 0:
        return 0.0, 0.0, 0.0
    return prec, recall, 2 * prec * recall / (prec + recall)


def degree_rank_qualifiers(g: LabeledGraph, degree_rank: int) -> np.ndarray:
    """Boolean mask of vertices in the top (100 - degree_rank)% of their own
    label group's degree order (ties broken by vertex id)."""
    qual = np.zeros(g.n, dtype=bool)
    degs = g.degrees()
    for lab in range(len(g.label_names)):
        members = g.vertices_with_label(lab)
        if members.size == 0:
            continue
        order = members[np.lexsort((members, degs[members]))]
        cutoff = (degree_rank / 100.0) * (order.size - 1)
        for i, v in enumerate(order):
            if i >= cutoff:
                qual[v] = True
    return qual


def generate_queries(g: LabeledGraph, cfg: EvalConfig) -> list[tuple[int, int]]:
    """Seeded sample of query pairs: distinct labels, both vertices clearing
    the degree-rank bar, exact inter-distance between them."""
    cfg.validate()
    if len(g.label_names) < 2:
        raise ValueError("need at least two labels to form query pairs")
    qual = degree_rank_qualifiers(g, cfg.degree_rank)
    if not qual.any():
        raise ValueError(f"no vertex clears degree rank {cfg.degree_rank}%")
    ws = WorkingSubgraph(g)
    pairs: list[tuple[int, int]] = []
    for u in np.flatnonzero(qual):
        u = int(u)
        dist = bfs_distances(ws, u)
        at_l = np.flatnonzero((dist == cfg.inter_distance) & qual
                              & (g.label_of != g.label_of[u]))
        pairs.extend((u, int(v)) for v in at_l if u < v)
    if not pairs:
        raise ValueError(
            f"no qualifying pair at inter-distance {cfg.inter_distance} "
            f"(degree rank {cfg.degree_rank}% qualifiers exist)")
    rng = _stream(cfg, _STREAM_QUERIES)
    if len(pairs) <= cfg.num_queries:
        picked = list(pairs)
        rng.shuffle(picked)
    else:
        idx = rng.choice(len(pairs), size=cfg.num_queries, replace=False)
        picked = [pairs[i] for i in idx]
    for ql, qr in picked:
        assert qual[ql] and qual[qr]
        assert int(bfs_distances(ws, ql)[qr]) == cfg.inter_distance
    return picked


def _sample_new_cross_edges(rng, side_a, side_b, existing, count, forbid_self=True):
    """Up to ``count`` fresh cross pairs (rejection sampling, bounded)."""
    out = []
    attempts = 0
    limit = max(50, 30 * count)
    while len(out) < count and attempts < limit:
        attempts += 1
        a = int(side_a[rng.integers(side_a.size)])
        b = int(side_b[rng.integers(side_b.size)])
        if forbid_self and a == b:
            continue
        key = (a, b) if a < b else (b, a)
        if key in existing:
            continue
        existing.add(key)
        out.append(key)
    return out


def synthesize_labels(
    n: int,
    edges: list[tuple[int, int]],
    communities: list[list[int]],
    cfg: EvalConfig,
) -> tuple[LabeledGraph, list[set[int]]]:
    """Turn an unlabeled graph into a two-label instance with planted
    cross-community collaborations.

    Communities alternate between the two label sides; consecutive
    (even, odd) communities form planted pairs that receive local cross
    edges (ratio of their internal edge count) plus, optionally, one
    guaranteed butterfly anchor.  Global noise adds cross-label edges at a
    ratio of the base edge count.  Returns the labeled graph and the planted
    pair unions for scoring.
    """
    cfg.validate()
    for c in communities:
        for v in c:
            if not (0 <= v < n):
                raise ValueError(f"community references unknown vertex {v}")

    side_of_comm = [i % 2 for i in range(len(communities))]
    rng_labels = _stream(cfg, _STREAM_LABELS)
    label_votes: dict[int, set[int]] = {}
    for ci, comm in enumerate(communities):
        for v in comm:
            label_votes.setdefault(v, set()).add(side_of_comm[ci])
    labels = []
    for v in range(n):
        votes = label_votes.get(v)
        if votes is None or len(votes) == 2:
            labels.append("A" if rng_labels.random() < 0.5 else "B")
        else:
            labels.append("A" if 0 in votes else "B")

    edge_set = {(min(u, v), max(u, v)) for u, v in edges}
    base_edge_count = len(edge_set)

    def internal_edge_count(comm):
        cs = set(comm)
        return sum(1 for u, v in edge_set if u in cs and v in cs)

    truths: list[set[int]] = []
    rng_local = _stream(cfg, _STREAM_LOCAL_EDGES)
    rng_seed_bfly = _stream(cfg, _STREAM_BUTTERFLY_SEED)
    for pi in range(0, len(communities) - 1, 2):
        a_comm, b_comm = communities[pi], communities[pi + 1]
        side_a = np.array([v for v in a_comm if labels[v] == "A"], dtype=np.int64)
        side_b = np.array([v for v in b_comm if labels[v] == "B"], dtype=np.int64)
        truths.append(set(a_comm) | set(b_comm))
        if side_a.size == 0 or side_b.size == 0:
            continue
        want = round(cfg.cross_edge_ratio_local
                     * (internal_edge_count(a_comm) + internal_edge_count(b_comm)))
        _sample_new_cross_edges(rng_local, side_a, side_b, edge_set, want)
        if cfg.ensure_butterflies and side_a.size >= 2 and side_b.size >= 2:
            # One anchored 2 x (1+5) biclique: both anchors then sit in at
            # least min(5, available) butterflies together.
            xa = rng_seed_bfly.choice(side_a, size=2, replace=False)
            wing = min(6, side_b.size)
            yb = rng_seed_bfly.choice(side_b, size=wing, replace=False)
            for a in xa:
                for b in yb:
                    key = (min(int(a), int(b)), max(int(a), int(b)))
                    edge_set.add(key)

    rng_global = _stream(cfg, _STREAM_GLOBAL_EDGES)
    side_a_all = np.array([v for v in range(n) if labels[v] == "A"], dtype=np.int64)
    side_b_all = np.array([v for v in range(n) if labels[v] == "B"], dtype=np.int64)
    if side_a_all.size and side_b_all.size:
        want = round(cfg.cross_edge_ratio_global * base_edge_count)
        _sample_new_cross_edges(rng_global, side_a_all, side_b_all, edge_set, want)

    g = from_edges(sorted(edge_set), labels, n=n)
    return g, truths


# ---------------------------------------------------------------------------
# Evaluation runs: one row per (query, algorithm), TSV plus rendered figures.
# ---------------------------------------------------------------------------

REPORT_COLUMNS = [
    "query_id", "algorithm", "status", "result_size", "query_distance",
    "diameter", "precision", "recall", "f1", "wall_time_ms",
]


@dataclass
class EvalRow:
    query_id: int
    algorithm: str
    status: str
    result_size: int
    query_distance: int
    diameter: int
    precision: float
    recall: float
    f1: float
    wall_time_ms: float

    def as_tsv(self) -> str:
        return "\t".join([
            str(self.query_id), self.algorithm, self.status,
            str(self.result_size), str(self.query_distance), str(self.diameter),
            f"{self.precision:.6f}", f"{self.recall:.6f}", f"{self.f1:.6f}",
            f"{self.wall_time_ms:.3f}",
        ])


def _truth_for(truths: list[set[int]], ql: int, qr: int, found: set[int]) -> set[int] | None:
    both = [t for t in truths if ql in t and qr in t]
    if both:
        return both[0]
    either = [t for t in truths if ql in t or qr in t]
    if either:
        # Fall back to the best-aligned candidate among those touching Q.
        return max(either, key=lambda t: f1_score(found, t)[2] if found else 0.0)
    return None


def run_eval(
    g: LabeledGraph,
    truths: list[set[int]],
    queries: list[tuple[int, int]],
    algorithms: list[str],
    jobs: int = 1,
) -> list[EvalRow]:
    """Run every algorithm on every query pair, scoring against the planted
    community that contains the pair.  Queries run in a bounded worker pool;
    rows come back in deterministic (query, algorithm) order."""
    import time
    from concurrent.futures import ThreadPoolExecutor

    from .local import build_bcindex, l2p_search
    from .online import BccQuery, lp_search, online_search

    idx = None
    if "l2p" in algorithms:
        if len(g.label_names) != 2:
            raise ValueError("index-based evaluation expects a two-label graph")
        idx = build_bcindex(g, 0, 1)

    def one(task):
        qid, (ql, qr), alg = task
        query = BccQuery(ql=ql, qr=qr, algorithm=alg)
        t0 = time.perf_counter()
        if alg == "online":
            res = online_search(g, query)
        elif alg == "lp":
            res = lp_search(g, query)
        elif alg == "l2p":
            res = l2p_search(g, idx, query)
        else:
            raise ValueError(f"unknown algorithm {alg!r}")
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        found = set(res.vertices)
        truth = _truth_for(truths, ql, qr, found)
        prec = rec = f1 = 0.0
        if truth:
            prec, rec, f1 = f1_score(found, truth)
        return EvalRow(
            query_id=qid, algorithm=alg, status=res.status,
            result_size=len(found),
            query_distance=res.query_distance, diameter=res.diameter,
            precision=prec, recall=rec, f1=f1, wall_time_ms=elapsed_ms,
        )

    tasks = [(qid, pair, alg)
             for qid, pair in enumerate(queries) for alg in algorithms]
    if jobs <= 1:
        rows = [one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, tasks))
    rows.sort(key=lambda r: (r.query_id, r.algorithm))
    return rows


def write_report(rows: list[EvalRow], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(REPORT_COLUMNS) + "\n")
        for r in rows:
            f.write(r.as_tsv() + "\n")


def summarize(rows: list[EvalRow]) -> dict[str, dict[str, float]]:
    """Per-algorithm means of the quality metrics plus the found count."""
    out: dict[str, dict[str, float]] = {}
    for alg in sorted({r.algorithm for r in rows}):
        sub = [r for r in rows if r.algorithm == alg]
        out[alg] = {
            "queries": len(sub),
            "found": sum(1 for r in sub if r.status == "found"),
            "precision": float(np.mean([r.precision for r in sub])),
            "recall": float(np.mean([r.recall for r in sub])),
            "f1": float(np.mean([r.f1 for r in sub])),
            "median_ms": float(np.median([r.wall_time_ms for r in sub])),
        }
    return out


def render_figures(rows: list[EvalRow], outdir) -> list[str]:
    """Bar charts of mean F1 and median wall time per algorithm, written next
    to the delimited report."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stats = summarize(rows)
    algs = list(stats)
    written = []

    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(algs, [stats[a]["f1"] for a in algs], color="#4878d0")
    ax.set_ylabel("mean F1")
    ax.set_ylim(0, 1.05)
    ax.set_title("Community quality by algorithm")
    fig.tight_layout()
    p = outdir / "f1_by_algorithm.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(str(p))

    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(algs, [stats[a]["median_ms"] for a in algs], color="#d65f5f")
    ax.set_ylabel("median wall time (ms)")
    ax.set_title("Query latency by algorithm")
    fig.tight_layout()
    p = outdir / "time_by_algorithm.png"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(str(p))
    return written
