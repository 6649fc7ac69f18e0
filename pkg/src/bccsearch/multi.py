"""Community search for queries spanning m >= 2 distinct labels.

Each label group must be a connected k_i-core around its query vertex, and
the groups must hang together through pairwise butterfly interactions: a
group-level interaction graph gets an edge whenever a label pair has a
qualifying leader on each side, and that m-node graph must be connected.
The greedy shrink mirrors the two-label search with per-label maintenance
and per-pair butterfly bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .butterfly import BipartiteView, build_view, count_butterflies
from .core import core_decompose, extract_kcore, maintain_kcore
from .fastlp import IncrementalDistance, LeaderPair, identify_leader, update_leader_chi
from .graph import UNREACHABLE, DisconnectedError, LabeledGraph, WorkingSubgraph, bfs_distances
from .online import AUTO


class UnionFind:
    """Array-based disjoint sets with path halving; m is tiny here."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


@dataclass
class MbccQuery:
    queries: list[int]
    ks: list[int | None] | None = None   # None -> AUTO for every group
    b: int = 1
    algorithm: str = "online"            # online | lp | l2p
    gamma1: float = 0.5
    gamma2: float = 0.5
    eta: int = 1000
    rho: int = 3

    def validate(self, g: LabeledGraph) -> None:
        if len(self.queries) < 2:
            raise ValueError("need at least two query vertices")
        for q in self.queries:
            if not (0 <= q < g.n):
                raise ValueError(f"query vertex {q} out of range")
        labs = [int(g.label_of[q]) for q in self.queries]
        if len(set(labs)) != len(labs):
            raise ValueError("query vertices must carry pairwise distinct labels")
        if self.ks is not None and len(self.ks) != len(self.queries):
            raise ValueError("one core parameter per query vertex required")
        if self.b < 1:
            raise ValueError("butterfly threshold b must be >= 1")
        if self.algorithm not in ("online", "lp", "l2p"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


@dataclass
class MbccResult:
    status: str
    reason: str = ""
    vertices: list[int] = field(default_factory=list)
    groups: dict = field(default_factory=dict)          # label name -> sorted ids
    leader_pairs: dict = field(default_factory=dict)    # (name_a, name_b) -> (va, vb, chi_a, chi_b)
    query_distance: int = -1
    diameter: int = -1
    iterations: int = 0
    ks: list[int] = field(default_factory=list)
    butterfly_count_calls: int = 0

    @property
    def found(self) -> bool:
        return self.status == "found"


@dataclass
class GroupInteractionGraph:
    """m group-nodes; an edge marks a live pairwise butterfly interaction."""

    m: int
    edges: set[tuple[int, int]] = field(default_factory=set)

    def set_edge(self, i: int, j: int, present: bool) -> None:
        key = (i, j) if i < j else (j, i)
        if present:
            self.edges.add(key)
        else:
            self.edges.discard(key)


def check_group_connectivity(gig: GroupInteractionGraph) -> bool:
    """Union-find connectivity over the m group-nodes."""
    if gig.m == 0:
        return False
    uf = UnionFind(gig.m)
    for i, j in gig.edges:
        uf.union(i, j)
    root = uf.find(0)
    return all(uf.find(i) == root for i in range(gig.m))


@dataclass
class _PairState:
    view: BipartiteView
    interacting: bool
    pair: LeaderPair | None = None   # cached leaders (accelerated mode)
    last_state: object = None        # most recent full count for this pair


def _resolve_ks(g: LabeledGraph, q: MbccQuery) -> list[int]:
    ks = []
    given = q.ks if q.ks is not None else [AUTO] * len(q.queries)
    for qv, k in zip(q.queries, given):
        if k is AUTO:
            idx = core_decompose(g, restrict_label=int(g.label_of[qv]))
            ks.append(int(idx.coreness[qv]))
        else:
            ks.append(int(k))
    return ks


def _pair_interaction(ps: _PairState, alive: np.ndarray, b: int,
                      counters: dict) -> bool:
    state = count_butterflies(ps.view, alive)
    counters["butterfly_count_calls"] += 1
    left_alive = ps.view.left[alive[ps.view.left]]
    right_alive = ps.view.right[alive[ps.view.right]]
    max_l = int(state.chi[left_alive].max()) if left_alive.size else 0
    max_r = int(state.chi[right_alive].max()) if right_alive.size else 0
    ps.last_state = state
    return max_l >= b and max_r >= b


def mbcc_search(g: LabeledGraph, q: MbccQuery) -> MbccResult:
    """Greedy multi-label search selecting, among all feasible intermediate
    graphs, the one with the smallest query distance."""
    q.validate(g)
    ks = _resolve_ks(g, q)
    counters = {"butterfly_count_calls": 0}
    m = len(q.queries)
    labels = [int(g.label_of[qv]) for qv in q.queries]
    lab_index = {lab: i for i, lab in enumerate(labels)}

    if q.algorithm == "l2p":
        within = _local_candidate(g, q, labels)
    else:
        within = None

    # Per-label connected cores around each query vertex.
    base = WorkingSubgraph(g, members=np.flatnonzero(within) if within is not None else None)
    member_chunks = []
    for qv, lab, k in zip(q.queries, labels, ks):
        comp = extract_kcore(base, lab, k, qv)
        if comp.size == 0:
            return MbccResult(status="infeasible",
                              reason=f"core-infeasible:{g.label_names[lab]}",
                              ks=ks)
        member_chunks.append(comp)
    ws = WorkingSubgraph(g, members=np.concatenate(member_chunks))

    # Bipartite views only for label pairs with at least one live cross edge.
    pairs: dict[tuple[int, int], _PairState] = {}
    for i in range(m):
        for j in range(i + 1, m):
            view = build_view(g, labels[i], labels[j], members=ws.alive)
            if view.cross_edge_count > 0:
                pairs[(i, j)] = _PairState(view=view, interacting=False)

    gig = GroupInteractionGraph(m=m)
    use_fast = q.algorithm in ("lp", "l2p")
    for key, ps in pairs.items():
        ps.interacting = _pair_interaction(ps, ws.alive, q.b, counters)
        gig.set_edge(*key, ps.interacting)
        if use_fast and ps.interacting:
            st = ps.last_state
            i, j = key
            vl, _ = identify_leader(ws, labels[i], q.queries[i], q.rho, q.b, st.chi)
            vr, _ = identify_leader(ws, labels[j], q.queries[j], q.rho, q.b, st.chi)
            ps.pair = LeaderPair(v_l=vl, v_r=vr,
                                 chi_l=int(st.chi[vl]), chi_r=int(st.chi[vr]))
    if not check_group_connectivity(gig):
        return MbccResult(status="infeasible", reason="group-connectivity", ks=ks)

    incs = [IncrementalDistance(g, ws, qv) for qv in q.queries]

    snapshots: list[tuple[int, int, np.ndarray]] = []
    iterations = 0
    while True:
        if any(incs[0].dist[qv] == UNREACHABLE for qv in q.queries):
            break
        stranded = set().union(*(inc.unreachable for inc in incs))
        if stranded:
            batch = sorted(stranded)
        else:
            m_all = max(inc.max_finite() for inc in incs)
            snapshots.append((m_all, iterations, np.packbits(ws.alive)))
            attain = set().union(*(inc.at(m_all) for inc in incs))
            batch = sorted(attain - set(q.queries))
            if not batch:
                break
        iterations += 1

        chi_alive = ws.alive.copy() if use_fast else None
        killed = ws.kill(batch)
        removed_all = set(killed)
        for lab in labels:
            seed = [v for v in killed if g.label_of[v] == lab]
            if seed:
                cascade = maintain_kcore(ws, lab, ks[lab_index[lab]], seed)
                removed_all |= set(cascade)
        removed_sorted = sorted(removed_all)
        touched_labels = {int(g.label_of[v]) for v in removed_sorted}

        if any(not ws.alive[qv] for qv in q.queries):
            break

        for key, ps in pairs.items():
            i, j = key
            dirty = labels[i] in touched_labels or labels[j] in touched_labels
            if not dirty or not ps.interacting:
                continue   # degrees only fall under deletion: lost edges stay lost
            if use_fast and ps.pair is not None:
                pair = ps.pair
                replay_alive = chi_alive.copy()
                for v in removed_sorted:
                    if g.label_of[v] not in (labels[i], labels[j]):
                        continue
                    for side in ("l", "r"):
                        p = pair.v_l if side == "l" else pair.v_r
                        if p == v or not replay_alive[p]:
                            continue
                        old = pair.chi_l if side == "l" else pair.chi_r
                        new = update_leader_chi(ps.view, replay_alive, p, v, old, g.label_of)
                        if side == "l":
                            pair.chi_l = new
                        else:
                            pair.chi_r = new
                    replay_alive[v] = False
                healthy = (ws.alive[pair.v_l] and ws.alive[pair.v_r]
                           and pair.chi_l >= q.b and pair.chi_r >= q.b)
                if healthy:
                    continue
            ps.interacting = _pair_interaction(ps, ws.alive, q.b, counters)
            gig.set_edge(*key, ps.interacting)
            if use_fast and ps.interacting:
                st = ps.last_state
                vl, _ = identify_leader(ws, labels[i], q.queries[i], q.rho, q.b, st.chi)
                vr, _ = identify_leader(ws, labels[j], q.queries[j], q.rho, q.b, st.chi)
                ps.pair = LeaderPair(v_l=vl, v_r=vr,
                                     chi_l=int(st.chi[vl]), chi_r=int(st.chi[vr]))
        if not check_group_connectivity(gig):
            break

        for inc in incs:
            if use_fast:
                inc.fast_update(ws, removed_sorted)
            else:
                inc.rebuild(ws)

    if not snapshots:
        return MbccResult(status="infeasible", reason="no-feasible-candidate", ks=ks,
                          butterfly_count_calls=counters["butterfly_count_calls"])
    best_dist = min(s[0] for s in snapshots)
    _, _, bitmap = max((s for s in snapshots if s[0] == best_dist), key=lambda s: s[1])
    return _assemble(g, q, labels, ks, pairs, bitmap, best_dist, iterations, counters)


def _assemble(g, q, labels, ks, pairs, bitmap, best_dist, iterations, counters) -> MbccResult:
    alive = np.unpackbits(bitmap, count=g.n).astype(bool)
    ws = WorkingSubgraph(g, members=np.flatnonzero(alive))
    members = ws.alive_vertices()
    groups = {
        g.label_names[lab]: [int(v) for v in members if g.label_of[v] == lab]
        for lab in labels
    }
    leader_pairs = {}
    for (i, j), ps in sorted(pairs.items()):
        state = count_butterflies(ps.view, alive)
        la = ps.view.left[alive[ps.view.left]]
        ra = ps.view.right[alive[ps.view.right]]
        if la.size == 0 or ra.size == 0:
            continue
        max_l = int(state.chi[la].max())
        max_r = int(state.chi[ra].max())
        if max_l >= q.b and max_r >= q.b:
            va = int(la[np.argmax(state.chi[la])])
            vb = int(ra[np.argmax(state.chi[ra])])
            key = (g.label_names[labels[i]], g.label_names[labels[j]])
            leader_pairs[key] = (va, vb, int(state.chi[va]), int(state.chi[vb]))

    diam = 0
    for v in members:
        dv = bfs_distances(ws, int(v))[members]
        diam = max(diam, int(dv.max()))

    return MbccResult(
        status="found",
        vertices=[int(v) for v in members],
        groups=groups,
        leader_pairs=leader_pairs,
        query_distance=int(best_dist),
        diameter=diam,
        iterations=iterations,
        ks=ks,
        butterfly_count_calls=counters["butterfly_count_calls"],
    )


def _local_candidate(g: LabeledGraph, q: MbccQuery, labels: list[int]) -> np.ndarray:
    """Candidate mask for the local mode: union of index-weighted paths from
    the first query to each other one, expanded by per-label coreness
    thresholds up to the size budget."""
    from .local import build_bcindex, weighted_shortest_path

    label_set = set(labels)
    allowed = np.isin(g.label_of, list(label_set))
    seeds: set[int] = set(q.queries)
    for qv in q.queries[1:]:
        try:
            idx = build_bcindex(g, labels[0], int(g.label_of[qv]))
            wp = weighted_shortest_path(idx, g, q.queries[0], qv, q.gamma1, q.gamma2)
            seeds.update(wp.vertices)
        except DisconnectedError:
            # No route inside the pair's two labels; fall back to a plain
            # path over all query labels (cross-group connectivity).
            from .graph import bfs_from_set
            dist = bfs_from_set(g, np.ones(g.n, dtype=bool),
                                np.array([q.queries[0]], dtype=np.int64),
                                allowed=allowed)
            if dist[qv] == UNREACHABLE:
                continue
            cur = qv
            while cur != q.queries[0]:
                seeds.add(int(cur))
                nbrs = g.neighbors(cur)
                nbrs = nbrs[allowed[nbrs]]
                cur = int(nbrs[np.argmin(dist[nbrs])])
            seeds.add(q.queries[0])

    # Per-label admission thresholds from the seed set.
    coreness = {lab: core_decompose(g, restrict_label=lab).coreness for lab in labels}
    k_of = {}
    for lab in labels:
        vals = [int(coreness[lab][v]) for v in seeds if g.label_of[v] == lab]
        k_of[lab] = min(vals) if vals else 0
    admissible = np.zeros(g.n, dtype=bool)
    for lab in labels:
        admissible |= (g.label_of == lab) & (coreness[lab] >= k_of[lab])

    admitted = np.zeros(g.n, dtype=bool)
    seed_arr = np.array(sorted(seeds), dtype=np.int64)
    admitted[seed_arr] = True
    count = seed_arr.size
    frontier = seed_arr
    from .graph import _gather_neighbors
    while frontier.size and count < q.eta:
        nbrs = np.unique(_gather_neighbors(g, frontier))
        layer = nbrs[admissible[nbrs] & ~admitted[nbrs]]
        if layer.size == 0:
            break
        admitted[layer] = True
        count += layer.size
        frontier = layer
    return admitted
