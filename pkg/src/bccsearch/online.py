"""Greedy butterfly-core community search.

The search first materializes the maximal feasible candidate around the two
query vertices (per-label connected k-cores plus their cross edges), then
repeatedly deletes the whole batch of vertices farthest from the queries,
re-establishing the core and butterfly conditions after every batch.  Among
all feasible intermediate graphs, the one with the smallest query distance
is returned; its diameter is at most twice the optimum.

Two execution modes share the loop: the baseline recounts butterfly degrees
and recomputes all distances every iteration, while the accelerated mode
patches distances incrementally and maintains only the two cached leader
degrees, recounting solely when a leader is invalidated.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .butterfly import BipartiteView, ButterflyState, build_view, count_butterflies
from .core import core_decompose, extract_kcore, maintain_kcore
from .fastlp import IncrementalDistance, LeaderPair, identify_leader, update_leader_chi
from .graph import UNREACHABLE, LabeledGraph, WorkingSubgraph, bfs_distances

_DEBUG_VALIDATE = os.environ.get("BCC_DEBUG_VALIDATE", "") not in ("", "0")

AUTO = None

CONTINUED = "continued"
STOP_DISCONNECTED = "stopped:queries-disconnected"
STOP_NOTHING_TO_DELETE = "stopped:only-queries-attain-max"
STOP_QUERY_DIED = "stopped:query-vertex-removed"
STOP_BUTTERFLY = "stopped:butterfly-condition-failed"


class InfeasibleError(RuntimeError):
    """No community satisfies the query; ``reason`` is a stable code."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class BccQuery:
    ql: int
    qr: int
    k1: int | None = AUTO
    k2: int | None = AUTO
    b: int = 1
    algorithm: str = "online"       # online | lp | l2p
    gamma1: float = 0.5
    gamma2: float = 0.5
    eta: int = 1000
    rho: int = 3
    single_delete: bool = False     # test hook: one vertex per iteration

    def validate(self, g: LabeledGraph) -> None:
        for q in (self.ql, self.qr):
            if not (0 <= q < g.n):
                raise ValueError(f"query vertex {q} out of range")
        if self.ql == self.qr:
            raise ValueError("query vertices must differ")
        if g.label_of[self.ql] == g.label_of[self.qr]:
            raise ValueError("query vertices must carry distinct labels")
        if self.b < 1:
            raise ValueError("butterfly threshold b must be >= 1")
        if self.algorithm not in ("online", "lp", "l2p"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


@dataclass
class BccResult:
    status: str                      # found | infeasible
    reason: str = ""
    vertices: list[int] = field(default_factory=list)
    left_group: list[int] = field(default_factory=list)
    right_group: list[int] = field(default_factory=list)
    leader_left: int = -1
    leader_right: int = -1
    leader_chi: tuple[int, int] = (0, 0)
    query_distance: int = -1
    diameter: int = -1
    iterations: int = 0
    k1: int = 0
    k2: int = 0
    butterfly_count_calls: int = 0

    @property
    def found(self) -> bool:
        return self.status == "found"


def resolve_core_params(g: LabeledGraph, q: BccQuery) -> tuple[int, int]:
    """AUTO parameters are the query vertices' coreness within their own
    label-induced subgraphs."""
    k1, k2 = q.k1, q.k2
    if k1 is AUTO:
        idx = core_decompose(g, restrict_label=int(g.label_of[q.ql]))
        k1 = int(idx.coreness[q.ql])
    if k2 is AUTO:
        idx = core_decompose(g, restrict_label=int(g.label_of[q.qr]))
        k2 = int(idx.coreness[q.qr])
    return k1, k2


@dataclass
class CandidateGraph:
    """The maximal feasible starting graph plus its bipartite cross view."""

    ws: WorkingSubgraph
    view: BipartiteView
    state: ButterflyState
    k1: int
    k2: int


def find_g0(
    g: LabeledGraph,
    q: BccQuery,
    k1: int,
    k2: int,
    within: np.ndarray | None = None,
    counters: dict | None = None,
) -> CandidateGraph:
    """Build the union of the two connected per-label k-cores around the
    queries plus their cross edges; raise InfeasibleError when either core
    loses its query vertex or a side has no vertex in b butterflies."""
    label_l = int(g.label_of[q.ql])
    label_r = int(g.label_of[q.qr])
    base_ws = WorkingSubgraph(g, members=np.flatnonzero(within) if within is not None else None)
    left = extract_kcore(base_ws, label_l, k1, q.ql)
    if left.size == 0:
        raise InfeasibleError("core-infeasible:left")
    right = extract_kcore(base_ws, label_r, k2, q.qr)
    if right.size == 0:
        raise InfeasibleError("core-infeasible:right")
    members = np.concatenate([left, right])
    ws = WorkingSubgraph(g, members=members)
    view = build_view(g, label_l, label_r, members=ws.alive)
    state = count_butterflies(view, ws.alive)
    if counters is not None:
        counters["butterfly_count_calls"] = counters.get("butterfly_count_calls", 0) + 1
    if state.max_left < q.b:
        raise InfeasibleError("butterfly-infeasible:left")
    if state.max_right < q.b:
        raise InfeasibleError("butterfly-infeasible:right")
    return CandidateGraph(ws=ws, view=view, state=state, k1=k1, k2=k2)


@dataclass
class ShrinkContext:
    """Per-query mutable state threaded through the deletion loop."""

    g: LabeledGraph
    q: BccQuery
    ws: WorkingSubgraph
    view: BipartiteView
    state: ButterflyState
    k1: int
    k2: int
    inc_l: IncrementalDistance
    inc_r: IncrementalDistance
    use_fast: bool
    counters: dict
    pair: LeaderPair | None = None


def _identify_pair(ctx: ShrinkContext) -> LeaderPair:
    g, q = ctx.g, ctx.q
    vl, bpl = identify_leader(ctx.ws, int(g.label_of[q.ql]), q.ql, q.rho, q.b, ctx.state.chi)
    vr, _ = identify_leader(ctx.ws, int(g.label_of[q.qr]), q.qr, q.rho, q.b, ctx.state.chi)
    return LeaderPair(v_l=vl, v_r=vr,
                      chi_l=int(ctx.state.chi[vl]), chi_r=int(ctx.state.chi[vr]),
                      b_p=bpl)


def revalidate_pair(ctx: ShrinkContext) -> str:
    """After a deletion batch, confirm the cached leaders still certify the
    cross-group condition; re-identify (one fresh count refreshes the side
    maxima) when a leader died or dropped below b.  Returns ok /
    reidentified / infeasible."""
    pair = ctx.pair
    assert pair is not None
    q = ctx.q
    need_l = (not ctx.ws.alive[pair.v_l]) or pair.chi_l < q.b
    need_r = (not ctx.ws.alive[pair.v_r]) or pair.chi_r < q.b
    if not (need_l or need_r):
        return "ok"
    ctx.state = count_butterflies(ctx.view, ctx.ws.alive)
    ctx.counters["butterfly_count_calls"] += 1
    if ctx.state.max_left < q.b or ctx.state.max_right < q.b:
        return "infeasible"
    ctx.pair = _identify_pair(ctx)
    return "reidentified"


def maintain_bcc(ctx: ShrinkContext, killed: list[int]) -> tuple[bool, list[int]]:
    """Re-establish community validity after ``killed`` were marked dead:
    cascade each side's core, then restore the butterfly certificate (full
    recount in baseline mode, leader updates otherwise).  Returns the
    validity verdict and the complete removed set."""
    g, q, ws = ctx.g, ctx.q, ctx.ws
    label_l = int(g.label_of[q.ql])
    label_r = int(g.label_of[q.qr])
    chi_alive = ws.alive.copy() if ctx.use_fast else None
    for v in killed:
        if ctx.use_fast:
            chi_alive[v] = True   # killed flags flip during the chi replay
    removed_left = [v for v in killed if g.label_of[v] == label_l]
    removed_right = [v for v in killed if g.label_of[v] == label_r]
    cascade_l = maintain_kcore(ws, label_l, ctx.k1, removed_left) if removed_left else []
    cascade_r = maintain_kcore(ws, label_r, ctx.k2, removed_right) if removed_right else []
    removed_all = sorted(set(killed) | set(cascade_l) | set(cascade_r))

    if not (ws.alive[q.ql] and ws.alive[q.qr]):
        return False, removed_all

    if ctx.use_fast:
        pair = ctx.pair
        assert pair is not None
        for v in removed_all:
            for side in ("l", "r"):
                p = pair.v_l if side == "l" else pair.v_r
                if p == v or not chi_alive[p]:
                    continue
                old = pair.chi_l if side == "l" else pair.chi_r
                new = update_leader_chi(ctx.view, chi_alive, p, v, old, g.label_of)
                if side == "l":
                    pair.chi_l = new
                else:
                    pair.chi_r = new
            chi_alive[v] = False
        return revalidate_pair(ctx) != "infeasible", removed_all

    ctx.state = count_butterflies(ctx.view, ws.alive)
    ctx.counters["butterfly_count_calls"] += 1
    ok = ctx.state.max_left >= q.b and ctx.state.max_right >= q.b
    return ok, removed_all


def bulk_delete_step(ctx: ShrinkContext) -> str:
    """One iteration of the shrink loop: remove the whole farthest batch
    (never the queries), cascade maintenance, refresh distances.  Returns
    CONTINUED or a stop code."""
    q = ctx.q
    if ctx.inc_l.dist[q.qr] == UNREACHABLE:
        return STOP_DISCONNECTED
    stranded = ctx.inc_l.unreachable | ctx.inc_r.unreachable
    if stranded:
        batch = sorted(stranded)
    else:
        m_all = max(ctx.inc_l.max_finite(), ctx.inc_r.max_finite())
        batch = sorted((ctx.inc_l.at(m_all) | ctx.inc_r.at(m_all)) - {q.ql, q.qr})
        if not batch:
            return STOP_NOTHING_TO_DELETE
        if q.single_delete:
            batch = batch[:1]
    killed = ctx.ws.kill(batch)
    ok, removed_all = maintain_bcc(ctx, killed)
    if not (ctx.ws.alive[q.ql] and ctx.ws.alive[q.qr]):
        return STOP_QUERY_DIED
    if not ok:
        return STOP_BUTTERFLY
    if ctx.use_fast:
        ctx.inc_l.fast_update(ctx.ws, removed_all)
        ctx.inc_r.fast_update(ctx.ws, removed_all)
    else:
        ctx.inc_l.rebuild(ctx.ws)
        ctx.inc_r.rebuild(ctx.ws)
    return CONTINUED


def _pack(alive: np.ndarray) -> np.ndarray:
    return np.packbits(alive)


def _unpack(packed: np.ndarray, n: int) -> np.ndarray:
    return np.unpackbits(packed, count=n).astype(bool)


def _assert_intermediate_valid(ctx: ShrinkContext) -> None:
    """Debug hook: every feasible intermediate graph must itself satisfy the
    community conditions (enabled via BCC_DEBUG_VALIDATE)."""
    g, ws, q = ctx.g, ctx.ws, ctx.q
    assert ws.alive[q.ql] and ws.alive[q.qr]
    assert ws.check_degrees()
    lab = g.label_of
    for v in ws.alive_vertices():
        k = ctx.k1 if lab[v] == lab[q.ql] else ctx.k2
        assert ws.live_same_degree[v] >= k, f"vertex {v} under-degree"
    st = count_butterflies(ctx.view, ws.alive)
    assert st.max_left >= q.b and st.max_right >= q.b
    if ctx.use_fast and ctx.pair is not None:
        assert st.chi[ctx.pair.v_l] == ctx.pair.chi_l
        assert st.chi[ctx.pair.v_r] == ctx.pair.chi_r


def _greedy_shrink(
    g: LabeledGraph,
    q: BccQuery,
    cand: CandidateGraph,
    use_fast: bool,
    counters: dict,
) -> BccResult:
    """Shared deletion loop; ``use_fast`` switches on the incremental
    distance and leader-pair strategies."""
    ctx = ShrinkContext(
        g=g, q=q, ws=cand.ws, view=cand.view, state=cand.state,
        k1=cand.k1, k2=cand.k2,
        inc_l=IncrementalDistance(g, cand.ws, q.ql),
        inc_r=IncrementalDistance(g, cand.ws, q.qr),
        use_fast=use_fast, counters=counters,
    )
    if use_fast:
        ctx.pair = _identify_pair(ctx)

    snapshots: list[tuple[int, int, np.ndarray]] = []   # (distance, iteration, bitmap)
    iterations = 0
    while True:
        if ctx.inc_l.dist[q.qr] != UNREACHABLE and not (ctx.inc_l.unreachable | ctx.inc_r.unreachable):
            m_all = max(ctx.inc_l.max_finite(), ctx.inc_r.max_finite())
            snapshots.append((m_all, iterations, _pack(ctx.ws.alive)))
        outcome = bulk_delete_step(ctx)
        if outcome in (CONTINUED, STOP_QUERY_DIED, STOP_BUTTERFLY):
            iterations += 1   # a deletion was attempted
        if outcome != CONTINUED:
            break
        if _DEBUG_VALIDATE and not (ctx.inc_l.unreachable | ctx.inc_r.unreachable):
            _assert_intermediate_valid(ctx)

    if not snapshots:
        raise InfeasibleError("no-feasible-candidate")
    best_dist = min(s[0] for s in snapshots)
    _, _, bitmap = max((s for s in snapshots if s[0] == best_dist), key=lambda s: s[1])
    return _assemble_result(g, q, cand.view, bitmap, best_dist, iterations,
                            cand.k1, cand.k2, counters)


def _assemble_result(
    g: LabeledGraph,
    q: BccQuery,
    view: BipartiteView,
    bitmap: np.ndarray,
    best_dist: int,
    iterations: int,
    k1: int,
    k2: int,
    counters: dict,
) -> BccResult:
    alive = _unpack(bitmap, g.n)
    ws = WorkingSubgraph(g, members=np.flatnonzero(alive))
    label_l = int(g.label_of[q.ql])
    members = ws.alive_vertices()
    left = [int(v) for v in members if g.label_of[v] == label_l]
    right = [int(v) for v in members if g.label_of[v] != label_l]
    # Leaders reported from a fresh count over the returned subgraph: the
    # certificate must hold in the answer itself, whatever mode produced it.
    state = count_butterflies(view, alive)
    left_arr = np.array(left, dtype=np.int64)
    right_arr = np.array(right, dtype=np.int64)
    vl = int(left_arr[np.argmax(state.chi[left_arr])])
    vr = int(right_arr[np.argmax(state.chi[right_arr])])

    diam = 0
    for v in members:
        dv = bfs_distances(ws, int(v))[members]
        diam = max(diam, int(dv.max()))

    return BccResult(
        status="found",
        vertices=[int(v) for v in members],
        left_group=left,
        right_group=right,
        leader_left=vl,
        leader_right=vr,
        leader_chi=(int(state.chi[vl]), int(state.chi[vr])),
        query_distance=int(best_dist),
        diameter=diam,
        iterations=iterations,
        k1=k1,
        k2=k2,
        butterfly_count_calls=counters.get("butterfly_count_calls", 0),
    )


def _search(g: LabeledGraph, q: BccQuery, use_fast: bool) -> BccResult:
    q.validate(g)
    k1, k2 = resolve_core_params(g, q)
    counters = {"butterfly_count_calls": 0}
    try:
        cand = find_g0(g, q, k1, k2, counters=counters)
        return _greedy_shrink(g, q, cand, use_fast, counters)
    except InfeasibleError as exc:
        return BccResult(status="infeasible", reason=exc.reason, k1=k1, k2=k2,
                         butterfly_count_calls=counters["butterfly_count_calls"])


def online_search(g: LabeledGraph, q: BccQuery) -> BccResult:
    """Baseline search: full recounts and full BFS every iteration."""
    return _search(g, q, use_fast=False)


def lp_search(g: LabeledGraph, q: BccQuery) -> BccResult:
    """Accelerated search: incremental distances plus cached leader pair."""
    return _search(g, q, use_fast=True)
