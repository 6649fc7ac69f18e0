"""Precomputed coreness/butterfly index and the local two-phase search.

The index stores, for one label pair, every vertex's coreness inside its own
label group and its butterfly degree over the whole cross-label view, plus
the two maxima.  The local search extracts a path between the queries that
trades hop length against coreness and butterfly shortfall, grows a bounded
candidate subgraph around it, and runs the accelerated shrink loop inside
that candidate only.
"""

from __future__ import annotations

import struct
import zlib
from collections import deque
from dataclasses import dataclass

import numpy as np

from .butterfly import build_view, count_butterflies
from .core import UNDEFINED, core_decompose, extract_kcore
from .graph import (
    UNREACHABLE, DisconnectedError, LabeledGraph, WorkingSubgraph,
    _gather_neighbors,
)
from .online import BccQuery, BccResult, InfeasibleError, _greedy_shrink, find_g0

_MAGIC = b"BCIX"
_VERSION = 1


class IndexFormatError(ValueError):
    pass


@dataclass
class BCIndex:
    label_left: str
    label_right: str
    coreness: np.ndarray    # int32, UNDEFINED outside the two labels
    chi: np.ndarray         # int64 over the full cross view
    delta_max: int
    chi_max: int

    def matches(self, g: LabeledGraph, label_l: str, label_r: str) -> bool:
        return (self.coreness.size == g.n
                and {self.label_left, self.label_right} == {label_l, label_r})


def build_bcindex(g: LabeledGraph, label_l: int, label_r: int) -> BCIndex:
    """Coreness per label group plus butterfly degrees over the full
    cross-label view between the two groups."""
    if label_l == label_r:
        raise ValueError("index requires two distinct labels")
    for lab in (label_l, label_r):
        if not (0 <= lab < len(g.label_names)) or g.vertices_with_label(lab).size == 0:
            raise ValueError(f"label id {lab} names no vertices")
    core_l = core_decompose(g, restrict_label=label_l)
    core_r = core_decompose(g, restrict_label=label_r)
    coreness = np.where(core_l.coreness != UNDEFINED, core_l.coreness, core_r.coreness)
    view = build_view(g, label_l, label_r)
    state = count_butterflies(view, np.ones(g.n, dtype=bool))
    delta_max = int(coreness.max()) if coreness.size else 0
    chi_max = int(state.chi.max()) if state.chi.size else 0
    return BCIndex(
        label_left=g.label_names[label_l],
        label_right=g.label_names[label_r],
        coreness=coreness.astype(np.int32),
        chi=state.chi.astype(np.int64),
        delta_max=max(delta_max, 0),
        chi_max=chi_max,
    )


def save_bcindex(idx: BCIndex, path) -> None:
    """Versioned little-endian layout with a trailing checksum."""
    lb = idx.label_left.encode("utf-8")
    rb = idx.label_right.encode("utf-8")
    payload = struct.pack("<IH", _VERSION, len(lb)) + lb
    payload += struct.pack("<H", len(rb)) + rb
    payload += struct.pack("<Q", idx.coreness.size)
    payload += idx.coreness.astype("<i4").tobytes()
    payload += idx.chi.astype("<i8").tobytes()
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    with open(path, "wb") as f:
        f.write(_MAGIC + payload + struct.pack("<I", crc))


def load_bcindex(path) -> BCIndex:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 12 or blob[:4] != _MAGIC:
        raise IndexFormatError("not an index file")
    payload, (crc,) = blob[4:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise IndexFormatError("index checksum mismatch")
    off = 0
    version, llen = struct.unpack_from("<IH", payload, off)
    off += 6
    if version != _VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    label_l = payload[off:off + llen].decode("utf-8")
    off += llen
    (rlen,) = struct.unpack_from("<H", payload, off)
    off += 2
    label_r = payload[off:off + rlen].decode("utf-8")
    off += rlen
    (n,) = struct.unpack_from("<Q", payload, off)
    off += 8
    coreness = np.frombuffer(payload, dtype="<i4", count=n, offset=off).astype(np.int32)
    off += 4 * n
    chi = np.frombuffer(payload, dtype="<i8", count=n, offset=off).astype(np.int64)
    delta_max = int(coreness.max()) if n else 0
    chi_max = int(chi.max()) if n else 0
    return BCIndex(label_left=label_l, label_right=label_r,
                   coreness=coreness, chi=chi,
                   delta_max=max(delta_max, 0), chi_max=chi_max)


@dataclass
class WeightedPath:
    vertices: list[int]
    hop_length: int
    min_core_on_path: int
    min_chi_on_path: int
    total_weight: float


# Above this many distinct butterfly-degree values, fall back to power-of-two
# levels (each candidate path is still scored by its exact minima).
_MAX_EXACT_CHI_LEVELS = 48


def _chi_levels(values: np.ndarray, cap: int) -> list[int]:
    distinct = sorted({int(x) for x in values if x <= cap})
    if 0 not in distinct:
        distinct.insert(0, 0)
    if len(distinct) <= _MAX_EXACT_CHI_LEVELS:
        return distinct
    levels = {0}
    p = 1
    while p <= cap:
        levels.add(p)
        p *= 2
    return sorted(levels)


def _bfs_path(g: LabeledGraph, allowed: np.ndarray, src: int, dst: int) -> list[int] | None:
    """Hop-shortest src->dst path inside the allowed mask (parents picked in
    ascending-id discovery order, so the path is deterministic)."""
    if not (allowed[src] and allowed[dst]):
        return None
    parent = np.full(g.n, -1, dtype=np.int64)
    dist = np.full(g.n, UNREACHABLE, dtype=np.int64)
    dist[src] = 0
    frontier = np.array([src], dtype=np.int64)
    while frontier.size and dist[dst] == UNREACHABLE:
        nbrs = _gather_neighbors(g, frontier)
        src_rep = np.repeat(frontier, g.indptr[frontier + 1] - g.indptr[frontier])
        mask = allowed[nbrs] & (dist[nbrs] == UNREACHABLE)
        nbrs, src_rep = nbrs[mask], src_rep[mask]
        if nbrs.size == 0:
            return None
        order = np.lexsort((src_rep, nbrs))
        nbrs, src_rep = nbrs[order], src_rep[order]
        first = np.ones(nbrs.size, dtype=bool)
        first[1:] = nbrs[1:] != nbrs[:-1]
        nxt, par = nbrs[first], src_rep[first]
        dist[nxt] = dist[frontier[0]] + 1
        parent[nxt] = par
        frontier = nxt
    if dist[dst] == UNREACHABLE:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(int(parent[path[-1]]))
    path.reverse()
    return path


def weighted_shortest_path(
    idx: BCIndex,
    g: LabeledGraph,
    ql: int,
    qr: int,
    gamma1: float = 0.5,
    gamma2: float = 0.5,
) -> WeightedPath:
    """Minimum-weight path between the queries, where weight is hop count
    plus penalties for the smallest coreness and butterfly degree on the
    path (shortfall from the graph maxima).

    The weight is not edge-additive, so the search enumerates (coreness,
    butterfly) threshold pairs, BFS-restricts the graph to vertices clearing
    both, and scores each candidate path by its exact minima.  Enumerating
    every distinct value pair below the query vertices' own statures makes
    this exact; overly rich degree value ranges drop to power-of-two levels.
    """
    delta = idx.coreness
    chi = idx.chi
    dq = int(min(delta[ql], delta[qr]))
    cq = int(min(chi[ql], chi[qr]))
    if dq < 0:
        raise ValueError("query vertices must carry the indexed label pair")

    core_levels = sorted({int(x) for x in np.unique(delta[delta >= 0]) if x <= dq},
                         reverse=True)
    chi_levels = sorted(_chi_levels(chi[delta >= 0], cq), reverse=True)

    # No restricted subgraph can beat this: the plain shortest path with both
    # minima at the query vertices' own values.
    base_allowed = delta >= 0
    base_path = _bfs_path(g, base_allowed, ql, qr)
    if base_path is None:
        raise DisconnectedError("query vertices disconnected within the label pair")
    d0 = len(base_path) - 1
    weight_floor = d0 + gamma1 * (idx.delta_max - dq) + gamma2 * (idx.chi_max - cq)

    best: WeightedPath | None = None
    for c in core_levels:
        for x in chi_levels:
            allowed = (delta >= c) & (chi >= x)
            path = _bfs_path(g, allowed, ql, qr)
            if path is None:
                continue
            arr = np.array(path, dtype=np.int64)
            mind = int(delta[arr].min())
            minc = int(chi[arr].min())
            w = (len(path) - 1) + gamma1 * (idx.delta_max - mind) + gamma2 * (idx.chi_max - minc)
            if best is None or w < best.total_weight:
                best = WeightedPath(
                    vertices=[int(v) for v in path],
                    hop_length=len(path) - 1,
                    min_core_on_path=mind,
                    min_chi_on_path=minc,
                    total_weight=w,
                )
            if best is not None and best.total_weight <= weight_floor:
                return best
    assert best is not None   # the base pair (min level, 0) always connects
    return best


def local_expand(
    idx: BCIndex, g: LabeledGraph, path: WeightedPath, eta: int
) -> WorkingSubgraph:
    """Grow the path into a candidate subgraph: a FIFO sweep in BFS order
    (layer by layer, ascending id inside a layer) admits adjacent vertices
    whose coreness clears the path's per-side minimum, stopping once the
    admitted count reaches ``eta``."""
    if not path.vertices:
        raise ValueError("cannot expand an empty path")
    label_l = g.label_id(idx.label_left)
    label_r = g.label_id(idx.label_right)
    seeds = np.array(sorted(set(path.vertices)), dtype=np.int64)
    on_left = g.label_of[seeds] == label_l
    k_l = int(idx.coreness[seeds[on_left]].min()) if on_left.any() else 0
    k_r = int(idx.coreness[seeds[~on_left]].min()) if (~on_left).any() else 0
    admissible = (((g.label_of == label_l) & (idx.coreness >= k_l))
                  | ((g.label_of == label_r) & (idx.coreness >= k_r)))

    admitted = np.zeros(g.n, dtype=bool)
    admitted[seeds] = True
    count = seeds.size
    queue = deque(int(v) for v in seeds)
    while queue and count < eta:
        v = queue.popleft()
        for u in g.neighbors(v):
            u = int(u)
            if admitted[u] or not admissible[u]:
                continue
            admitted[u] = True
            count += 1
            queue.append(u)
            if count >= eta:
                break
    return WorkingSubgraph(g, members=np.flatnonzero(admitted))


def _largest_feasible_k(ws: WorkingSubgraph, label: int, q: int) -> int:
    """Binary search for the largest k whose connected k-core inside the
    candidate still contains the query vertex."""
    hi = int(ws.live_same_degree[ws.alive_vertices()].max()) if ws.alive_count else 0
    lo = 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if extract_kcore(ws, label, mid, q).size:
            lo = mid
        else:
            hi = mid - 1
    return lo


def l2p_search(g: LabeledGraph, idx: BCIndex, q: BccQuery) -> BccResult:
    """Index-guided local search: weighted path, bounded expansion, then the
    accelerated shrink loop confined to the candidate subgraph.  Sacrifices
    the approximation guarantee for locality."""
    q.validate(g)
    counters = {"butterfly_count_calls": 0}
    label_l = int(g.label_of[q.ql])
    label_r = int(g.label_of[q.qr])
    if not idx.matches(g, g.label_names[label_l], g.label_names[label_r]):
        raise ValueError("index was built for a different graph or label pair")
    try:
        path = weighted_shortest_path(idx, g, q.ql, q.qr, q.gamma1, q.gamma2)
    except DisconnectedError:
        return BccResult(status="infeasible", reason="path-disconnected")
    ws_t = local_expand(idx, g, path, q.eta)

    k1 = q.k1 if q.k1 is not None else _largest_feasible_k(ws_t, label_l, q.ql)
    k2 = q.k2 if q.k2 is not None else _largest_feasible_k(ws_t, label_r, q.qr)
    try:
        cand = find_g0(g, q, k1, k2, within=ws_t.alive, counters=counters)
        return _greedy_shrink(g, q, cand, use_fast=True, counters=counters)
    except InfeasibleError as exc:
        return BccResult(
            status="infeasible",
            reason=f"{exc.reason}:local (retry with larger --eta or --algorithm lp)",
            k1=k1, k2=k2,
            butterfly_count_calls=counters["butterfly_count_calls"],
        )
