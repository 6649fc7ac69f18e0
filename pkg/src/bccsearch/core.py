"""k-core decomposition, connected k-core extraction and deletion-time
maintenance over label-induced live subgraphs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .graph import LabeledGraph, WorkingSubgraph, bfs_from_set, UNREACHABLE

# Coreness of vertices outside the label restriction.  Distinct from 0 so a
# threshold test can never accidentally admit an off-label vertex.
UNDEFINED = -1


@dataclass
class CoreIndex:
    coreness: np.ndarray   # int64, UNDEFINED outside the restriction
    k_max: int


def core_decompose(
    g: LabeledGraph,
    restrict_label: int | None = None,
    alive: np.ndarray | None = None,
) -> CoreIndex:
    """Exact coreness via linear-time bucket peeling.

    Restricted to a label-induced (and optionally alive-masked) subgraph when
    requested; excluded vertices get UNDEFINED coreness.
    """
    member = np.ones(g.n, dtype=bool) if alive is None else alive.copy()
    if restrict_label is not None:
        member &= g.label_of == restrict_label
    verts = np.flatnonzero(member)
    coreness = np.full(g.n, UNDEFINED, dtype=np.int64)
    if verts.size == 0:
        return CoreIndex(coreness=coreness, k_max=0)

    deg = np.zeros(g.n, dtype=np.int64)
    for v in verts:
        nb = g.neighbors(v)
        deg[v] = int(np.count_nonzero(member[nb]))

    # Batagelj-Zaversnik: vertices sorted by degree with bin pointers, each
    # removal decrements still-unprocessed neighbors in place.
    max_deg = int(deg[verts].max()) if verts.size else 0
    bin_count = np.bincount(deg[verts], minlength=max_deg + 1)
    bin_start = np.zeros(max_deg + 2, dtype=np.int64)
    np.cumsum(bin_count, out=bin_start[1:])
    pos = np.empty(g.n, dtype=np.int64)
    order = np.empty(verts.size, dtype=np.int64)
    fill = bin_start[:-1].copy()
    for v in verts:
        p = fill[deg[v]]
        order[p] = v
        pos[v] = p
        fill[deg[v]] += 1

    bin_ptr = bin_start[:-1].copy()
    cur_deg = deg.copy()
    k = 0
    for i in range(order.size):
        v = order[i]
        k = max(k, int(cur_deg[v]))
        coreness[v] = k
        for u in g.neighbors(v):
            if not member[u] or coreness[u] != UNDEFINED:
                continue
            du = cur_deg[u]
            if du > cur_deg[v]:
                # Swap u with the first vertex of its bin, then shrink bin.
                pu = pos[u]
                pw = bin_ptr[du]
                w = order[pw]
                if u != w:
                    order[pu], order[pw] = w, u
                    pos[u], pos[w] = pw, pu
                bin_ptr[du] += 1
                cur_deg[u] = du - 1
    return CoreIndex(coreness=coreness, k_max=k)


def _peel_to_kcore(g: LabeledGraph, member: np.ndarray, k: int) -> np.ndarray:
    """Iteratively drop member vertices whose member-degree is below k.
    Returns the surviving mask (members untouched -> copy)."""
    keep = member.copy()
    verts = np.flatnonzero(keep)
    if verts.size == 0:
        return keep
    deg = np.zeros(g.n, dtype=np.int64)
    for v in verts:
        deg[v] = int(np.count_nonzero(keep[g.neighbors(v)]))
    queue = deque(int(v) for v in verts if deg[v] < k)
    while queue:
        v = queue.popleft()
        if not keep[v]:
            continue
        keep[v] = False
        for u in g.neighbors(v):
            if keep[u]:
                deg[u] -= 1
                if deg[u] < k:
                    queue.append(int(u))
    return keep


def extract_kcore(ws: WorkingSubgraph, label: int, k: int, seed: int) -> np.ndarray:
    """Vertices of the connected component containing ``seed`` inside the
    k-core of the label-induced live subgraph; empty when the seed peels
    away."""
    g = ws.base
    if g.label_of[seed] != label:
        raise ValueError(f"seed {seed} does not carry label {g.label_names[label]}")
    member = ws.alive & (g.label_of == label)
    keep = _peel_to_kcore(g, member, k)
    if not keep[seed]:
        return np.empty(0, dtype=np.int64)
    dist = bfs_from_set(g, keep, np.array([seed], dtype=np.int64))
    comp = np.flatnonzero(keep & (dist != UNREACHABLE))
    return comp


def maintain_kcore(ws: WorkingSubgraph, label: int, k: int, removed) -> list[int]:
    """Cascade deletions after ``removed`` (already marked dead) so the
    label group is again a k-core (or empty).  Returns the full cascade
    including ``removed``.

    Amortized over a whole query this touches each edge O(1) times: a vertex
    enters the FIFO only when its live same-label degree drops below k and it
    never resurrects.
    """
    g = ws.base
    cascade = [int(v) for v in np.atleast_1d(np.asarray(removed, dtype=np.int64))]
    # Seed from live same-label neighbors of the removed set that fell under k.
    queue: deque[int] = deque()
    seen_in_queue = set()
    for v in cascade:
        for u in g.neighbors(v):
            u = int(u)
            if ws.alive[u] and g.label_of[u] == label and ws.live_same_degree[u] < k:
                if u not in seen_in_queue:
                    queue.append(u)
                    seen_in_queue.add(u)
    while queue:
        u = queue.popleft()
        if not ws.alive[u] or ws.live_same_degree[u] >= k:
            continue
        ws.kill([u])
        cascade.append(u)
        for w in g.neighbors(u):
            w = int(w)
            if ws.alive[w] and g.label_of[w] == label and ws.live_same_degree[w] < k:
                queue.append(w)
    return cascade
