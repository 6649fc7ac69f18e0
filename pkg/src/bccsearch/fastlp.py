"""Accelerations for the greedy shrink loop: partial query-distance updates
after deletions, leader-vertex identification, and incremental butterfly
degree updates for the cached leaders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .butterfly import BipartiteView, common_cross_neighbors
from .graph import (
    UNREACHABLE, LabeledGraph, WorkingSubgraph, _gather_neighbors, bfs_from_set,
)


class IncrementalDistance:
    """Hop distances from one query vertex plus a distance-bucket index.

    Buckets (distance -> vertex set) make the farthest batch, the update
    seeds and the update candidates all derivable by direct lookup.  Alive
    vertices that lost every path are tracked separately and count as
    farthest-of-all for deletion purposes.
    """

    def __init__(self, g: LabeledGraph, ws: WorkingSubgraph, source: int):
        self.g = g
        self.source = source
        self.dist = np.full(g.n, UNREACHABLE, dtype=np.int64)
        self.buckets: list[set[int]] = []
        self.unreachable: set[int] = set()
        self.rebuild(ws)

    # -- index maintenance -------------------------------------------------

    def rebuild(self, ws: WorkingSubgraph) -> None:
        """Full BFS recompute (also the slow path used by the baseline)."""
        self.dist = bfs_from_set(self.g, ws.alive, np.array([self.source], dtype=np.int64))
        self.buckets = []
        self.unreachable = set()
        for v in ws.alive_vertices():
            d = self.dist[v]
            if d == UNREACHABLE:
                self.unreachable.add(int(v))
            else:
                self._bucket_add(int(v), int(d))

    def _bucket_add(self, v: int, d: int) -> None:
        while len(self.buckets) <= d:
            self.buckets.append(set())
        self.buckets[d].add(v)

    def _bucket_remove(self, v: int, d: int) -> None:
        if d == UNREACHABLE:
            self.unreachable.discard(v)
        else:
            self.buckets[d].discard(v)

    def drop_dead(self, removed) -> None:
        for v in removed:
            self._bucket_remove(int(v), int(self.dist[v]))

    def max_finite(self) -> int:
        for d in range(len(self.buckets) - 1, -1, -1):
            if self.buckets[d]:
                return d
        return 0

    def at(self, d: int) -> set[int]:
        return self.buckets[d] if d < len(self.buckets) else set()

    # -- the partial update ------------------------------------------------

    def fast_update(self, ws: WorkingSubgraph, removed) -> np.ndarray:
        """Recompute exactly the distances that a deletion batch can change.

        Distances at or below the nearest removed vertex are provably
        unchanged, so a BFS seeded from that whole distance shell refreshes
        the rest; survivors the shell no longer reaches become unreachable.
        Returns the ids whose stored distance changed.
        """
        removed = [int(v) for v in removed]
        if not removed:
            return np.empty(0, dtype=np.int64)
        d_min = min(int(self.dist[v]) for v in removed)
        self.drop_dead(removed)
        for v in removed:
            self.dist[v] = UNREACHABLE
        if d_min == UNREACHABLE:
            # Every removed vertex was already unreachable: nothing to do.
            return np.empty(0, dtype=np.int64)

        g = self.g
        eligible = ws.alive & (self.dist > d_min)
        candidates = np.flatnonzero(eligible)
        if candidates.size == 0:
            return np.empty(0, dtype=np.int64)
        seeds = np.array(sorted(self.at(d_min)), dtype=np.int64)
        visited = np.zeros(g.n, dtype=bool)
        frontier = seeds
        d = d_min
        changed: list[int] = []
        while frontier.size:
            nbrs = _gather_neighbors(g, frontier)
            if nbrs.size == 0:
                break
            mask = eligible[nbrs] & ~visited[nbrs]
            nxt = np.unique(nbrs[mask])
            if nxt.size == 0:
                break
            d += 1
            visited[nxt] = True
            for v in nxt:
                v = int(v)
                old = int(self.dist[v])
                if old != d:
                    self._bucket_remove(v, old)
                    self.dist[v] = d
                    self._bucket_add(v, d)
                    changed.append(v)
            frontier = nxt
        # Candidates the shell never reached have lost every path.
        for v in candidates[~visited[candidates]]:
            v = int(v)
            old = int(self.dist[v])
            if old != UNREACHABLE:
                self._bucket_remove(v, old)
                self.dist[v] = UNREACHABLE
                self.unreachable.add(v)
                changed.append(v)
        return np.array(sorted(changed), dtype=np.int64)


@dataclass
class LeaderPair:
    """Cached certificate vertices for the cross-group condition, one per
    side, with their incrementally maintained butterfly degrees."""

    v_l: int
    v_r: int
    chi_l: int
    chi_r: int
    b_p: int = 0   # promotion threshold in effect when the pair was found


def _threshold_levels(b_max: int, b: int) -> list[int]:
    """Halving thresholds from b_max/2 down to exactly b (integer ceiling)."""
    levels: list[int] = []
    c = -(-b_max // 2)
    while c > b:
        levels.append(c)
        c = -(-c // 2)
    levels.append(b)
    return levels


def group_hop_layers(
    g: LabeledGraph, ws: WorkingSubgraph, label: int, q: int, rho: int
) -> list[np.ndarray]:
    """Hop layers 1..rho around q inside the live same-label subgraph."""
    allowed = g.label_of == label
    dist = bfs_from_set(g, ws.alive, np.array([q], dtype=np.int64), allowed=allowed)
    layers = []
    for d in range(1, rho + 1):
        layers.append(np.flatnonzero((dist == d) & ws.alive))
    return layers


def identify_leader(
    ws: WorkingSubgraph,
    label: int,
    q: int,
    rho: int,
    b: int,
    chi: np.ndarray,
) -> tuple[int, int]:
    """Find a high-butterfly-degree vertex near q on one side.

    Returns q immediately when its own degree clears half the side maximum;
    otherwise scans hop layers 1..rho under halving thresholds, returning the
    first (smallest-id) vertex that qualifies, and falls back to q.  The
    second return value is the threshold in effect at the return.
    """
    g = ws.base
    side = np.flatnonzero(ws.alive & (g.label_of == label))
    b_max = int(chi[side].max()) if side.size else 0
    half = -(-b_max // 2)
    if 2 * int(chi[q]) > b_max:
        return q, half
    layers = group_hop_layers(g, ws, label, q, rho)
    for b_p in _threshold_levels(b_max, b):
        for layer in layers:
            if layer.size == 0:
                continue
            qual = layer[chi[layer] >= b_p]
            if qual.size:
                return int(qual[0]), b_p
    return q, b


def update_leader_chi(
    view: BipartiteView,
    alive: np.ndarray,
    p: int,
    v: int,
    chi_p: int,
    label_of: np.ndarray,
) -> int:
    """Butterfly degree of leader p after deleting v, from p's old degree.

    Same side: the lost butterflies pair up two common cross-neighbors.
    Opposite side: only an actual neighbor shares butterflies; each of v's
    other neighbors u contributes its common neighbors with p minus v
    itself.  ``alive`` must still show v alive (the deletion is about to
    happen); when a batch dies, process it one vertex at a time, flipping
    each flag after its update.
    """
    if p == v:
        raise ValueError("leader cannot be its own deletion victim")
    if label_of[p] == label_of[v]:
        alpha = common_cross_neighbors(view, alive, v, p).size
        new = chi_p - alpha * (alpha - 1) // 2
    else:
        pn = view.cross_neighbors_alive(p, alive)
        i = np.searchsorted(pn, v)
        if not (i < pn.size and pn[i] == v):
            return chi_p
        beta = 0
        for u in view.cross_neighbors_alive(v, alive):
            u = int(u)
            if u == p:
                continue
            beta += common_cross_neighbors(view, alive, u, p).size - 1
        new = chi_p - beta
    if new < 0:
        raise AssertionError(f"butterfly degree of {p} went negative ({new})")
    return new
