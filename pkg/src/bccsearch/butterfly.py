"""Cross-label bipartite view and exact per-vertex butterfly counting.

A butterfly is a 2x2 biclique across the two label sides.  Counting follows
the wedge scheme: for every vertex v, tally 2-hop paths into a per-source
map P, then chi(v) = sum over w != v of C(P[w], 2).  Same-label edges never
enter the view, so 2-hop neighbors are automatically on v's own side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import LabeledGraph

# chi values stay far below int64 territory at desk scale, but C(x,2) is
# checked anyway: a count that would overflow indicates a counting bug.
_CHI_LIMIT = np.iinfo(np.int64).max // 4


class ButterflyOverflowError(OverflowError):
    pass


@dataclass
class BipartiteView:
    """Static cross-edge adjacency between two label groups.

    Liveness is supplied per call: the view itself never mutates, so one
    view serves a whole query while the alive mask shrinks.
    """

    label_left: int
    label_right: int
    left: np.ndarray            # vertex ids with label_left
    right: np.ndarray           # vertex ids with label_right
    indptr: np.ndarray          # CSR over all of g.n, cross edges only
    indices: np.ndarray

    def cross_neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def cross_neighbors_alive(self, v: int, alive: np.ndarray) -> np.ndarray:
        nb = self.cross_neighbors(v)
        return nb[alive[nb]]

    @property
    def cross_edge_count(self) -> int:
        return int(self.indices.size) // 2


def build_view(
    g: LabeledGraph,
    label_left: int,
    label_right: int,
    members: np.ndarray | None = None,
) -> BipartiteView:
    """Cross-label adjacency restricted to ``members`` (mask) if given."""
    in_l = g.label_of == label_left
    in_r = g.label_of == label_right
    if members is not None:
        in_l &= members
        in_r &= members
    indptr = np.zeros(g.n + 1, dtype=np.int64)
    chunks = []
    for v in range(g.n):
        if in_l[v]:
            nb = g.neighbors(v)
            keep = nb[in_r[nb]]
        elif in_r[v]:
            nb = g.neighbors(v)
            keep = nb[in_l[nb]]
        else:
            keep = np.empty(0, dtype=np.int64)
        chunks.append(keep)
        indptr[v + 1] = indptr[v] + keep.size
    indices = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    return BipartiteView(
        label_left=label_left, label_right=label_right,
        left=np.flatnonzero(in_l), right=np.flatnonzero(in_r),
        indptr=indptr, indices=indices.astype(np.int64),
    )


@dataclass
class ButterflyState:
    chi: np.ndarray      # int64 per vertex (0 outside the view)
    max_left: int
    max_right: int


def _chi_of(view: BipartiteView, alive: np.ndarray, v: int) -> int:
    nb = view.cross_neighbors_alive(v, alive)
    if nb.size < 1:
        return 0
    two_hop = np.concatenate([view.cross_neighbors(int(u)) for u in nb])
    two_hop = two_hop[alive[two_hop]]
    vals, counts = np.unique(two_hop, return_counts=True)
    counts = counts[vals != v]
    if counts.size and counts.max() > 3_000_000_000:
        raise ButterflyOverflowError("common-neighbor count too large")
    return int((counts * (counts - 1) // 2).sum())


def count_butterflies(view: BipartiteView, alive: np.ndarray) -> ButterflyState:
    """Exact butterfly degree for every alive vertex in the view."""
    chi = np.zeros(alive.size, dtype=np.int64)
    max_l = 0
    for v in view.left:
        if alive[v]:
            c = _chi_of(view, alive, int(v))
            chi[v] = c
            if c > max_l:
                max_l = c
    max_r = 0
    for v in view.right:
        if alive[v]:
            c = _chi_of(view, alive, int(v))
            chi[v] = c
            if c > max_r:
                max_r = c
    return ButterflyState(chi=chi, max_left=max_l, max_right=max_r)


def total_butterflies(state: ButterflyState) -> int:
    """Total butterfly count: each butterfly contributes 4 to sum(chi)."""
    s = int(state.chi.sum())
    if s % 4 != 0:
        raise AssertionError(f"sum of butterfly degrees {s} not divisible by 4")
    return s // 4


def common_cross_neighbors(
    view: BipartiteView, alive: np.ndarray, u: int, v: int
) -> np.ndarray:
    """Alive common cross-neighbors of two same-side vertices (sorted)."""
    a = view.cross_neighbors_alive(u, alive)
    b = view.cross_neighbors_alive(v, alive)
    return np.intersect1d(a, b, assume_unique=True)
