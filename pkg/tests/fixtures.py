"""Shared graph fixtures, including the two hand-built worked-example graphs
whose distances and butterfly degrees are pinned by the module tests."""

from __future__ import annotations

from bccsearch.graph import LabeledGraph, from_edges

# ---------------------------------------------------------------------------
# Two-group fixture with a 2x4 cross biclique.  Name -> id:
#   left  (label "L"):  ql=0, v1=1, v2=2, v3=3
#   right (label "R"):  qr=4, u1=5, u2=6, u3=7, u4=8, u5=9, u6=10, u7=11, u9=12
#
# BFS from ql:  {v1,v2,v3}@1  {u2,u3,u5,u6}@2  {qr,u1,u4,u7}@3  {u9}@4
# BFS from qr:  {u1,u2,u3,u9}@1  {v1,v3,u4,u5,u7}@2  {ql,v2,u6}@3
# After deleting u9, u4 and u7 move from 2 to 3 (from qr); nothing else moves.
# Butterfly degrees: chi(v1)=chi(v3)=6, chi(u2)=chi(u3)=chi(u5)=chi(u6)=3.
# ---------------------------------------------------------------------------

TWO_GROUP_NAMES = {
    "ql": 0, "v1": 1, "v2": 2, "v3": 3,
    "qr": 4, "u1": 5, "u2": 6, "u3": 7, "u4": 8,
    "u5": 9, "u6": 10, "u7": 11, "u9": 12,
}

TWO_GROUP_EDGES = [
    # left group (K4)
    (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3),
    # right group
    (4, 5), (4, 6), (4, 7), (4, 12), (5, 9), (8, 12), (11, 12), (8, 9), (9, 11),
    # cross edges: {v1,v3} x {u2,u3,u5,u6}
    (1, 6), (1, 7), (1, 9), (1, 10), (3, 6), (3, 7), (3, 9), (3, 10),
]

TWO_GROUP_LABELS = ["L"] * 4 + ["R"] * 9


def two_group_fixture() -> tuple[LabeledGraph, dict[str, int]]:
    g = from_edges(TWO_GROUP_EDGES, TWO_GROUP_LABELS)
    return g, dict(TWO_GROUP_NAMES)


# ---------------------------------------------------------------------------
# Three-label fixture whose (4, 3, 1) community is the dense ten-vertex
# subgraph around the queries.  Name -> id:
#   "SE":  ql=0, v1..v5 = 1..5 (4-regular core: K6 minus a perfect matching),
#          v6..v10 = 6..10 (a pendant chain off v5)
#   "UI":  qr=11, u1..u3 = 12..14 (K4), u4..u7 = 15..18 (chain off u3)
#   "PM":  z1=19 (attached to v1 and u1)
# Cross biclique {ql, v5} x {qr, u3} supplies the single butterfly; the stray
# cross edge v7-u5 sits outside both cores.
# ---------------------------------------------------------------------------

THREE_LABEL_NAMES = {
    "ql": 0, "v1": 1, "v2": 2, "v3": 3, "v4": 4, "v5": 5,
    "v6": 6, "v7": 7, "v8": 8, "v9": 9, "v10": 10,
    "qr": 11, "u1": 12, "u2": 13, "u3": 14,
    "u4": 15, "u5": 16, "u6": 17, "u7": 18,
    "z1": 19,
}


def _k6_minus_matching():
    skip = {(0, 3), (1, 4), (2, 5)}
    edges = []
    for i in range(6):
        for j in range(i + 1, 6):
            if (i, j) not in skip:
                edges.append((i, j))
    return edges


THREE_LABEL_EDGES = (
    _k6_minus_matching()
    + [(5, 6), (6, 7), (7, 8), (8, 9), (9, 10)]            # SE chain
    + [(11, 12), (11, 13), (11, 14), (12, 13), (12, 14), (13, 14)]  # UI K4
    + [(14, 15), (15, 16), (16, 17), (17, 18)]             # UI chain
    + [(0, 11), (0, 14), (5, 11), (5, 14)]                 # cross biclique
    + [(7, 16)]                                            # stray cross edge
    + [(19, 1), (19, 12)]                                  # PM attachments
)

THREE_LABEL_LABELS = ["SE"] * 11 + ["UI"] * 8 + ["PM"]

# The ten vertices of the expected (4, 3, 1) community.
THREE_LABEL_COMMUNITY = {0, 1, 2, 3, 4, 5, 11, 12, 13, 14}


def three_label_fixture() -> tuple[LabeledGraph, dict[str, int]]:
    g = from_edges(THREE_LABEL_EDGES, THREE_LABEL_LABELS)
    return g, dict(THREE_LABEL_NAMES)


# ---------------------------------------------------------------------------
# Seeded random labeled graphs for property tests.
# ---------------------------------------------------------------------------

def random_labeled_graph(rng, n, p, n_labels=2) -> LabeledGraph:
    """Erdos-Renyi graph with uniform labels (at least one vertex per label
    when n allows)."""
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v))
    labels = [f"T{rng.integers(n_labels)}" for _ in range(n)]
    for i in range(min(n_labels, n)):
        labels[i] = f"T{i}"
    return from_edges(edges, labels, n=n)


def random_bipartite(rng, nl, nr, p):
    """Random cross-edge bipartite instance as (left ids, right ids, edges)."""
    left = list(range(nl))
    right = list(range(nl, nl + nr))
    edges = []
    for u in left:
        for v in right:
            if rng.random() < p:
                edges.append((u, v))
    return left, right, edges


def edge_list(g: LabeledGraph) -> list[tuple[int, int]]:
    out = []
    for u in range(g.n):
        for v in g.neighbors(u):
            if u < v:
                out.append((u, int(v)))
    return out
