"""Labeled graph loading, deletion overlays and BFS distance machinery.

The graph is immutable after load and stored in CSR form (``indptr`` /
``indices``) so that per-vertex state lives in flat numpy arrays.  External
vertex ids from the input files are remapped to dense 0..n-1 ids; the remap
table is kept for output.  All mutation during a query happens on a
:class:`WorkingSubgraph` overlay that only flips alive flags and degree
counters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Sentinel for "no path".  Never participates in arithmetic; every comparison
# against it is explicit.
UNREACHABLE = np.iinfo(np.int64).max


class GraphFormatError(ValueError):
    """Raised for malformed edge/label input (reports the offending line)."""


class DisconnectedError(RuntimeError):
    """Raised when an operation requires connectivity that does not hold."""


@dataclass
class LabeledGraph:
    """Simple undirected graph with exactly one label per vertex.

    Invariants: no self-loops, no duplicate edges, symmetric adjacency and
    neighbor lists sorted ascending by vertex id.
    """

    n: int
    indptr: np.ndarray          # int64, len n+1
    indices: np.ndarray         # int64, concatenated sorted neighbor lists
    label_of: np.ndarray        # int64, len n
    label_names: list[str]      # label id -> display string
    ext_ids: np.ndarray         # dense id -> external id
    duplicate_edges: int = 0    # collapsed duplicates seen at load time
    ext_to_int: dict = field(default_factory=dict, repr=False)

    @property
    def num_edges(self) -> int:
        return int(self.indices.size) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def label_id(self, name: str) -> int:
        try:
            return self.label_names.index(name)
        except ValueError:
            raise KeyError(f"unknown label {name!r}") from None

    def vertices_with_label(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.label_of == label)

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return i < nb.size and nb[i] == v


def _build_csr(n: int, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Build sorted CSR adjacency from a deduplicated (m, 2) edge array."""
    if edges.size == 0:
        return np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    both = np.concatenate([edges, edges[:, ::-1]])
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, both[:, 1].astype(np.int64)


def from_edges(
    edges: Iterable[tuple[int, int]],
    labels: Sequence[str] | dict[int, str],
    *,
    n: int | None = None,
) -> LabeledGraph:
    """Construct a graph from in-memory edges and per-vertex label strings.

    ``labels`` maps already-dense vertex ids to label strings; vertices are
    0..n-1.  Self-loops are rejected, duplicate edges collapsed.  Used by
    tests and the synthetic-graph generator; file input goes through
    :func:`load_graph`.
    """
    if isinstance(labels, dict):
        n_eff = n if n is not None else (max(labels) + 1 if labels else 0)
        lab_list = [labels[v] for v in range(n_eff)]
    else:
        lab_list = list(labels)
        n_eff = n if n is not None else len(lab_list)
    if len(lab_list) != n_eff:
        raise GraphFormatError("labels must cover every vertex exactly once")

    seen = set()
    dup = 0
    for u, v in edges:
        if u == v:
            raise GraphFormatError(f"self-loop at vertex {u}")
        if not (0 <= u < n_eff and 0 <= v < n_eff):
            raise GraphFormatError(f"edge ({u}, {v}) references unknown vertex")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            dup += 1
        else:
            seen.add(key)
    edge_arr = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
    indptr, indices = _build_csr(n_eff, edge_arr)

    names: list[str] = []
    name_to_id: dict[str, int] = {}
    label_of = np.empty(n_eff, dtype=np.int64)
    for v, name in enumerate(lab_list):
        if name not in name_to_id:
            name_to_id[name] = len(names)
            names.append(name)
        label_of[v] = name_to_id[name]

    ext = np.arange(n_eff, dtype=np.int64)
    return LabeledGraph(
        n=n_eff, indptr=indptr, indices=indices, label_of=label_of,
        label_names=names, ext_ids=ext, duplicate_edges=dup,
        ext_to_int={int(v): int(v) for v in range(n_eff)},
    )


def load_graph(
    edge_lines: Iterable[str],
    label_lines: Iterable[str],
    *,
    strict: bool = False,
) -> LabeledGraph:
    """Load a graph from edge and label line streams.

    Edge file: two whitespace-separated non-negative integer ids per line,
    ``#`` lines ignored.  Label file: ``<id> <label-string>`` per line.  The
    label file defines the vertex universe; an edge endpoint missing from it
    is an error.  With ``strict`` on, a labeled vertex that never occurs in
    the edge file is also an error; otherwise it is loaded as isolated.
    """
    ext_label: dict[int, str] = {}
    for ln, raw in enumerate(label_lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"label line {ln}: expected '<id> <label>', got {line!r}")
        try:
            ext = int(parts[0])
        except ValueError:
            raise GraphFormatError(f"label line {ln}: bad vertex id {parts[0]!r}") from None
        if ext < 0:
            raise GraphFormatError(f"label line {ln}: negative vertex id {ext}")
        if ext in ext_label:
            raise GraphFormatError(f"label line {ln}: duplicate label for vertex {ext}")
        ext_label[ext] = parts[1]

    raw_edges: list[tuple[int, int]] = []
    touched: set[int] = set()
    for ln, raw in enumerate(edge_lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"edge line {ln}: expected two ids, got {line!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"edge line {ln}: non-integer id in {line!r}") from None
        if a < 0 or b < 0:
            raise GraphFormatError(f"edge line {ln}: negative vertex id")
        if a == b:
            raise GraphFormatError(f"edge line {ln}: self-loop at vertex {a}")
        for x in (a, b):
            if x not in ext_label:
                raise GraphFormatError(f"edge line {ln}: vertex {x} missing from label file")
        raw_edges.append((a, b))
        touched.add(a)
        touched.add(b)

    if strict:
        isolated = sorted(set(ext_label) - touched)
        if isolated:
            raise GraphFormatError(f"label file references vertices absent from edge file: {isolated[:5]}")

    # Dense remap in ascending external-id order keeps output deterministic.
    ext_sorted = sorted(ext_label)
    ext_to_int = {e: i for i, e in enumerate(ext_sorted)}
    n = len(ext_sorted)

    seen: set[tuple[int, int]] = set()
    dup = 0
    for a, b in raw_edges:
        u, v = ext_to_int[a], ext_to_int[b]
        key = (u, v) if u < v else (v, u)
        if key in seen:
            dup += 1
        else:
            seen.add(key)
    edge_arr = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
    indptr, indices = _build_csr(n, edge_arr)

    names: list[str] = []
    name_to_id: dict[str, int] = {}
    label_of = np.empty(n, dtype=np.int64)
    for e in ext_sorted:
        name = ext_label[e]
        if name not in name_to_id:
            name_to_id[name] = len(names)
            names.append(name)
        label_of[ext_to_int[e]] = name_to_id[name]

    return LabeledGraph(
        n=n, indptr=indptr, indices=indices, label_of=label_of,
        label_names=names, ext_ids=np.array(ext_sorted, dtype=np.int64),
        duplicate_edges=dup, ext_to_int=ext_to_int,
    )


def save_graph(g: LabeledGraph, edge_path, label_path) -> None:
    """Write canonical edge/label files (u < v per edge, ascending order)."""
    with open(edge_path, "w", encoding="utf-8") as f:
        for u in range(g.n):
            eu = g.ext_ids[u]
            for v in g.neighbors(u):
                if u < v:
                    f.write(f"{eu} {g.ext_ids[v]}\n")
    with open(label_path, "w", encoding="utf-8") as f:
        for v in range(g.n):
            f.write(f"{g.ext_ids[v]} {g.label_names[g.label_of[v]]}\n")


class WorkingSubgraph:
    """Deletion-only overlay on a LabeledGraph, owned by a single query.

    Tracks per-vertex alive flags plus live degrees (all neighbors and
    same-label neighbors).  Deletions are idempotent and never undone within
    a query.
    """

    def __init__(self, base: LabeledGraph, members: np.ndarray | None = None):
        self.base = base
        self.alive = np.zeros(base.n, dtype=bool)
        if members is None:
            self.alive[:] = True
        else:
            self.alive[np.asarray(members, dtype=np.int64)] = True
        self.live_degree = np.zeros(base.n, dtype=np.int64)
        self.live_same_degree = np.zeros(base.n, dtype=np.int64)
        self._recompute_degrees()

    def _recompute_degrees(self) -> None:
        g = self.base
        self.live_degree[:] = 0
        self.live_same_degree[:] = 0
        for v in np.flatnonzero(self.alive):
            nb = g.neighbors(v)
            live = nb[self.alive[nb]]
            self.live_degree[v] = live.size
            self.live_same_degree[v] = int(np.count_nonzero(g.label_of[live] == g.label_of[v]))

    def copy(self) -> "WorkingSubgraph":
        other = WorkingSubgraph.__new__(WorkingSubgraph)
        other.base = self.base
        other.alive = self.alive.copy()
        other.live_degree = self.live_degree.copy()
        other.live_same_degree = self.live_same_degree.copy()
        return other

    @property
    def alive_count(self) -> int:
        return int(np.count_nonzero(self.alive))

    def alive_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.alive)

    def is_alive(self, v: int) -> bool:
        return bool(self.alive[v])

    def live_neighbors(self, v: int) -> np.ndarray:
        nb = self.base.neighbors(v)
        return nb[self.alive[nb]]

    def kill(self, vertices) -> list[int]:
        """Mark vertices dead, updating degree counters.  Returns the subset
        that was actually alive (idempotence)."""
        killed = []
        g = self.base
        for v in np.atleast_1d(np.asarray(vertices, dtype=np.int64)):
            v = int(v)
            if not self.alive[v]:
                continue
            self.alive[v] = False
            killed.append(v)
            nb = g.neighbors(v)
            live = nb[self.alive[nb]]
            self.live_degree[live] -= 1
            same = live[g.label_of[live] == g.label_of[v]]
            self.live_same_degree[same] -= 1
            self.live_degree[v] = 0
            self.live_same_degree[v] = 0
        return killed

    def check_degrees(self) -> bool:
        """Debug invariant: counters match a from-scratch recompute."""
        g = self.base
        for v in np.flatnonzero(self.alive):
            nb = g.neighbors(v)
            live = nb[self.alive[nb]]
            if self.live_degree[v] != live.size:
                return False
            if self.live_same_degree[v] != int(np.count_nonzero(g.label_of[live] == g.label_of[v])):
                return False
        return True


def _gather_neighbors(g: LabeledGraph, frontier: np.ndarray) -> np.ndarray:
    """All neighbors of the frontier vertices, concatenated (vectorized)."""
    starts = g.indptr[frontier]
    counts = g.indptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    # Flat index trick: for each frontier vertex expand its CSR slice.
    rep_starts = np.repeat(starts, counts)
    offs = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    return g.indices[rep_starts + offs]


def bfs_from_set(
    g: LabeledGraph,
    alive: np.ndarray,
    sources: np.ndarray,
    base_dist: int = 0,
    allowed: np.ndarray | None = None,
) -> np.ndarray:
    """Multi-source BFS over alive vertices; returns int64 distances with
    UNREACHABLE defaults.  ``allowed`` optionally restricts traversal to a
    vertex mask (sources must satisfy it)."""
    dist = np.full(g.n, UNREACHABLE, dtype=np.int64)
    frontier = np.asarray(sources, dtype=np.int64)
    if frontier.size == 0:
        return dist
    dist[frontier] = base_dist
    d = base_dist
    while frontier.size:
        nbrs = _gather_neighbors(g, frontier)
        if nbrs.size == 0:
            break
        mask = alive[nbrs] & (dist[nbrs] == UNREACHABLE)
        if allowed is not None:
            mask &= allowed[nbrs]
        nxt = np.unique(nbrs[mask])
        if nxt.size == 0:
            break
        d += 1
        dist[nxt] = d
        frontier = nxt
    return dist


def bfs_distances(ws: WorkingSubgraph, source: int) -> np.ndarray:
    """Exact hop distances from ``source`` over alive vertices."""
    if not (0 <= source < ws.base.n):
        raise ValueError(f"source {source} out of range")
    if not ws.alive[source]:
        raise ValueError(f"source {source} is deleted")
    return bfs_from_set(ws.base, ws.alive, np.array([source], dtype=np.int64))


def query_distance(
    ws: WorkingSubgraph,
    dmaps: Sequence[np.ndarray],
    query_vertices: Sequence[int],
) -> tuple[int, np.ndarray]:
    """Maximum distance from any alive vertex to its farthest query vertex,
    together with the full set of vertices attaining it (bulk deletion
    works on that whole set).

    Raises DisconnectedError if the query vertices are not mutually
    reachable.
    """
    for dm in dmaps:
        for q in query_vertices:
            if dm[q] == UNREACHABLE:
                raise DisconnectedError("query vertices are mutually unreachable")
    alive_idx = ws.alive_vertices()
    combined = np.full(alive_idx.size, 0, dtype=np.int64)
    for dm in dmaps:
        combined = np.maximum(combined, dm[alive_idx])
    m = int(combined.max())
    argmax = alive_idx[combined == m]
    return m, argmax


def diameter(ws: WorkingSubgraph) -> int:
    """Exact diameter over alive vertices (BFS from each vertex; desk scale
    only).  Raises DisconnectedError when the live graph is disconnected."""
    alive_idx = ws.alive_vertices()
    if alive_idx.size == 0:
        raise DisconnectedError("empty graph has no diameter")
    best = 0
    for v in alive_idx:
        dist = bfs_distances(ws, int(v))
        dv = dist[alive_idx]
        if np.any(dv == UNREACHABLE):
            raise DisconnectedError("graph is disconnected")
        best = max(best, int(dv.max()))
    return best
