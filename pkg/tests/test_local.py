import numpy as np
import pytest

from bccsearch.graph import DisconnectedError, from_edges
from bccsearch.local import (
    IndexFormatError, build_bcindex, l2p_search, load_bcindex,
    local_expand, save_bcindex, weighted_shortest_path,
)
from bccsearch.online import BccQuery, lp_search

from fixtures import (
    three_label_fixture, THREE_LABEL_COMMUNITY, two_group_fixture,
    random_labeled_graph, edge_list,
)
from oracles import all_simple_paths_min_weight, naive_coreness


def test_bcindex_disjoint_cliques():
    edges = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    edges += [(i, j) for i in range(4, 9) for j in range(i + 1, 9)]
    g = from_edges(edges, ["A"] * 4 + ["B"] * 5)
    idx = build_bcindex(g, g.label_id("A"), g.label_id("B"))
    assert np.all(idx.chi == 0)
    assert list(idx.coreness[:4]) == [3] * 4
    assert list(idx.coreness[4:]) == [4] * 5
    assert idx.delta_max == 4 and idx.chi_max == 0


def test_bcindex_two_group_fixture():
    g, ids = two_group_fixture()
    idx = build_bcindex(g, g.label_id("L"), g.label_id("R"))
    assert idx.chi[ids["v1"]] == 6
    assert idx.chi[ids["u5"]] == 3
    oracle_l = naive_coreness(g.n, [(u, v) for u, v in edge_list(g)
                                    if g.label_of[u] == g.label_of[v] == g.label_id("L")],
                              set(g.vertices_with_label(g.label_id("L")).tolist()))
    for v, c in oracle_l.items():
        assert idx.coreness[v] == c
    assert idx.chi_max == 6


def test_bcindex_requires_populated_labels():
    g = from_edges([(0, 1)], ["A", "A"])
    with pytest.raises((ValueError, KeyError)):
        build_bcindex(g, 0, g.label_id("B") if "B" in g.label_names else 1)


def test_bcindex_roundtrip(tmp_path):
    g, _ = two_group_fixture()
    idx = build_bcindex(g, g.label_id("L"), g.label_id("R"))
    p = tmp_path / "g.bcindex"
    save_bcindex(idx, p)
    loaded = load_bcindex(p)
    assert loaded.label_left == idx.label_left
    assert loaded.label_right == idx.label_right
    assert np.array_equal(loaded.coreness, idx.coreness)
    assert np.array_equal(loaded.chi, idx.chi)
    assert loaded.delta_max == idx.delta_max and loaded.chi_max == idx.chi_max
    # byte-identical on re-save
    p2 = tmp_path / "again.bcindex"
    save_bcindex(loaded, p2)
    assert p.read_bytes() == p2.read_bytes()


def test_bcindex_checksum_detects_corruption(tmp_path):
    g, _ = two_group_fixture()
    idx = build_bcindex(g, g.label_id("L"), g.label_id("R"))
    p = tmp_path / "g.bcindex"
    save_bcindex(idx, p)
    blob = bytearray(p.read_bytes())
    blob[10] ^= 0xFF
    p.write_bytes(bytes(blob))
    with pytest.raises(IndexFormatError):
        load_bcindex(p)


def test_weighted_path_zero_penalty_is_bfs():
    g, ids = two_group_fixture()
    idx = build_bcindex(g, g.label_id("L"), g.label_id("R"))
    wp = weighted_shortest_path(idx, g, ids["ql"], ids["qr"], 0.0, 0.0)
    assert wp.hop_length == 3
    assert wp.total_weight == 3.0


def test_weighted_path_unique_path():
    g = from_edges([(0, 1), (1, 2)], ["A", "B", "A"])
    idx = build_bcindex(g, 0, 1)
    wp = weighted_shortest_path(idx, g, 0, 2, 0.7, 0.3)
    assert wp.vertices == [0, 1, 2]


def test_weighted_path_prefers_denser_route():
    # Two routes between the queries: a short one through a low-coreness
    # bridge and a longer one inside the dense cores.  Penalties make the
    # dense route win.
    edges = [(i, j) for i in range(4) for j in range(i + 1, 4)]          # A-clique
    edges += [(i, j) for i in range(4, 8) for j in range(i + 1, 8)]      # B-clique
    edges += [(0, 4), (1, 5), (0, 5), (1, 4)]                            # dense bridge
    edges += [(2, 8), (8, 6)]                                            # thin shortcut
    labels = ["A"] * 4 + ["B"] * 4 + ["B"]
    g = from_edges(edges, labels)
    idx = build_bcindex(g, 0, 1)
    wp_plain = weighted_shortest_path(idx, g, 2, 6, 0.0, 0.0)
    assert wp_plain.hop_length == 2
    wp = weighted_shortest_path(idx, g, 2, 6, 2.0, 0.5)
    assert 8 not in wp.vertices          # the degree-2 relay is penalized away
    assert wp.min_core_on_path >= 3


def test_weighted_path_disconnected():
    g = from_edges([(0, 1), (2, 3)], ["A", "B", "A", "B"])
    idx = build_bcindex(g, 0, 1)
    with pytest.raises(DisconnectedError):
        weighted_shortest_path(idx, g, 0, 3)


def test_weighted_path_equals_exhaustive_minimum():
    rng = np.random.default_rng(97)
    done = 0
    while done < 15:
        g = random_labeled_graph(rng, int(rng.integers(5, 11)), 0.35, n_labels=2)
        la, lb = g.vertices_with_label(0), g.vertices_with_label(1)
        if la.size == 0 or lb.size == 0:
            continue
        ql, qr = int(la[0]), int(lb[0])
        idx = build_bcindex(g, 0, 1)
        oracle = all_simple_paths_min_weight(
            g.n, edge_list(g), ql, qr, g.n, idx.coreness, idx.chi,
            idx.delta_max, idx.chi_max, 0.5, 0.5,
        )
        try:
            wp = weighted_shortest_path(idx, g, ql, qr, 0.5, 0.5)
        except DisconnectedError:
            assert oracle == float("inf")
            done += 1
            continue
        assert wp.total_weight == pytest.approx(oracle)
        done += 1


def _expand_oracle(g, idx, path_vertices, eta, k_l, k_r, label_l, label_r):
    """FIFO queue re-simulation of the expansion rule."""
    from collections import deque
    admitted = set(path_vertices)
    queue = deque(sorted(admitted))
    while queue and len(admitted) < eta:
        v = queue.popleft()
        for u in g.neighbors(v):
            u = int(u)
            if u in admitted:
                continue
            ok = ((g.label_of[u] == label_l and idx.coreness[u] >= k_l)
                  or (g.label_of[u] == label_r and idx.coreness[u] >= k_r))
            if not ok:
                continue
            admitted.add(u)
            queue.append(u)
            if len(admitted) >= eta:
                break
    return admitted


def test_local_expand_eta_large_covers_component():
    g, ids = three_label_fixture()
    idx = build_bcindex(g, g.label_id("SE"), g.label_id("UI"))
    wp = weighted_shortest_path(idx, g, ids["ql"], ids["qr"])
    ws = local_expand(idx, g, wp, eta=1000)
    got = set(int(v) for v in ws.alive_vertices())
    assert got == THREE_LABEL_COMMUNITY  # only core-grade vertices qualify


def test_local_expand_eta_path_only():
    g, ids = two_group_fixture()
    idx = build_bcindex(g, g.label_id("L"), g.label_id("R"))
    wp = weighted_shortest_path(idx, g, ids["ql"], ids["qr"])
    ws = local_expand(idx, g, wp, eta=len(wp.vertices))
    assert set(int(v) for v in ws.alive_vertices()) == set(wp.vertices)


def test_local_expand_matches_oracle_and_bound():
    rng = np.random.default_rng(101)
    for _ in range(12):
        g = random_labeled_graph(rng, 30, 0.15, n_labels=2)
        la, lb = g.vertices_with_label(0), g.vertices_with_label(1)
        if la.size == 0 or lb.size == 0:
            continue
        idx = build_bcindex(g, 0, 1)
        try:
            wp = weighted_shortest_path(idx, g, int(la[0]), int(lb[0]))
        except DisconnectedError:
            continue
        eta = int(rng.integers(len(wp.vertices), 25))
        ws = local_expand(idx, g, wp, eta)
        seeds = sorted(set(wp.vertices))
        on_left = [v for v in seeds if g.label_of[v] == 0]
        on_right = [v for v in seeds if g.label_of[v] == 1]
        k_l = min(idx.coreness[v] for v in on_left) if on_left else 0
        k_r = min(idx.coreness[v] for v in on_right) if on_right else 0
        expected = _expand_oracle(g, idx, set(wp.vertices), eta, k_l, k_r, 0, 1)
        got = set(int(v) for v in ws.alive_vertices())
        assert got == expected
        # never beyond the budget (except when the path itself is larger)
        assert len(got) <= max(eta, len(set(wp.vertices)))


def test_l2p_matches_lp_when_candidate_is_whole_graph():
    g, ids = three_label_fixture()
    idx = build_bcindex(g, g.label_id("SE"), g.label_id("UI"))
    q_l2p = BccQuery(ql=ids["ql"], qr=ids["qr"], algorithm="l2p", eta=10**6)
    res_l2p = l2p_search(g, idx, q_l2p)
    res_lp = lp_search(g, BccQuery(ql=ids["ql"], qr=ids["qr"], algorithm="lp"))
    assert res_l2p.found and res_lp.found
    assert res_l2p.query_distance == res_lp.query_distance
    assert set(res_l2p.vertices) == THREE_LABEL_COMMUNITY


def test_l2p_infeasible_reports_local_hint():
    g, ids = three_label_fixture()
    idx = build_bcindex(g, g.label_id("SE"), g.label_id("UI"))
    q = BccQuery(ql=ids["ql"], qr=ids["qr"], k1=5, k2=3, algorithm="l2p")
    res = l2p_search(g, idx, q)
    assert res.status == "infeasible"
    assert "local" in res.reason and "core-infeasible:left" in res.reason


def test_l2p_misses_global_leaders_outside_candidate():
    # With a tiny budget the candidate holds no butterfly pair even though
    # relaxed cores admit one globally: the locality trade-off surfaces as an
    # infeasible verdict, while the global method succeeds.
    g, ids = two_group_fixture()
    idx = build_bcindex(g, g.label_id("L"), g.label_id("R"))
    q = BccQuery(ql=ids["ql"], qr=ids["qr"], k1=1, k2=1, algorithm="l2p", eta=4)
    res = l2p_search(g, idx, q)
    assert res.status == "infeasible"
    assert "butterfly-infeasible" in res.reason and "local" in res.reason
    glob = lp_search(g, BccQuery(ql=ids["ql"], qr=ids["qr"], k1=1, k2=1, algorithm="lp"))
    assert glob.found


def test_l2p_valid_on_random_instances():
    from oracles import bcc_valid
    rng = np.random.default_rng(103)
    done = 0
    while done < 10:
        g = random_labeled_graph(rng, 20, 0.3, n_labels=2)
        la, lb = g.vertices_with_label(0), g.vertices_with_label(1)
        if la.size < 2 or lb.size < 2:
            continue
        ql, qr = int(rng.choice(la)), int(rng.choice(lb))
        idx = build_bcindex(g, 0, 1)
        q = BccQuery(ql=ql, qr=qr, k1=1, k2=1, algorithm="l2p", eta=50)
        res = l2p_search(g, idx, q)
        if res.found:
            labels = [g.label_names[i] for i in g.label_of]
            assert bcc_valid(g.n, edge_list(g), labels, set(res.vertices),
                             ql, qr, 1, 1, 1)
        done += 1
