import subprocess
import sys

import pytest

from bccsearch.graph import save_graph

from fixtures import three_label_fixture, two_group_fixture


def run_cli(*argv, **kw):
    return subprocess.run(
        [sys.executable, "-m", "bccsearch", *argv],
        capture_output=True, text=True, **kw,
    )


@pytest.fixture(scope="module")
def three_label_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("g3")
    g, ids = three_label_fixture()
    save_graph(g, d / "g.edges", d / "g.labels")
    return d, ids


@pytest.fixture(scope="module")
def two_group_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("g2")
    g, ids = two_group_fixture()
    save_graph(g, d / "g.edges", d / "g.labels")
    return d, ids


def test_query_happy_path(three_label_files):
    d, ids = three_label_files
    r = run_cli("query", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
                "--ql", str(ids["ql"]), "--qr", str(ids["qr"]),
                "--k1", "4", "--k2", "3", "--b", "1")
    assert r.returncode == 0, r.stderr
    lines = r.stdout.splitlines()
    assert lines[0] == "status: found"
    block = dict(l.split(": ", 1) for l in lines)
    assert block["query_distance"] == "2"
    assert block["iterations"] == "1"
    assert block["left"] == "0 1 2 3 4 5"
    assert block["right"] == "11 12 13 14"


def test_query_missing_labels_flag_usage_error(three_label_files):
    d, _ = three_label_files
    r = run_cli("query", "--graph", str(d / "g.edges"), "--ql", "0", "--qr", "11")
    assert r.returncode == 2
    assert "usage" in r.stderr.lower() or "labels" in r.stderr


def test_query_infeasible_exit_code(three_label_files):
    d, ids = three_label_files
    r = run_cli("query", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
                "--ql", str(ids["ql"]), "--qr", str(ids["qr"]),
                "--k1", "6", "--k2", "3")
    assert r.returncode == 1
    assert "status: infeasible" in r.stdout
    assert "core-infeasible:left" in r.stderr


def test_query_unknown_vertex_usage_error(three_label_files):
    d, _ = three_label_files
    r = run_cli("query", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
                "--ql", "999", "--qr", "11")
    assert r.returncode == 2
    assert "error" in r.stderr


def test_all_algorithms_accept_same_flags(three_label_files):
    d, ids = three_label_files
    outs = {}
    for alg in ("online", "lp", "l2p"):
        r = run_cli("query", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
                    "--ql", str(ids["ql"]), "--qr", str(ids["qr"]),
                    "--algorithm", alg, "--eta", "100000", "--rho", "3")
        assert r.returncode == 0, r.stderr
        outs[alg] = r.stdout
    # inapplicable flags warn (stderr) but do not fail
    r = run_cli("query", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
                "--ql", str(ids["ql"]), "--qr", str(ids["qr"]),
                "--algorithm", "online", "--eta", "50")
    assert r.returncode == 0
    assert "no effect" in r.stderr
    # every mode recovers the same dense community here
    for alg in ("lp", "l2p"):
        assert outs[alg].splitlines()[-2:] == outs["online"].splitlines()[-2:]


def test_build_index_and_l2p_reuse(two_group_files, tmp_path):
    d, ids = two_group_files
    idx_path = tmp_path / "g.bcindex"
    r = run_cli("build-index", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
                "--out", str(idx_path))
    assert r.returncode == 0, r.stderr
    assert idx_path.exists()
    assert "pair: L R" in r.stdout
    r2 = run_cli("query", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
                 "--ql", str(ids["ql"]), "--qr", str(ids["qr"]), "--k1", "1", "--k2", "1",
                 "--algorithm", "l2p", "--index", str(idx_path))
    assert r2.returncode == 0, r2.stderr
    assert "warning" not in r2.stderr
    r3 = run_cli("query", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
                 "--ql", str(ids["ql"]), "--qr", str(ids["qr"]), "--k1", "1", "--k2", "1",
                 "--algorithm", "l2p", "--index", str(tmp_path / "missing.bcindex"))
    assert r3.returncode == 0
    assert "missing" in r3.stderr and "rebuilding" in r3.stderr
    assert r3.stdout == r2.stdout


def test_query_multi_cli(three_label_files):
    d, ids = three_label_files
    r = run_cli("query-multi", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
                "--q", str(ids["ql"]), str(ids["qr"]), "--k", "4", "3")
    assert r.returncode == 0, r.stderr
    assert "status: found" in r.stdout
    assert "group SE: 0 1 2 3 4 5" in r.stdout
    assert "group UI: 11 12 13 14" in r.stdout


def test_gen_queries_cli(two_group_files):
    d, _ = two_group_files
    r = run_cli("gen-queries", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
                "--degree-rank", "20", "--inter-distance", "2", "--num", "5", "--seed", "7")
    assert r.returncode == 0, r.stderr
    lines = r.stdout.splitlines()
    assert 0 < len(lines) <= 5
    for line in lines:
        a, b = line.split()
        int(a), int(b)


def test_stats_cli(three_label_files):
    d, _ = three_label_files
    r = run_cli("stats", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"))
    assert r.returncode == 0
    lines = r.stdout.splitlines()
    assert "vertices: 20" in lines
    assert "edges: 34" in lines
    assert "labels: 3" in lines
    assert "label SE: 11" in lines
    assert "k_max: 4" in lines
    assert "cross SE UI: 5" in lines
    assert "cross PM SE: 1" in lines


def test_eval_cli(tmp_path):
    from bccsearch.evalharness import EvalConfig, synthesize_labels
    from bccsearch.graph import save_graph as sg

    size = 8
    edges = [(i, j) for i in range(size) for j in range(i + 1, size)]
    edges += [(i, j) for i in range(size, 2 * size) for j in range(i + 1, 2 * size)]
    comms = [list(range(size)), list(range(size, 2 * size))]
    g, truths = synthesize_labels(2 * size, edges, comms, EvalConfig(rng_seed=11))
    sg(g, tmp_path / "s.edges", tmp_path / "s.labels")
    with open(tmp_path / "s.truth", "w") as f:
        for t in truths:
            f.write(" ".join(str(int(g.ext_ids[v])) for v in sorted(t)) + "\n")
    r = run_cli("gen-queries", "--graph", str(tmp_path / "s.edges"),
                "--labels", str(tmp_path / "s.labels"),
                "--degree-rank", "50", "--num", "3", "--seed", "1")
    assert r.returncode == 0, r.stderr
    (tmp_path / "s.queries").write_text(r.stdout)
    r2 = run_cli("eval", "--graph", str(tmp_path / "s.edges"),
                 "--labels", str(tmp_path / "s.labels"),
                 "--truth", str(tmp_path / "s.truth"),
                 "--queries", str(tmp_path / "s.queries"),
                 "--jobs", "2", "--out-dir", str(tmp_path / "out"))
    assert r2.returncode == 0, r2.stderr
    assert (tmp_path / "out" / "report.tsv").exists()
    assert (tmp_path / "out" / "f1_by_algorithm.png").exists()
    assert (tmp_path / "out" / "time_by_algorithm.png").exists()
    header = (tmp_path / "out" / "report.tsv").read_text().splitlines()[0]
    assert header.split("\t") == [
        "query_id", "algorithm", "status", "result_size", "query_distance",
        "diameter", "precision", "recall", "f1", "wall_time_ms",
    ]
    assert "algorithm online:" in r2.stdout


def test_identical_invocations_byte_identical(three_label_files):
    d, ids = three_label_files
    argv = ("query", "--graph", str(d / "g.edges"), "--labels", str(d / "g.labels"),
            "--ql", str(ids["ql"]), "--qr", str(ids["qr"]), "--algorithm", "lp")
    outs = {run_cli(*argv).stdout for _ in range(3)}
    assert len(outs) == 1
