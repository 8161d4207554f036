import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from authorid.errors import (
    EmptyAdjacency,
    NoSchemaLink,
    TypeMismatch,
    UnknownTypeCode,
    UnsupportedLength,
)
from authorid.graph_store import LinkType, NodeType, build_edges
from authorid.metapath import (
    DEFAULT_CANDIDATES,
    PathAdjacency,
    compose,
    load_adjacency,
    materialize,
    normalize,
    parse_path_spec,
    prune,
    read_path_list,
    save_adjacency,
)

from conftest import make_catalog, random_graph


def adj(spec, n, entries, normalized=False):
    rows, cols, w = (np.array(x) for x in zip(*entries)) if entries else ([], [], [])
    m = sp.csr_matrix((np.asarray(w, float), (np.asarray(rows, int), np.asarray(cols, int))),
                      shape=(n, n))
    return PathAdjacency.from_csr(parse_path_spec(spec), m, normalized)


# ------------------------------------------------------------------ parsing

def test_parse_basic():
    p = parse_path_spec("P-A")
    assert p.length == 1
    assert (p.source_type, p.dest_type) == (NodeType.PAPER, NodeType.AUTHOR)
    q = parse_path_spec("A-P-W")
    assert q.length == 2 and q.types == (NodeType.AUTHOR, NodeType.PAPER, NodeType.KEYWORD)
    assert q.last_link is LinkType.PW
    assert not q.direction_sensitive
    assert parse_path_spec("A-P-P").direction_sensitive


@pytest.mark.parametrize("spec,err", [("A-V", NoSchemaLink), ("A-X", UnknownTypeCode),
                                      ("A-P-A-P", UnsupportedLength), ("A", UnsupportedLength),
                                      ("A<P", NoSchemaLink), ("W-A", NoSchemaLink)])
def test_parse_errors(spec, err):
    with pytest.raises(err):
        parse_path_spec(spec)


@pytest.mark.parametrize("spec", DEFAULT_CANDIDATES + ("P<P", "A-P<P", "P<P-W"))
def test_spec_round_trip(spec):
    assert str(parse_path_spec(spec)) == spec
    assert parse_path_spec(str(parse_path_spec(spec).reverse())).reverse() == parse_path_spec(spec)


def test_reverse_flips_citation_direction():
    assert str(parse_path_spec("A-P-P").reverse()) == "P<P-A"
    assert str(parse_path_spec("P<P-W").reverse()) == "W-P-P"


def test_read_path_list(tmp_path):
    f = tmp_path / "paths.txt"
    f.write_text("A-P-W\n# comment\n\nP-A  # trailing\n")
    assert [str(p) for p in read_path_list(f)] == ["A-P-W", "P-A"]


# ------------------------------------------------------------------ compose

def test_weight_of_six():
    # two links author 0 -> paper 1 (parallel edges), three links paper 1 -> keyword 2
    left = adj("A-P", 3, [(0, 1, 2.0)])
    right = adj("P-W", 3, [(1, 2, 3.0)])
    out = compose(left, right)
    assert out.spec == "A-P-W"
    assert out.to_dense()[0, 2] == 6.0
    assert out.total_raw_weight == 6.0


def test_compose_empty_right():
    out = compose(adj("A-P", 3, [(0, 1, 1.0)]), adj("P-W", 3, []))
    assert len(out) == 0


def test_compose_rejects_mismatch_and_normalized():
    with pytest.raises(TypeMismatch):
        compose(adj("A-P", 3, [(0, 1, 1.0)]), adj("A-P", 3, [(0, 1, 1.0)]))
    with pytest.raises(TypeMismatch):
        compose(adj("A-P", 3, [(0, 1, 1.0)], normalized=True), adj("P-W", 3, [(1, 2, 1.0)]))


def test_compose_matches_dense_product_on_3x3(rng):
    for _ in range(20):
        a = rng.integers(0, 3, size=(3, 3)) * (rng.random((3, 3)) < 0.5)
        b = rng.integers(0, 3, size=(3, 3)) * (rng.random((3, 3)) < 0.5)
        left = PathAdjacency.from_csr(parse_path_spec("A-P"), sp.csr_matrix(a.astype(float)))
        right = PathAdjacency.from_csr(parse_path_spec("P-W"), sp.csr_matrix(b.astype(float)))
        np.testing.assert_array_equal(compose(left, right).to_dense(), a @ b)


def brute_force_counts(spec, cat, edges):
    """Enumerate every node sequence that walks the path's hops over individual edges."""
    path = parse_path_spec(spec)
    hop_edges = []
    for a, b, back in path.hops():
        lt = LinkType.between(a, b)
        src, dst, _ = edges.of_type(lt)
        pairs = list(zip(src.tolist(), dst.tolist()))
        if a == b == NodeType.PAPER:
            pairs = [(d, s) for s, d in pairs] if back else pairs
        elif a != NodeType.PAPER:
            pairs = [(d, s) for s, d in pairs]
        hop_edges.append(pairs)
    counts = {}
    for chain in itertools.product(*hop_edges):
        if all(chain[h][1] == chain[h + 1][0] for h in range(len(chain) - 1)):
            key = (chain[0][0], chain[-1][1])
            counts[key] = counts.get(key, 0) + 1
    return counts


@pytest.mark.parametrize("spec", ["A-P-W", "A-P-A", "P-P-W", "P<P-W", "W-P-W", "A-P-P", "V-P-W"])
def test_materialize_equals_path_enumeration(spec):
    for seed in range(5):
        cat, edges = random_graph(np.random.default_rng(seed), n_papers=8, n_authors=5,
                                  n_keywords=6)
        got = materialize(parse_path_spec(spec), edges, len(cat), drop_self_loops=False)
        want = brute_force_counts(spec, cat, edges)
        got_map = {(int(i), int(j)): w for i, j, w in zip(got.rows, got.cols, got.weights)}
        assert got_map == pytest.approx(want) and set(got_map) == set(want)


def test_same_type_self_loops_dropped():
    cat, edges = random_graph(np.random.default_rng(1))
    a = materialize(parse_path_spec("A-P-A"), edges, len(cat))
    assert not np.any(a.rows == a.cols)
    full = materialize(parse_path_spec("A-P-A"), edges, len(cat), drop_self_loops=False)
    assert np.any(full.rows == full.cols)


def test_endpoint_types_respected():
    cat, edges = random_graph(np.random.default_rng(2))
    for spec in DEFAULT_CANDIDATES:
        p = parse_path_spec(spec)
        m = materialize(p, edges, len(cat))
        assert np.all(cat.types[m.rows] == int(p.source_type))
        assert np.all(cat.types[m.cols] == int(p.dest_type))
        assert np.all(m.weights > 0)


def test_both_directions_are_transposes():
    cat, edges = random_graph(np.random.default_rng(4))
    fwd = materialize(parse_path_spec("A-P-W"), edges, len(cat))
    bwd = materialize(parse_path_spec("W-P-A"), edges, len(cat))
    np.testing.assert_array_equal(fwd.to_dense(), bwd.to_dense().T)
    cite = materialize(parse_path_spec("P-P"), edges, len(cat))
    cited = materialize(parse_path_spec("P<P"), edges, len(cat))
    np.testing.assert_array_equal(cite.to_dense(), cited.to_dense().T)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_compose_is_associative(seed):
    r = np.random.default_rng(seed)
    n = 9
    mats = [sp.random(n, n, density=0.4, random_state=r.integers(1 << 30), format="csr")
            for _ in range(3)]
    # A-P, P-P, P-W chain; composition is allowed past the parse-time length cap
    ap = PathAdjacency.from_csr(parse_path_spec("A-P"), mats[0] * 10)
    pp = PathAdjacency.from_csr(parse_path_spec("P-P"), mats[1] * 10)
    pw = PathAdjacency.from_csr(parse_path_spec("P-W"), mats[2] * 10)
    x = compose(compose(ap, pp), pw).to_dense()
    y = compose(ap, compose(pp, pw)).to_dense()
    np.testing.assert_allclose(x, y, rtol=1e-6, atol=1e-12)


# ------------------------------------------------------------------ normalize / prune

def test_normalize_examples():
    one = normalize(adj("P-A", 2, [(0, 1, 7.0)]))
    np.testing.assert_array_equal(one.weights, [1.0])
    two = normalize(adj("P-W", 3, [(0, 1, 2.0), (0, 2, 3.0)]))
    np.testing.assert_allclose(two.weights, [0.4, 0.6], rtol=0, atol=1e-15)
    assert two.normalized and two.total_raw_weight == 5.0
    with pytest.raises(EmptyAdjacency):
        normalize(adj("P-W", 3, []))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-3, 1e6), min_size=1, max_size=40))
def test_normalize_sum_ratio_idempotent(ws):
    n = len(ws) + 1
    a = adj("P-A", n, [(0, k + 1, w) for k, w in enumerate(ws)])
    m = normalize(a)
    assert abs(m.weights.sum() - 1.0) < 1e-9
    np.testing.assert_allclose(m.weights / m.weights[0], a.weights / a.weights[0], rtol=1e-12)
    assert normalize(m) is m


def test_prune_examples():
    counts = adj("P-W", 4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 5.0)])
    out = prune(counts, 2)
    np.testing.assert_array_equal(out.weights, [5.0])
    assert out.total_raw_weight == 5.0
    same = prune(counts, 1)
    np.testing.assert_array_equal(same.weights, counts.weights)
    with pytest.raises(EmptyAdjacency):
        normalize(prune(counts, 10))


def test_prune_sum_matches_survivors(rng):
    cat, edges = random_graph(rng)
    a = materialize(parse_path_spec("W-P-W"), edges, len(cat))
    for t in (1, 2, 3):
        assert prune(a, t).total_raw_weight == a.weights[a.weights >= t].sum()


def test_adjacency_file_round_trip(tmp_path):
    cat, edges = random_graph(np.random.default_rng(5))
    for spec in ("A-P-W", "P<P"):
        a = materialize(parse_path_spec(spec), edges, len(cat))
        for m in (a, normalize(a)):
            save_adjacency(m, tmp_path / "x.adj")
            b = load_adjacency(tmp_path / "x.adj")
            assert b.spec == spec and b.normalized == m.normalized
            assert b.total_raw_weight == m.total_raw_weight
            np.testing.assert_array_equal(b.rows, m.rows)
            np.testing.assert_array_equal(b.weights, m.weights)


def test_materialize_empty_link_type():
    cat = make_catalog({NodeType.PAPER: 2, NodeType.AUTHOR: 2})
    edges = build_edges(cat, [(0, 2, LinkType.PA)])
    assert len(materialize(parse_path_spec("P-W"), edges, len(cat))) == 0
