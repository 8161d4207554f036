import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from authorid.errors import EmptyTruth, InsufficientAuthors, UnknownAuthor
from authorid.evaluation import (
    RankedList,
    Sampled,
    WholeSet,
    ap_at_k,
    build_candidates,
    eligible_authors,
    evaluate,
    map_at_k,
    parse_protocol,
    rank_authors,
    recall_at_k,
)
from authorid.graph_store import NodeType
from authorid.metapath import materialize, parse_path_spec
from authorid.objectives import EmbeddingModel, PaperInstance
from authorid.trainer import TrainConfig, train


def ranked(order, truth):
    order = np.asarray(order)
    return RankedList(-1, order, -np.arange(len(order), dtype=float), frozenset(truth))


# ------------------------------------------------------------------ brute-force oracle

def oracle_ap(order, truth, K, with_rel=True):
    total = 0.0
    for k in range(1, min(K, len(order)) + 1):
        hits = len([a for a in order[:k] if a in truth])
        rel = 1 if order[k - 1] in truth else 0
        total += (hits / k) * (rel if with_rel else 1)
    return total / min(len(truth), K)


def oracle_recall(order, truth, K):
    return len(set(order[:K]) & set(truth)) / len(truth)


def oracle_classic_ap(order, truth):
    hits, acc = 0, 0.0
    for k, a in enumerate(order, start=1):
        if a in truth:
            hits += 1
            acc += hits / k
    return acc / len(truth)


def random_list(r):
    n = int(r.integers(1, 30))
    order = r.permutation(n)
    truth = set(r.choice(n, size=int(r.integers(1, n + 1)), replace=False).tolist())
    return order.tolist(), truth


# ------------------------------------------------------------------ metrics

def test_ap_examples():
    assert ap_at_k(ranked([7, 1, 2], {7}), 3) == 1.0
    assert ap_at_k(ranked([1, 7, 2], {7}), 3) == 0.5
    assert ap_at_k(ranked([1, 2, 3, 7], {7}), 3) == 0.0
    with pytest.raises(EmptyTruth):
        ap_at_k(ranked([1, 2], set()), 3)
    with pytest.raises(ValueError):
        ap_at_k(ranked([1, 2], {1}), 0)


def test_as_printed_formula_exceeds_one():
    r = ranked([7, 1, 2], {7})
    assert ap_at_k(r, 3, include_relevance=False) == pytest.approx(1 + 1 / 2 + 1 / 3)
    assert ap_at_k(r, 3, include_relevance=False) == pytest.approx(1.833, abs=1e-3)
    assert ap_at_k(r, 3) == 1.0


def test_map_and_recall_examples():
    a, b = ranked([1, 2], {1}), ranked([1, 2, 3], {3})
    assert map_at_k([a], 1) == 1.0
    assert map_at_k([a, ranked([2, 1, 5], {9})], 2) == 0.5
    assert recall_at_k(ranked([1, 2, 3], {1, 2, 3}), 3) == 1.0
    assert recall_at_k(ranked(list(range(20)), {0, 5, 15}), 10) == pytest.approx(2 / 3)
    assert recall_at_k(b, 2) == 0.0
    with pytest.raises(ValueError):
        map_at_k([], 3)


def test_metrics_match_brute_force_on_1000_lists():
    r = np.random.default_rng(0)
    lists, orders = [], []
    for _ in range(1000):
        order, truth = random_list(r)
        K = int(r.integers(1, 12))
        rl = ranked(order, truth)
        assert ap_at_k(rl, K) == pytest.approx(oracle_ap(order, truth, K), abs=1e-12)
        assert ap_at_k(rl, K, False) == pytest.approx(oracle_ap(order, truth, K, False), abs=1e-12)
        assert recall_at_k(rl, K) == pytest.approx(oracle_recall(order, truth, K), abs=1e-12)
        assert 0.0 <= ap_at_k(rl, K) <= 1.0 and 0.0 <= recall_at_k(rl, K) <= 1.0
        # truncating at the full list length recovers classical AP
        assert ap_at_k(rl, len(order)) == pytest.approx(oracle_classic_ap(order, truth), abs=1e-12)
        lists.append(rl)
        orders.append((order, truth))
    for K in (1, 3, 10):
        want = np.mean([oracle_ap(o, t, K) for o, t in orders])
        assert map_at_k(lists, K) == pytest.approx(want, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_recall_monotone_in_k(seed):
    order, truth = random_list(np.random.default_rng(seed))
    rl = ranked(order, truth)
    vals = [recall_at_k(rl, K) for K in range(1, len(order) + 2)]
    assert np.all(np.diff(vals) >= 0)
    assert vals[-1] == 1.0


# ------------------------------------------------------------------ ranking

def toy_model(U):
    return EmbeddingModel(np.asarray(U, float), np.array([1.0, 0, 0, 0]), np.zeros(0), [])


def test_rank_single_and_ties():
    m = toy_model([[1.0, 0], [0.5, 0], [0.5, 0], [0.9, 0]])
    inst = PaperInstance.build(-1, keywords=[0])
    assert rank_authors(m, inst, [3]).authors.tolist() == [3]
    assert rank_authors(m, inst, [2, 1]).authors.tolist() == [1, 2]
    assert rank_authors(m, inst, [2, 1, 3]).authors.tolist() == [3, 1, 2]
    with pytest.raises(UnknownAuthor):
        rank_authors(m, inst, [1, 17])


def test_rank_matches_brute_force(rng):
    for _ in range(50):
        U = rng.normal(size=(30, 6))
        U[rng.integers(30)] = U[rng.integers(30)]      # occasional exact ties
        m = toy_model(U)
        inst = PaperInstance.build(-1, keywords=[0, 1])
        cands = rng.choice(np.arange(2, 30), size=10, replace=False)
        got = rank_authors(m, inst, cands)
        v = U[0] + U[1]
        v = v / 2
        brute = sorted(cands.tolist(), key=lambda a: (-(U[a] @ v), a))
        assert got.authors.tolist() == brute
        assert np.all(np.diff(got.scores) <= 0)
        # positive rescaling keeps the order
        m.U *= 3.7
        assert rank_authors(m, inst, cands).authors.tolist() == brute


# ------------------------------------------------------------------ candidates

def test_build_candidates(small_corpus, rng):
    cat = small_corpus.catalog
    authors = eligible_authors(cat)
    inst = PaperInstance.build(-1, keywords=[0], authors=authors[:3])
    assert set(build_candidates(inst, cat, 3, rng).tolist()) == set(authors[:3].tolist())
    c = build_candidates(inst, cat, 40, rng)
    assert len(c) == 40 == len(set(c.tolist()))
    assert set(authors[:3].tolist()) <= set(c.tolist())
    assert np.all(cat.types[c] == int(NodeType.AUTHOR))
    a = build_candidates(inst, cat, 30, np.random.default_rng(5))
    b = build_candidates(inst, cat, 30, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)
    with pytest.raises(InsufficientAuthors):
        build_candidates(inst, cat, len(authors) + 1, rng)


def test_hundred_candidates_three_authors(corpus, rng):
    authors = eligible_authors(corpus.catalog)
    inst = PaperInstance.build(-1, keywords=[0], authors=authors[[4, 50, 120]])
    c = build_candidates(inst, corpus.catalog, 100, rng)
    negs = set(c.tolist()) - inst.authors
    assert len(c) == 100 and len(negs) == 97


def test_parse_protocol():
    assert parse_protocol("sampled:100") == Sampled(100)
    assert parse_protocol("sampled:25") == Sampled(25)
    assert parse_protocol("whole") == WholeSet()
    with pytest.raises(ValueError):
        parse_protocol("top5")


# ------------------------------------------------------------------ evaluate

def test_perfect_model_one_paper():
    # author 1 points exactly along the keyword; the other authors point away
    U = np.array([[1.0, 0], [1.0, 0], [-1.0, 0], [-1.0, 0.5], [0.0, -1]])
    from conftest import make_catalog
    from authorid.graph_store import LinkType, build_edges
    cat = make_catalog({NodeType.KEYWORD: 1, NodeType.AUTHOR: 4, NodeType.PAPER: 1})
    order = [cat.lookup(x) for x in ("w0", "a0", "a1", "a2", "a3", "p0")]
    build_edges(cat, [(cat.lookup("p0"), cat.lookup(f"a{k}"), LinkType.PA) for k in range(4)])
    U_full = np.zeros((len(cat), 2))
    U_full[order[:5]] = U
    m = EmbeddingModel(U_full, np.array([1.0, 0, 0, 0]), np.zeros(0), [])
    inst = PaperInstance.build(-1, keywords=[cat.lookup("w0")], authors=[cat.lookup("a0")])
    for protocol in (Sampled(3), WholeSet()):
        res = evaluate(m, [inst], cat, protocol, ks=(1, 3))
        for K in (1, 3):
            assert res.metric("map", K) == 1.0 and res.metric("recall", K) == 1.0


def trained(corpus, seed=0):
    paths = [materialize(parse_path_spec(s), corpus.edges, len(corpus.catalog))
             for s in ("P-A", "A-P-W")]
    model, _ = train(TrainConfig(dim=16, total_samples=100_000, lr_initial=0.1, seed=seed),
                     corpus.catalog, paths, corpus.train)
    return model


def test_sampled_is_easier_than_whole_set(small_corpus):
    model = trained(small_corpus)
    sampled = evaluate(model, small_corpus.test, small_corpus.catalog, Sampled(20), ks=(3,))
    whole = evaluate(model, small_corpus.test, small_corpus.catalog, WholeSet(), ks=(3,))
    assert sampled.metric("map", 3) >= whole.metric("map", 3)


def test_evaluate_deterministic_and_threaded(small_corpus):
    model = trained(small_corpus)
    args = (model, small_corpus.test, small_corpus.catalog, Sampled(30))
    a = evaluate(*args, ks=(3, 10), seed=4)
    b = evaluate(*args, ks=(3, 10), seed=4)
    c = evaluate(*args, ks=(3, 10), seed=4, threads=3)
    assert a.to_tsv() == b.to_tsv() == c.to_tsv()
    assert a.to_tsv().splitlines()[0] == "protocol\tK\tMAP\tRecall"


def test_unknown_authors_excluded(small_corpus):
    cat = small_corpus.catalog
    model = trained(small_corpus)
    authors = eligible_authors(cat)
    nobody = int(cat.nodes_of_type(NodeType.PAPER)[0])      # not an author: never eligible
    insts = [PaperInstance.build(-1, keywords=[int(cat.nodes_of_type(NodeType.KEYWORD)[0])],
                                 authors=[int(authors[0]), nobody]),
             PaperInstance.build(-1, keywords=[int(cat.nodes_of_type(NodeType.KEYWORD)[1])],
                                 authors=[nobody])]
    res = evaluate(model, insts, cat, Sampled(10), ks=(3,))
    assert res.n_papers == 1 and res.skipped_papers == 1 and res.excluded_authors == 2


def test_group_by_degree(small_corpus):
    model = trained(small_corpus)
    res = evaluate(model, small_corpus.test, small_corpus.catalog, Sampled(20), ks=(3,),
                   group_by_degree=True)
    groups = {row[0] for row in res.rows}
    assert "all" in groups and len(groups) > 1
    assert res.to_tsv().splitlines()[0].endswith("\tgroup")
