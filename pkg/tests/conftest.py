import numpy as np
import pytest

from authorid.graph_store import LinkType, NodeCatalog, NodeType, build_edges
from authorid.synthetic import SyntheticSpec, generate


def make_catalog(counts):
    """Catalog with ``counts[type]`` nodes of each type, ids like ``a3``."""
    ids, types = [], []
    for t in NodeType:
        for k in range(counts.get(t, 0)):
            ids.append(f"{t.code.lower()}{k}")
            types.append(int(t))
    return NodeCatalog(ids, np.asarray(types, dtype=np.int8), list(ids))


def random_graph(rng, n_papers=12, n_authors=8, n_keywords=10, n_venues=3, n_years=3,
                 density=0.25):
    """Small random bibliographic graph (at most ~40 nodes) for oracle tests."""
    cat = make_catalog({NodeType.PAPER: n_papers, NodeType.AUTHOR: n_authors,
                        NodeType.KEYWORD: n_keywords, NodeType.VENUE: n_venues,
                        NodeType.YEAR: n_years})
    P = cat.nodes_of_type(NodeType.PAPER)
    triples = []
    for lt, others in ((LinkType.PA, NodeType.AUTHOR), (LinkType.PW, NodeType.KEYWORD)):
        for p in P:
            for o in cat.nodes_of_type(others):
                if rng.random() < density:
                    triples.append((p, o, lt))
    for p in P:
        triples.append((p, rng.choice(cat.nodes_of_type(NodeType.VENUE)), LinkType.PV))
        triples.append((p, rng.choice(cat.nodes_of_type(NodeType.YEAR)), LinkType.PY))
        for q in P:
            if p != q and rng.random() < density / 2:
                triples.append((p, q, LinkType.PP))
    return cat, build_edges(cat, triples)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_corpus():
    """A few hundred papers; fast enough for per-test training runs."""
    spec = SyntheticSpec(n_papers=400, n_authors=60, n_keywords=120, n_venues=6, n_topics=3,
                         generic_keywords=20, n_years=8)
    return generate(spec, seed=7)


@pytest.fixture(scope="session")
def corpus():
    """The default-size synthetic network."""
    return generate(SyntheticSpec(), seed=0)


# ------------------------------------------------------------------ acceptance summary

ACCEPTANCE = {}


@pytest.fixture
def verdict():
    """Record one acceptance line, then fail the test if the criterion failed."""
    def record(number, title, ok, detail):
        ACCEPTANCE[number] = (title, bool(ok), detail)
        assert ok, f"criterion {number} ({title}) failed: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
