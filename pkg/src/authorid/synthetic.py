"""Planted-community bibliographic networks for tests and demos.

Authors belong to topics and carry a few personal keywords; papers are
written by a topic-coherent author team, use topic, personal and generic
keywords, appear in topic venues and cite earlier papers (preferring the
authors' own).  Papers from the final ``test_years`` years are held out:
they are returned as instances only and never enter the graph.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import instances_from_graph
from .graph_store import EdgeSet, LinkType, NodeCatalog, NodeType
from .objectives import PaperInstance


@dataclass
class SyntheticSpec:
    n_papers: int = 2000
    n_authors: int = 300
    n_keywords: int = 500
    n_venues: int = 20
    n_topics: int = 10
    first_year: int = 2000
    n_years: int = 16
    test_years: int = 2
    generic_keywords: int = 100
    personal_keywords: int = 4
    mean_extra_authors: float = 1.5
    mean_keywords: float = 6.0
    mean_references: float = 2.0
    p_personal_kw: float = 0.35
    p_topic_kw: float = 0.35
    p_topic_venue: float = 0.8
    p_repeat_coauthor: float = 0.6
    p_self_cite: float = 0.5


@dataclass
class SyntheticCorpus:
    catalog: NodeCatalog
    edges: EdgeSet
    train: list[PaperInstance]
    test: list[PaperInstance]
    author_topic: np.ndarray      # indexed by author order (0..n_authors-1)
    keyword_topic: np.ndarray     # -1 for generic keywords
    author_ids: np.ndarray        # node ids of authors
    keyword_ids: np.ndarray


def generate(spec: SyntheticSpec = SyntheticSpec(), seed: int = 0) -> SyntheticCorpus:
    rng = np.random.default_rng(seed)
    T = spec.n_topics
    A = spec.n_authors
    author_topic = np.arange(A) % T
    productivity = 1.0 / (1.0 + rng.permutation(A)) ** 0.6

    n_topic_kw = spec.n_keywords - spec.generic_keywords
    keyword_topic = np.concatenate([np.arange(n_topic_kw) % T,
                                    np.full(spec.generic_keywords, -1)])
    topic_kw = [np.flatnonzero(keyword_topic == t) for t in range(T)]
    generic_kw = np.flatnonzero(keyword_topic == -1)
    personal = [rng.choice(topic_kw[author_topic[a]], spec.personal_keywords, replace=False)
                for a in range(A)]
    venue_topic = np.arange(spec.n_venues) % T
    topic_venues = [np.flatnonzero(venue_topic == t) for t in range(T)]
    topic_authors = [np.flatnonzero(author_topic == t) for t in range(T)]

    growth = np.linspace(1.0, 2.0, spec.n_years)
    years = np.sort(rng.choice(spec.n_years, size=spec.n_papers, p=growth / growth.sum()))

    papers = []                       # (year, authors, keywords, venue, refs)
    by_author = [[] for _ in range(A)]
    by_topic = [[] for _ in range(T)]
    collaborators = [dict() for _ in range(A)]
    for pid in range(spec.n_papers):
        lead = int(rng.choice(A, p=productivity / productivity.sum()))
        topic = int(author_topic[lead])
        team = [lead]
        for _ in range(rng.poisson(spec.mean_extra_authors)):
            if collaborators[lead] and rng.random() < spec.p_repeat_coauthor:
                pool = np.fromiter(collaborators[lead], dtype=np.int64)
            else:
                pool = topic_authors[topic]
            pw = productivity[pool]
            cand = int(rng.choice(pool, p=pw / pw.sum()))
            if cand not in team:
                team.append(cand)
        if len(team) > 5:
            team = team[:5]
        for a in team:
            for b in team:
                if a != b:
                    collaborators[a][b] = None

        kws = set()
        for _ in range(max(1, rng.poisson(spec.mean_keywords))):
            u = rng.random()
            if u < spec.p_personal_kw:
                kws.add(int(rng.choice(personal[team[rng.integers(len(team))]])))
            elif u < spec.p_personal_kw + spec.p_topic_kw:
                kws.add(int(rng.choice(topic_kw[topic])))
            else:
                kws.add(int(rng.choice(generic_kw)))
        if rng.random() < spec.p_topic_venue:
            venue = int(rng.choice(topic_venues[topic]))
        else:
            venue = int(rng.integers(spec.n_venues))

        refs = set()
        for _ in range(rng.poisson(spec.mean_references)):
            own = [q for a in team for q in by_author[a]]
            if own and rng.random() < spec.p_self_cite:
                refs.add(int(rng.choice(own)))
            elif by_topic[topic] and rng.random() < 0.6:
                refs.add(int(rng.choice(by_topic[topic])))
            elif pid > 0:
                refs.add(int(rng.integers(pid)))
        papers.append((int(years[pid]), team, sorted(kws), venue, sorted(refs)))
        for a in team:
            by_author[a].append(pid)
        by_topic[topic].append(pid)

    cutoff = spec.n_years - spec.test_years
    train_p = [i for i, p in enumerate(papers) if p[0] < cutoff]
    test_p = [i for i, p in enumerate(papers) if p[0] >= cutoff]

    # catalog: training papers, all authors, keywords, venues, years
    ids, types, labels = [], [], []

    def add(ext, t, label):
        ids.append(ext)
        types.append(int(t))
        labels.append(label)
        return len(ids) - 1

    paper_node = {i: add(f"p{i}", NodeType.PAPER, f"paper {i}") for i in train_p}
    author_node = np.array([add(f"a{a}", NodeType.AUTHOR, f"author {a} (topic {author_topic[a]})")
                            for a in range(A)])
    kw_node = np.array([add(f"w{k}", NodeType.KEYWORD, f"kw{k}") for k in range(spec.n_keywords)])
    venue_node = np.array([add(f"v{v}", NodeType.VENUE, f"venue {v}") for v in range(spec.n_venues)])
    year_node = np.array([add(f"y{spec.first_year + y}", NodeType.YEAR, str(spec.first_year + y))
                          for y in range(spec.n_years)])
    catalog = NodeCatalog(ids, np.asarray(types, dtype=np.int8), labels)

    src, dst, link = [], [], []

    def edge(s, d, lt):
        src.append(s)
        dst.append(d)
        link.append(int(lt))

    for i in train_p:
        year, team, kws, venue, refs = papers[i]
        p = paper_node[i]
        for a in team:
            edge(p, author_node[a], LinkType.PA)
        for k in kws:
            edge(p, kw_node[k], LinkType.PW)
        for r in refs:
            edge(p, paper_node[r], LinkType.PP)
        edge(p, venue_node[venue], LinkType.PV)
        if year < spec.n_years:
            edge(p, year_node[year], LinkType.PY)
    edges = EdgeSet(np.asarray(src, np.int64), np.asarray(dst, np.int64),
                    np.asarray(link, np.int8), np.ones(len(src)))
    catalog.attach_edges(edges)
    train = instances_from_graph(catalog, edges)

    test = []
    for i in test_p:
        year, team, kws, venue, refs = papers[i]
        refs_known = [paper_node[r] for r in refs if r in paper_node]
        test.append(PaperInstance(-1, (kw_node[kws], np.asarray(refs_known, np.int64),
                                       venue_node[[venue]], year_node[[year]]),
                                  frozenset(author_node[team].tolist()), f"p{i}"))
    return SyntheticCorpus(catalog, edges, train, test, author_topic, keyword_topic,
                           author_node, kw_node)
