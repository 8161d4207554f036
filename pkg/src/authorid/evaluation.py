"""Author ranking and truncated ranking metrics.

AP@K here weights each precision by the relevance of the item at that
rank::

    AP@K = sum_{k<=K} P(k) * rel(k) / min(L, K)

``include_relevance=False`` drops the ``rel(k)`` factor, which lets a
single true author at rank 1 score 1 + 1/2 + 1/3 at K=3.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTruth, InsufficientAuthors, UnknownAuthor
from .graph_store import LinkType, NodeCatalog, NodeType
from .objectives import EmbeddingModel, PaperInstance, paper_repr


@dataclass
class RankedList:
    paper: int
    authors: np.ndarray       # descending score, ties by ascending id
    scores: np.ndarray
    truth: frozenset[int]

    def relevance(self) -> np.ndarray:
        return np.fromiter((a in self.truth for a in self.authors), dtype=bool,
                           count=len(self.authors))


def _order(ids: np.ndarray, scores: np.ndarray) -> np.ndarray:
    return np.lexsort((ids, -scores))


def rank_authors(model: EmbeddingModel, inst: PaperInstance, candidates,
                 truth=None) -> RankedList:
    cands = np.unique(np.asarray(list(candidates), dtype=np.int64))
    if cands.size == 0:
        raise ValueError("empty candidate set")
    bad = (cands < 0) | (cands >= model.n_nodes)
    if np.any(bad):
        raise UnknownAuthor(f"candidate {int(cands[bad][0])} has no embedding row")
    scores = model.U[cands] @ paper_repr(inst, model)
    order = _order(cands, scores)
    return RankedList(inst.paper, cands[order], scores[order],
                      frozenset(inst.authors if truth is None else truth))


def _check_truth(ranked: RankedList):
    if not ranked.truth:
        raise EmptyTruth(f"paper {ranked.paper} has no true authors")


def ap_at_k(ranked: RankedList, K: int, include_relevance: bool = True) -> float:
    if K < 1:
        raise ValueError("K must be >= 1")
    _check_truth(ranked)
    rel = ranked.relevance()[:K]
    hits = np.cumsum(rel)
    precision = hits / np.arange(1, len(rel) + 1)
    terms = precision * rel if include_relevance else precision
    return float(terms.sum() / min(len(ranked.truth), K))


def map_at_k(lists, K: int, include_relevance: bool = True) -> float:
    lists = list(lists)
    if not lists:
        raise ValueError("no ranked lists")
    return float(np.mean([ap_at_k(r, K, include_relevance) for r in lists]))


def recall_at_k(ranked: RankedList, K: int) -> float:
    _check_truth(ranked)
    return float(ranked.relevance()[:K].sum() / len(ranked.truth))


# ------------------------------------------------------------------ candidates

def eligible_authors(catalog: NodeCatalog) -> np.ndarray:
    """Authors with at least one training paper; only these have learned embeddings."""
    authors = catalog.nodes_of_type(NodeType.AUTHOR)
    return authors[catalog.degrees[authors, int(LinkType.PA)] >= 1]


def build_candidates(inst: PaperInstance, catalog: NodeCatalog, size: int,
                     rng: np.random.Generator, pool: np.ndarray | None = None) -> np.ndarray:
    """True authors plus uniformly drawn distinct non-authors, ``size`` in total."""
    if pool is None:
        pool = eligible_authors(catalog)
    truth = np.asarray(sorted(a for a in inst.authors), dtype=np.int64)
    if size < len(truth):
        raise ValueError(f"candidate size {size} smaller than {len(truth)} true authors")
    need = size - len(truth)
    others = len(pool) - int(np.isin(truth, pool).sum())
    if need > others:
        raise InsufficientAuthors(f"need {need} negative authors, only {others} available")
    if need == 0:
        return truth
    if len(pool) > 4 * size:
        chosen: dict[int, None] = {}
        while len(chosen) < need:
            for a in pool[rng.integers(len(pool), size=2 * need)]:
                a = int(a)
                if a not in inst.authors and a not in chosen:
                    chosen[a] = None
                    if len(chosen) == need:
                        break
        negs = np.fromiter(chosen, dtype=np.int64, count=need)
    else:
        negs = rng.choice(pool[~np.isin(pool, truth)], size=need, replace=False)
    return np.sort(np.concatenate([truth, negs]))


# ------------------------------------------------------------------ protocols

@dataclass(frozen=True)
class Sampled:
    size: int = 100

    @property
    def name(self) -> str:
        return f"sampled{self.size}"


@dataclass(frozen=True)
class WholeSet:
    @property
    def name(self) -> str:
        return "whole"


def parse_protocol(text: str):
    text = text.strip().lower()
    if text in ("whole", "wholeset", "all"):
        return WholeSet()
    if text.startswith("sampled"):
        rest = text[len("sampled"):].lstrip(":=")
        return Sampled(int(rest) if rest else 100)
    raise ValueError(f"unknown protocol {text!r} (use 'sampled:<size>' or 'whole')")


def _rank_whole(model, inst, pool, truth, top):
    scores = model.U[pool] @ paper_repr(inst, model)
    if top < len(pool):
        cut = np.partition(scores, len(pool) - top)[len(pool) - top]
        keep = np.flatnonzero(scores >= cut)
        ids, sc = pool[keep], scores[keep]
    else:
        ids, sc = pool, scores
    order = _order(ids, sc)[:top]
    return RankedList(inst.paper, ids[order], sc[order], truth)


@dataclass
class EvalResult:
    protocol: str
    rows: list[tuple[str, int, float, float]]       # (group, K, MAP, Recall)
    n_papers: int
    excluded_authors: int
    skipped_papers: int
    lists: list[RankedList] = field(default_factory=list, repr=False)

    def metric(self, name: str, K: int, group: str = "all") -> float:
        col = {"map": 2, "recall": 3}[name.lower()]
        for row in self.rows:
            if row[0] == group and row[1] == K:
                return row[col]
        raise KeyError((name, K, group))

    def to_tsv(self, header: bool = True) -> str:
        grouped = any(r[0] != "all" for r in self.rows)
        out = []
        if header:
            out.append("protocol\tK\tMAP\tRecall" + ("\tgroup" if grouped else ""))
        for group, K, m, r in self.rows:
            line = f"{self.protocol}\t{K}\t{m!r}\t{r!r}"
            out.append(line + (f"\t{group}" if grouped else ""))
        return "\n".join(out) + "\n"


def _degree_group(catalog, truth):
    deg = np.median(catalog.degrees[np.asarray(sorted(truth)), int(LinkType.PA)])
    lo = 2 ** int(np.floor(np.log2(max(deg, 1))))
    return f"deg[{lo},{2 * lo})"


def evaluate(model: EmbeddingModel, instances, catalog: NodeCatalog, protocol=Sampled(100),
             ks=(3, 10), seed: int = 0, threads: int = 1, group_by_degree: bool = False,
             include_relevance: bool = True) -> EvalResult:
    """MAP@K and Recall@K of the model's author ranking for held-out papers.

    Authors without training papers cannot be scored; they are removed from
    the truth sets (``excluded_authors``) and papers left without any
    known author are skipped.
    """
    ks = sorted(set(int(k) for k in ks))
    pool = eligible_authors(catalog)
    pool_set = set(pool.tolist())
    work, excluded, skipped = [], 0, 0
    for idx, inst in enumerate(instances):
        truth = frozenset(a for a in inst.authors if a in pool_set)
        excluded += len(inst.authors) - len(truth)
        if not truth or inst.is_empty():
            skipped += 1
            continue
        work.append((idx, inst, truth))

    def one(item):
        idx, inst, truth = item
        if isinstance(protocol, WholeSet):
            return _rank_whole(model, inst, pool, truth, max(ks))
        rng = np.random.default_rng([seed, idx])
        masked = PaperInstance(inst.paper, inst.neighbors, truth, inst.name)
        cands = build_candidates(masked, catalog, protocol.size, rng, pool=pool)
        return rank_authors(model, inst, cands, truth=truth)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            lists = list(ex.map(one, work))
    else:
        lists = [one(item) for item in work]

    groups = {"all": list(range(len(lists)))}
    if group_by_degree:
        for n, (_, _, truth) in enumerate(work):
            groups.setdefault(_degree_group(catalog, truth), []).append(n)
    rows = []
    for name in sorted(groups, key=lambda g: (g != "all", g)):
        members = [lists[n] for n in groups[name]]
        if not members:
            continue
        for K in ks:
            rows.append((name, K, map_at_k(members, K, include_relevance),
                         float(np.mean([recall_at_k(r, K) for r in members]))))
    if not lists:
        raise EmptyTruth("no evaluable papers (every paper lacks a known author)")
    return EvalResult(protocol.name, rows, len(lists), excluded, skipped, lists)
