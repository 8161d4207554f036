"""Constant-time weighted sampling.

Walker/Vose alias tables back every draw: path edges, degree-smoothed
noise distributions and negative authors.  Python-facing samplers take a
``numpy.random.Generator``.  The compiled training kernels use the
xorshift64* generator defined here (seeded through splitmix64), which is
bit-exact across platforms for a given seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import (
    AllZeroWeights,
    EmptyWeights,
    ExhaustedRejection,
    NoEligibleNodes,
    NoPaths,
)
from .graph_store import LinkType, NodeCatalog, NodeType

DEFAULT_NOISE_EXPONENT = 0.75
MAX_REJECTIONS = 100


# ------------------------------------------------------------------ RNG

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STAR = np.uint64(0x2545F4914F6CDD1D)


@numba.njit(cache=True)
def splitmix64(x):
    z = np.uint64(x) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def rng_state(seed: int) -> np.ndarray:
    """One-word xorshift64* state for ``seed`` (never zero)."""
    s = splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    if s == 0:
        s = np.uint64(1)
    return np.array([s], dtype=np.uint64)


@numba.njit(cache=True, inline="always")
def next_u64(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * _STAR


@numba.njit(cache=True, inline="always")
def next_double(state):
    return np.float64(next_u64(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True, inline="always")
def next_below(state, n):
    k = np.int64(next_double(state) * n)
    return k if k < n else n - 1


# ------------------------------------------------------------------ alias tables

@dataclass(frozen=True)
class AliasTable:
    prob: np.ndarray      # float64, acceptance probability of each bucket
    alias: np.ndarray     # int64, fallback index of each bucket

    @property
    def size(self) -> int:
        return len(self.prob)

    def probabilities(self) -> np.ndarray:
        """Exact draw distribution implied by the table (analytic, no sampling)."""
        n = self.size
        p = self.prob.copy()
        np.add.at(p, self.alias, 1.0 - self.prob)
        return p / n

    def sample(self, rng: np.random.Generator, size=None):
        return sample_alias(self, rng, size)


@numba.njit(cache=True)
def _vose(scaled):
    n = scaled.shape[0]
    prob = np.ones(n)
    alias = np.arange(n)
    small = np.empty(n, np.int64)
    large = np.empty(n, np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        g = large[nl - 1]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            nl -= 1
            small[ns] = g
            ns += 1
    # leftovers are 1 up to rounding; they keep prob=1, alias=self
    return prob, alias


def build_alias(weights) -> AliasTable:
    """O(n) alias table whose draws are proportional to ``weights``."""
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        raise EmptyWeights("alias table needs at least one weight")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if not total > 0:
        raise AllZeroWeights("all weights are zero")
    prob, alias = _vose(w * (w.size / total))
    return AliasTable(prob, alias)


def sample_alias(table: AliasTable, rng: np.random.Generator, size=None):
    n = table.size
    if size is None:
        k = int(rng.integers(n))
        return k if rng.random() < table.prob[k] else int(table.alias[k])
    k = rng.integers(n, size=size)
    keep = rng.random(size) < table.prob[k]
    return np.where(keep, k, table.alias[k])


@numba.njit(cache=True, inline="always")
def alias_draw(prob, alias, state):
    k = next_below(state, prob.shape[0])
    if next_double(state) < prob[k]:
        return k
    return alias[k]


@numba.njit(cache=True, nogil=True)
def alias_draw_many(prob, alias, n_draws, state):
    """Histogram of ``n_draws`` kernel-side draws."""
    counts = np.zeros(prob.shape[0], np.int64)
    for _ in range(n_draws):
        counts[alias_draw(prob, alias, state)] += 1
    return counts


# ------------------------------------------------------------------ noise

@dataclass(frozen=True)
class NoiseDistribution:
    """Degree^exponent distribution restricted to one node type."""

    node_type: NodeType
    link_type: LinkType
    exponent: float
    support: np.ndarray   # node ids, aligned with table buckets
    table: AliasTable

    def sample(self, rng: np.random.Generator, size=None):
        idx = sample_alias(self.table, rng, size)
        return int(self.support[idx]) if size is None else self.support[idx]

    def probability_of(self, node: int) -> float:
        hit = np.flatnonzero(self.support == node)
        return float(self.table.probabilities()[hit[0]]) if hit.size else 0.0


def build_noise(catalog: NodeCatalog, node_type: NodeType, link_type: LinkType,
                exponent: float = DEFAULT_NOISE_EXPONENT) -> NoiseDistribution:
    nodes = catalog.nodes_of_type(node_type)
    deg = catalog.degrees[nodes, int(link_type)]
    keep = deg >= 1
    if not np.any(keep):
        raise NoEligibleNodes(f"no {node_type.tsv_name} node has a {link_type.label} link")
    support = nodes[keep].astype(np.int64)
    table = build_alias(deg[keep].astype(np.float64) ** exponent)
    return NoiseDistribution(node_type, link_type, exponent, support, table)


# ------------------------------------------------------------------ triples

@dataclass(frozen=True)
class TaskTriple:
    index: int    # position of the paper in the instance collection
    p: int
    a: int
    a_neg: int


@dataclass(frozen=True)
class NetTriple:
    r: int
    i: int
    j: int


class NetTripleSampler:
    """Uniform path choice followed by a weight-proportional edge draw."""

    def __init__(self, paths):
        paths = list(paths)
        if not paths or any(len(p) == 0 for p in paths):
            raise NoPaths("need at least one non-empty path adjacency")
        self.paths = paths
        self.tables = [build_alias(p.weights) for p in paths]

    def __call__(self, rng: np.random.Generator) -> NetTriple:
        r = int(rng.integers(len(self.paths)))
        e = sample_alias(self.tables[r], rng)
        adj = self.paths[r]
        return NetTriple(r, int(adj.rows[e]), int(adj.cols[e]))


def sample_net_triple(paths, rng: np.random.Generator) -> NetTriple:
    sampler = paths if isinstance(paths, NetTripleSampler) else NetTripleSampler(paths)
    return sampler(rng)


def sample_task_triple(instances, noise: NoiseDistribution,
                       rng: np.random.Generator) -> TaskTriple:
    """Uniform paper, uniform true author, noise-drawn non-author."""
    k = int(rng.integers(len(instances)))
    inst = instances[k]
    authors = inst.author_array
    a = int(authors[rng.integers(len(authors))])
    for _ in range(MAX_REJECTIONS):
        neg = noise.sample(rng)
        if neg not in inst.authors:
            return TaskTriple(k, inst.paper, a, neg)
    raise ExhaustedRejection(f"no non-author drawn for paper {inst.paper} "
                             f"after {MAX_REJECTIONS} attempts")
