"""Paper representation, author scoring, both losses and their gradients.

This module is the readable reference implementation: plain numpy over a
single sample.  The compiled training kernels in ``_kernels`` perform the
same arithmetic and are checked against it.

Sign convention
---------------
``task_gradients`` returns the gradient of the hinge loss (the direction
that *increases* the loss); ``net_gradients`` returns the gradient of the
negative-sampling log-likelihood (the direction that increases the
likelihood).  ``apply_update`` is told which way to step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import EmptyInstance, NonFiniteUpdate, UnknownAuthor
from .graph_store import NodeCatalog, NodeType

# Paper-information types, in the order used by the combination weights w.
INFO_NAMES = ("keyword", "reference", "venue", "year")
INFO_TYPES = (NodeType.KEYWORD, NodeType.PAPER, NodeType.VENUE, NodeType.YEAR)
N_INFO = len(INFO_TYPES)


def _as_ids(nodes) -> np.ndarray:
    return np.unique(np.asarray(list(nodes), dtype=np.int64))


@dataclass
class PaperInstance:
    """A paper's observed neighbours by type plus its true authors."""

    paper: int
    neighbors: tuple[np.ndarray, ...]
    authors: frozenset[int]
    name: str = ""

    def __post_init__(self):
        if len(self.neighbors) != N_INFO:
            raise ValueError(f"expected {N_INFO} neighbour sets, got {len(self.neighbors)}")
        self.neighbors = tuple(_as_ids(x) for x in self.neighbors)
        self.authors = frozenset(int(a) for a in self.authors)

    @classmethod
    def build(cls, paper, *, keywords=(), references=(), venues=(), years=(),
              authors=(), name=""):
        return cls(paper, (keywords, references, venues, years), authors, name)

    @property
    def author_array(self) -> np.ndarray:
        return np.asarray(sorted(self.authors), dtype=np.int64)

    def is_empty(self) -> bool:
        return all(len(x) == 0 for x in self.neighbors)

    def validate(self, catalog: NodeCatalog) -> None:
        for t, xs in zip(INFO_TYPES, self.neighbors):
            if len(xs) and np.any(catalog.types[xs] != int(t)):
                raise ValueError(f"paper {self.paper}: neighbour of wrong type in {t.tsv_name} set")
        for a in self.authors:
            if catalog.types[a] != int(NodeType.AUTHOR):
                raise ValueError(f"paper {self.paper}: {a} is not an author")


@dataclass
class EmbeddingModel:
    U: np.ndarray               # (N, D) node embeddings
    w: np.ndarray               # (N_INFO,) type-combination weights
    b: np.ndarray               # (R,) per-path biases
    paths: list[str] = field(default_factory=list)

    @classmethod
    def initialize(cls, n_nodes: int, dim: int, paths=(), seed: int = 0) -> "EmbeddingModel":
        rng = np.random.default_rng(seed)
        U = rng.uniform(-0.5 / dim, 0.5 / dim, size=(n_nodes, dim))
        return cls(U, np.full(N_INFO, 1.0 / N_INFO), np.zeros(len(paths)), list(paths))

    @property
    def dim(self) -> int:
        return self.U.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.U.shape[0]

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.U.copy(), self.w.copy(), self.b.copy(), list(self.paths))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.U).all() and np.isfinite(self.w).all()
                    and np.isfinite(self.b).all())

    def identical_to(self, other: "EmbeddingModel") -> bool:
        return (np.array_equal(self.U, other.U) and np.array_equal(self.w, other.w)
                and np.array_equal(self.b, other.b) and self.paths == other.paths)


@dataclass
class GradientBundle:
    """Sparse gradient: touched embedding rows, type weights, path biases."""

    rows: dict[int, np.ndarray] = field(default_factory=dict)
    w: np.ndarray = field(default_factory=lambda: np.zeros(N_INFO))
    b: dict[int, float] = field(default_factory=dict)

    def add_row(self, node: int, g) -> None:
        node = int(node)
        if node in self.rows:
            self.rows[node] = self.rows[node] + g
        else:
            self.rows[node] = np.array(g, dtype=np.float64)

    def is_zero(self) -> bool:
        return (all(not np.any(g) for g in self.rows.values()) and not np.any(self.w)
                and not any(self.b.values()))

    def is_finite(self) -> bool:
        return (all(np.isfinite(g).all() for g in self.rows.values())
                and np.isfinite(self.w).all() and all(np.isfinite(v) for v in self.b.values()))


# ------------------------------------------------------------------ task side

def type_means(inst: PaperInstance, model: EmbeddingModel) -> np.ndarray:
    """Per-type mean neighbour embedding, zero rows for absent types."""
    out = np.zeros((N_INFO, model.dim))
    for t, xs in enumerate(inst.neighbors):
        if len(xs):
            out[t] = model.U[xs].mean(axis=0)
    return out


def paper_repr(inst: PaperInstance, model: EmbeddingModel) -> np.ndarray:
    if inst.is_empty():
        raise EmptyInstance(f"paper {inst.paper} has no observed neighbours")
    return model.w @ type_means(inst, model)


def score(inst: PaperInstance, author: int, model: EmbeddingModel) -> float:
    if not 0 <= author < model.n_nodes:
        raise UnknownAuthor(f"author {author} has no embedding row")
    return float(model.U[author] @ paper_repr(inst, model))


def hinge_loss(f_pos: float, f_neg: float, margin: float) -> float:
    return max(0.0, f_neg - f_pos + margin)


def task_gradients(triple, inst: PaperInstance, model: EmbeddingModel,
                   margin: float) -> GradientBundle:
    """Gradient of the hinge loss for one (paper, author, non-author) triple.

    All participating rows are present; they are zero when the margin holds.
    """
    a, a_neg = triple.a, triple.a_neg
    vt = type_means(inst, model)
    vp = model.w @ vt
    u_a, u_neg = model.U[a], model.U[a_neg]
    active = float(u_neg @ vp - u_a @ vp + margin > 0)
    diff = u_neg - u_a

    g = GradientBundle()
    g.add_row(a, -active * vp)
    g.add_row(a_neg, active * vp)
    for t, xs in enumerate(inst.neighbors):
        if len(xs) == 0:
            continue
        coef = active * model.w[t] / len(xs)
        for n in xs:
            g.add_row(n, coef * diff)
        g.w[t] = active * (diff @ vt[t])
    return g


# ------------------------------------------------------------------ network side

def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def log_sigmoid(x):
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


def nce_log_prob(i: int, j: int, negs, r: int, model: EmbeddingModel) -> float:
    """Negative-sampling estimate of log P(j | i; r)."""
    U, br = model.U, model.b[r]
    negs = np.asarray(negs, dtype=np.int64)
    pos = log_sigmoid(U[i] @ U[j] + br)
    neg = log_sigmoid(-(U[negs] @ U[i]) - br).sum()
    return float(pos + neg)


def net_gradients(i: int, j: int, negs, r: int, model: EmbeddingModel) -> GradientBundle:
    """Gradient of ``nce_log_prob`` (likelihood-ascent direction)."""
    U, br = model.U, model.b[r]
    negs = np.asarray(negs, dtype=np.int64)
    u_i = U[i]
    g_pos = 1.0 - float(sigmoid(u_i @ U[j] + br))
    s_neg = sigmoid(U[negs] @ u_i + br)

    g = GradientBundle()
    g.add_row(i, g_pos * U[j] - s_neg @ U[negs])
    g.add_row(j, g_pos * u_i)
    for jn, s in zip(negs, s_neg):
        g.add_row(jn, -s * u_i)
    g.b[r] = g_pos - float(s_neg.sum())
    return g


def exact_log_prob(i: int, j: int, dst_nodes, model: EmbeddingModel) -> float:
    """Full-softmax log P(j | i) over ``dst_nodes``; a test oracle for tiny graphs."""
    dst_nodes = np.asarray(dst_nodes, dtype=np.int64)
    logits = model.U[dst_nodes] @ model.U[i]
    return float(model.U[i] @ model.U[j] - np.logaddexp.reduce(logits))


# ------------------------------------------------------------------ update

def apply_update(model: EmbeddingModel, bundle: GradientBundle, lr: float, lam: float,
                 direction: Literal["ascent", "descent"]) -> None:
    """SGD step with L2 shrinkage on the touched embedding rows only."""
    if direction not in ("ascent", "descent"):
        raise ValueError(f"direction must be 'ascent' or 'descent', got {direction!r}")
    if not bundle.is_finite():
        raise NonFiniteUpdate("gradient contains NaN or Inf")
    sign = 1.0 if direction == "ascent" else -1.0
    with np.errstate(over="ignore", invalid="ignore"):
        new_rows = {n: model.U[n] + lr * (sign * g - 2.0 * lam * model.U[n])
                    for n, g in bundle.rows.items()}
        new_w = model.w + sign * lr * bundle.w
        new_b = {r: model.b[r] + sign * lr * v for r, v in bundle.b.items()}
    if not (all(np.isfinite(v).all() for v in new_rows.values())
            and np.isfinite(new_w).all() and all(np.isfinite(v) for v in new_b.values())):
        raise NonFiniteUpdate("update would produce NaN or Inf parameters")
    for n, v in new_rows.items():
        model.U[n] = v
    if np.any(bundle.w):
        model.w[:] = new_w
    for r, v in new_b.items():
        model.b[r] = v
