"""Meta paths and their path-instance-count adjacencies.

A path is written with single-letter type codes joined by hops, e.g.
``A-P-W`` (author -> paper -> keyword).  Every hop must be a schema link.
The citation link is directed: ``P-P`` follows a citation from the citing
paper to the cited one and ``P<P`` walks it backwards.

The weight of ``(i, k)`` under a composed path is the number of path
instances between them, i.e. the product of hop adjacencies.
"""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    AdjacencyOverflow,
    EmptyAdjacency,
    NoSchemaLink,
    TypeMismatch,
    UnknownTypeCode,
    UnsupportedLength,
)
from .graph_store import EdgeSet, LinkType, NodeType

MAX_PATH_LENGTH = 2

# Length-1 links plus the length-2 paths considered by the original study.
DEFAULT_CANDIDATES = (
    "P-A", "P-P", "P-V", "P-W", "P-Y",
    "A-P-A", "A-P-P", "A-P-V", "A-P-W", "A-P-Y",
    "P-P-V", "P-P-W", "V-P-W", "W-P-W", "Y-P-W",
)


@dataclass(frozen=True)
class MetaPath:
    types: tuple[NodeType, ...]
    backward: tuple[bool, ...]      # per hop; only meaningful on P-P hops

    @property
    def length(self) -> int:
        return len(self.types) - 1

    @property
    def source_type(self) -> NodeType:
        return self.types[0]

    @property
    def dest_type(self) -> NodeType:
        return self.types[-1]

    @property
    def direction_sensitive(self) -> bool:
        return any(a == b == NodeType.PAPER for a, b in zip(self.types, self.types[1:]))

    @property
    def last_link(self) -> LinkType:
        return LinkType.between(self.types[-2], self.types[-1])

    def hops(self):
        for a, b, back in zip(self.types, self.types[1:], self.backward):
            yield a, b, back

    def reverse(self) -> "MetaPath":
        flags = [not self.backward[h] if self._pp(h) else False
                 for h in reversed(range(self.length))]
        return MetaPath(tuple(reversed(self.types)), tuple(flags))

    def _pp(self, hop: int) -> bool:
        return self.types[hop] == self.types[hop + 1] == NodeType.PAPER

    def __add__(self, other: "MetaPath") -> "MetaPath":
        if self.dest_type != other.source_type:
            raise TypeMismatch(f"cannot join {self} with {other}")
        return MetaPath(self.types + other.types[1:], self.backward + other.backward)

    def __str__(self) -> str:
        out = [self.types[0].code]
        for (_, b, back) in self.hops():
            out.append(("<" if back else "-") + b.code)
        return "".join(out)


def parse_path_spec(s: str) -> MetaPath:
    """Parse ``"A-P-W"``-style specs (length 1 or 2)."""
    s = s.strip()
    tokens = re.split(r"([-<])", s)
    codes, seps = tokens[0::2], tokens[1::2]
    types = []
    for code in codes:
        try:
            types.append(NodeType.from_code(code))
        except KeyError:
            raise UnknownTypeCode(f"{s!r}: unknown type code {code!r}") from None
    if not 1 <= len(seps) <= MAX_PATH_LENGTH:
        raise UnsupportedLength(f"{s!r}: path length must be 1..{MAX_PATH_LENGTH}, got {len(seps)}")
    backward = []
    for a, b, sep in zip(types, types[1:], seps):
        if LinkType.between(a, b) is None:
            raise NoSchemaLink(f"{s!r}: no schema link between {a.tsv_name} and {b.tsv_name}")
        if sep == "<" and not (a == b == NodeType.PAPER):
            raise NoSchemaLink(f"{s!r}: '<' only reverses a paper-paper citation hop")
        backward.append(sep == "<")
    return MetaPath(tuple(types), tuple(backward))


def read_path_list(path) -> list[MetaPath]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(parse_path_spec(line))
    return out


@dataclass
class PathAdjacency:
    """Sparse weighted adjacency of one meta path, entries sorted by (i, j)."""

    path: MetaPath
    n_nodes: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    total_raw_weight: float
    normalized: bool = False

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def spec(self) -> str:
        return str(self.path)

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.weights, (self.rows, self.cols)),
                             shape=(self.n_nodes, self.n_nodes))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_nodes, self.n_nodes))
        np.add.at(out, (self.rows, self.cols), self.weights)
        return out

    @classmethod
    def from_csr(cls, path: MetaPath, m: sp.spmatrix, normalized=False) -> "PathAdjacency":
        m = sp.csr_matrix(m)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        coo = m.tocoo()
        w = coo.data.astype(np.float64)
        if not np.all(np.isfinite(w)):
            raise AdjacencyOverflow(f"{path}: non-finite path weight")
        return cls(path, m.shape[0], coo.row.astype(np.int64), coo.col.astype(np.int64),
                   w, float(w.sum()), normalized)


def hop_adjacency(a: NodeType, b: NodeType, backward: bool, edges: EdgeSet,
                  n_nodes: int) -> sp.csr_matrix:
    """Raw adjacency for a single schema hop ``a -> b``."""
    lt = LinkType.between(a, b)
    src, dst, w = edges.of_type(lt)
    if a == b == NodeType.PAPER:
        rows, cols = (dst, src) if backward else (src, dst)
    elif a == NodeType.PAPER:
        rows, cols = src, dst
    else:
        rows, cols = dst, src
    m = sp.csr_matrix((w.astype(np.float64), (rows, cols)), shape=(n_nodes, n_nodes))
    m.sum_duplicates()
    return m


def compose(left: PathAdjacency, right: PathAdjacency) -> PathAdjacency:
    """Path-instance counts of ``left`` followed by ``right``.

    Entry ``(i, k)`` is ``sum_j left(i, j) * right(j, k)``: two links
    i-j and three links j-k give six i-j-k instances.
    """
    if left.normalized or right.normalized:
        raise TypeMismatch("compose expects raw (unnormalized) adjacencies")
    if left.path.dest_type != right.path.source_type:
        raise TypeMismatch(f"{left.spec} ends in {left.path.dest_type.tsv_name} but "
                           f"{right.spec} starts at {right.path.source_type.tsv_name}")
    if left.n_nodes != right.n_nodes:
        raise TypeMismatch("adjacencies built over different node catalogs")
    path = left.path + right.path
    with np.errstate(over="ignore", invalid="ignore"):
        product = left.to_csr() @ right.to_csr()
    return PathAdjacency.from_csr(path, product)


def materialize(path: MetaPath, edges: EdgeSet, n_nodes: int,
                drop_self_loops: bool = True) -> PathAdjacency:
    """Raw path-instance adjacency of ``path`` over ``edges``.

    ``drop_self_loops`` removes ``(i, i)`` entries of same-type paths such
    as A-P-A, which otherwise only count an author's own papers.
    """
    hops = list(path.hops())
    a, b, back = hops[0]
    adj = PathAdjacency.from_csr(MetaPath((a, b), (back,)),
                                 hop_adjacency(a, b, back, edges, n_nodes))
    for a, b, back in hops[1:]:
        nxt = PathAdjacency.from_csr(MetaPath((a, b), (back,)),
                                     hop_adjacency(a, b, back, edges, n_nodes))
        adj = compose(adj, nxt)
    adj = PathAdjacency(path, adj.n_nodes, adj.rows, adj.cols, adj.weights,
                        adj.total_raw_weight)
    if drop_self_loops and path.source_type == path.dest_type:
        keep = adj.rows != adj.cols
        adj = PathAdjacency(path, adj.n_nodes, adj.rows[keep], adj.cols[keep],
                            adj.weights[keep], float(adj.weights[keep].sum()))
    return adj


def normalize(adj: PathAdjacency) -> PathAdjacency:
    if adj.normalized:
        return adj
    if len(adj) == 0 or not adj.total_raw_weight > 0:
        raise EmptyAdjacency(f"{adj.spec}: no positive-weight entries to normalize")
    return PathAdjacency(adj.path, adj.n_nodes, adj.rows, adj.cols,
                         adj.weights / adj.total_raw_weight, adj.total_raw_weight,
                         normalized=True)


def prune(adj: PathAdjacency, min_raw_weight: float) -> PathAdjacency:
    """Drop raw entries lighter than ``min_raw_weight``."""
    if adj.normalized:
        raise ValueError("prune works on raw counts; prune before normalize")
    keep = adj.weights >= min_raw_weight
    w = adj.weights[keep]
    return PathAdjacency(adj.path, adj.n_nodes, adj.rows[keep], adj.cols[keep], w,
                         float(w.sum()))


# ------------------------------------------------------------------ file IO
#
#   b"HNA1" | u32 spec_len | spec utf-8 | u64 n_nodes | u64 count
#   | f64 total_raw_weight | u8 normalized | count x (u64 i, u64 j, f64 w)

_ADJ_MAGIC = b"HNA1"
_ENTRY = np.dtype([("i", "<u8"), ("j", "<u8"), ("w", "<f8")])


def save_adjacency(adj: PathAdjacency, path) -> None:
    spec = adj.spec.encode("utf-8")
    entries = np.empty(len(adj), dtype=_ENTRY)
    entries["i"], entries["j"], entries["w"] = adj.rows, adj.cols, adj.weights
    with open(path, "wb") as fh:
        fh.write(_ADJ_MAGIC)
        fh.write(struct.pack("<I", len(spec)))
        fh.write(spec)
        fh.write(struct.pack("<QQdB", adj.n_nodes, len(adj), adj.total_raw_weight,
                             int(adj.normalized)))
        fh.write(entries.tobytes())


def load_adjacency(path) -> PathAdjacency:
    data = Path(path).read_bytes()
    if data[:4] != _ADJ_MAGIC:
        raise ValueError(f"{path}: not an adjacency file")
    (ln,) = struct.unpack_from("<I", data, 4)
    spec = data[8:8 + ln].decode("utf-8")
    off = 8 + ln
    n_nodes, count, total, normed = struct.unpack_from("<QQdB", data, off)
    off += struct.calcsize("<QQdB")
    entries = np.frombuffer(data, dtype=_ENTRY, count=count, offset=off)
    return PathAdjacency(parse_path_spec(spec), int(n_nodes),
                         entries["i"].astype(np.int64), entries["j"].astype(np.int64),
                         entries["w"].astype(np.float64), float(total), bool(normed))
