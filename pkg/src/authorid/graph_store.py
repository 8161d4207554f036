"""Typed node catalog, typed edge set and the on-disk graph store.

The bibliographic schema is a star centred on papers::

    author --P-A-- paper --P-W-- keyword
                   |  \\
                 P-V  P-Y ... plus P-P (citing -> cited)

Nodes carry an external string id which is remapped to a dense integer
id in file order.  Edges are always stored with the paper on the source
side; the only paper-paper link is a citation and keeps its direction.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateNodeId,
    MalformedLine,
    SchemaViolation,
    UnknownNode,
    UnknownNodeType,
)


class NodeType(IntEnum):
    PAPER = 0
    AUTHOR = 1
    KEYWORD = 2
    VENUE = 3
    YEAR = 4

    @property
    def code(self) -> str:
        return _TYPE_CODES[self]

    @property
    def tsv_name(self) -> str:
        return self.name.lower()

    @classmethod
    def from_code(cls, code: str) -> "NodeType":
        return _CODE_TYPES[code]


_TYPE_CODES = {NodeType.PAPER: "P", NodeType.AUTHOR: "A", NodeType.KEYWORD: "W",
               NodeType.VENUE: "V", NodeType.YEAR: "Y"}
_CODE_TYPES = {v: k for k, v in _TYPE_CODES.items()}
_TSV_TYPES = {t.tsv_name: t for t in NodeType}


class LinkType(IntEnum):
    PA = 0
    PP = 1
    PV = 2
    PW = 3
    PY = 4

    @property
    def label(self) -> str:
        return "P-" + self.name[1]

    @property
    def endpoints(self) -> tuple[NodeType, NodeType]:
        return NodeType.PAPER, NodeType.from_code(self.name[1])

    @classmethod
    def from_label(cls, label: str) -> "LinkType":
        return _LABEL_LINKS[label]

    @classmethod
    def between(cls, a: NodeType, b: NodeType) -> "LinkType | None":
        """Schema link joining two node types (in either order), if any."""
        if a == NodeType.PAPER:
            other = b
        elif b == NodeType.PAPER:
            other = a
        else:
            return None
        return _LABEL_LINKS.get("P-" + other.code)


_LABEL_LINKS = {lt.label: lt for lt in LinkType}


@dataclass
class NodeCatalog:
    """Dense-id node universe with per-(node, link type) degree counts."""

    ids: list[str]
    types: np.ndarray                     # int8, one NodeType per node
    labels: list[str]
    degrees: np.ndarray | None = None     # (N, len(LinkType)) int64, set by attach_edges
    index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.index:
            self.index = {ext: i for i, ext in enumerate(self.ids)}
        if self.degrees is None:
            self.degrees = np.zeros((len(self.ids), len(LinkType)), dtype=np.int64)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def per_type_counts(self) -> dict[NodeType, int]:
        counts = np.bincount(self.types, minlength=len(NodeType))
        return {t: int(counts[t]) for t in NodeType}

    def lookup(self, external_id: str) -> int:
        try:
            return self.index[external_id]
        except KeyError:
            raise UnknownNode(f"unknown node {external_id!r}") from None

    def node_type(self, node: int) -> NodeType:
        self._check(node)
        return NodeType(int(self.types[node]))

    def nodes_of_type(self, node_type: NodeType) -> np.ndarray:
        return np.flatnonzero(self.types == int(node_type))

    def degree(self, node: int, link_type: LinkType) -> int:
        self._check(node)
        return int(self.degrees[node, int(link_type)])

    def attach_edges(self, edges: "EdgeSet") -> None:
        self.degrees = edges.degree_table(len(self))

    def _check(self, node: int) -> None:
        if not 0 <= node < len(self.ids):
            raise UnknownNode(f"node id {node} outside 0..{len(self.ids) - 1}")

    def __eq__(self, other):
        if not isinstance(other, NodeCatalog):
            return NotImplemented
        return (self.ids == other.ids and self.labels == other.labels
                and np.array_equal(self.types, other.types)
                and np.array_equal(self.degrees, other.degrees))


@dataclass
class EdgeSet:
    """Parallel arrays of typed, weighted edges (paper always on the src side)."""

    src: np.ndarray
    dst: np.ndarray
    link: np.ndarray
    weight: np.ndarray

    @classmethod
    def empty(cls) -> "EdgeSet":
        return cls(np.zeros(0, np.int64), np.zeros(0, np.int64),
                   np.zeros(0, np.int8), np.zeros(0, np.float64))

    def __len__(self) -> int:
        return len(self.src)

    def of_type(self, link_type: LinkType) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m = self.link == int(link_type)
        return self.src[m], self.dst[m], self.weight[m]

    def count(self, link_type: LinkType) -> int:
        return int(np.count_nonzero(self.link == int(link_type)))

    def degree_table(self, n_nodes: int) -> np.ndarray:
        """Incident-edge counts per node and link type.

        Each edge counts once at each endpoint, so for the P-P citation
        link a paper's degree is citations made plus citations received.
        """
        deg = np.zeros((n_nodes, len(LinkType)), dtype=np.int64)
        np.add.at(deg, (self.src, self.link.astype(np.int64)), 1)
        np.add.at(deg, (self.dst, self.link.astype(np.int64)), 1)
        return deg

    def drop_nodes(self, nodes) -> "EdgeSet":
        """Edges not touching any of ``nodes`` (used for temporal holdouts)."""
        nodes = np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes,
                           dtype=np.int64)
        keep = ~(np.isin(self.src, nodes) | np.isin(self.dst, nodes))
        return EdgeSet(self.src[keep], self.dst[keep], self.link[keep], self.weight[keep])


def degree(catalog: NodeCatalog, node: int, link_type: LinkType) -> int:
    return catalog.degree(node, link_type)


# ---------------------------------------------------------------- TSV input

def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            yield lineno, line


def load_nodes(path) -> NodeCatalog:
    """Read ``<external_id>\\t<type>\\t<label>`` rows; ids are dense in file order."""
    ids, types, labels = [], [], []
    seen: dict[str, int] = {}
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) not in (2, 3) or not parts[0]:
            raise MalformedLine(path, lineno, f"expected 3 tab-separated fields, got {len(parts)}")
        ext, tname = parts[0], parts[1]
        if ext in seen:
            raise DuplicateNodeId(path, lineno, f"duplicate node id {ext!r} "
                                                f"(first seen on line {seen[ext]})")
        try:
            ntype = _TSV_TYPES[tname]
        except KeyError:
            raise UnknownNodeType(path, lineno, f"unknown node type {tname!r}") from None
        seen[ext] = lineno
        ids.append(ext)
        types.append(int(ntype))
        labels.append(parts[2] if len(parts) == 3 else "")
    return NodeCatalog(ids, np.asarray(types, dtype=np.int8), labels)


def load_edges(path, catalog: NodeCatalog) -> EdgeSet:
    """Read ``<src>\\t<dst>\\t<link_type>[\\t<weight>]`` rows and attach degrees to ``catalog``."""
    src, dst, link, weight = [], [], [], []
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) not in (3, 4):
            raise MalformedLine(path, lineno, f"expected 3 or 4 tab-separated fields, got {len(parts)}")
        try:
            lt = LinkType.from_label(parts[2])
        except KeyError:
            raise MalformedLine(path, lineno, f"unknown link type {parts[2]!r}") from None
        w = 1.0
        if len(parts) == 4:
            try:
                w = float(parts[3])
            except ValueError:
                raise MalformedLine(path, lineno, f"bad weight {parts[3]!r}") from None
            if not (w > 0 and np.isfinite(w)):
                raise MalformedLine(path, lineno, f"weight must be positive, got {parts[3]!r}")
        try:
            s = catalog.lookup(parts[0])
            d = catalog.lookup(parts[1])
        except UnknownNode as exc:
            raise UnknownNode(f"{path}:{lineno}: {exc}") from None
        _check_schema(catalog, s, d, lt, where=f"{path}:{lineno}")
        src.append(s)
        dst.append(d)
        link.append(int(lt))
        weight.append(w)
    edges = EdgeSet(np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64),
                    np.asarray(link, dtype=np.int8), np.asarray(weight, dtype=np.float64))
    catalog.attach_edges(edges)
    return edges


def _check_schema(catalog, s, d, lt, where=""):
    want_src, want_dst = lt.endpoints
    got_src, got_dst = NodeType(int(catalog.types[s])), NodeType(int(catalog.types[d]))
    if (got_src, got_dst) != (want_src, want_dst):
        raise SchemaViolation(f"{where}: {lt.label} edge needs {want_src.tsv_name}->"
                              f"{want_dst.tsv_name}, got {got_src.tsv_name}->{got_dst.tsv_name}")
    if s == d:
        raise SchemaViolation(f"{where}: self-loop on {catalog.ids[s]!r}")


def build_edges(catalog: NodeCatalog, triples) -> EdgeSet:
    """EdgeSet from in-memory ``(src_id, dst_id, LinkType[, weight])`` tuples of dense ids."""
    src, dst, link, weight = [], [], [], []
    for t in triples:
        s, d, lt = int(t[0]), int(t[1]), LinkType(t[2])
        _check_schema(catalog, s, d, lt)
        src.append(s)
        dst.append(d)
        link.append(int(lt))
        weight.append(float(t[3]) if len(t) > 3 else 1.0)
    edges = EdgeSet(np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64),
                    np.asarray(link, dtype=np.int8), np.asarray(weight, dtype=np.float64))
    catalog.attach_edges(edges)
    return edges


# ---------------------------------------------------------------- TSV output

def write_nodes(catalog: NodeCatalog, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ext, t, label in zip(catalog.ids, catalog.types, catalog.labels):
            fh.write(f"{ext}\t{NodeType(int(t)).tsv_name}\t{label}\n")


def write_edges(catalog: NodeCatalog, edges: EdgeSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s, d, lt, w in zip(edges.src, edges.dst, edges.link, edges.weight):
            label = LinkType(int(lt)).label
            if w == 1.0:
                fh.write(f"{catalog.ids[s]}\t{catalog.ids[d]}\t{label}\n")
            else:
                fh.write(f"{catalog.ids[s]}\t{catalog.ids[d]}\t{label}\t{w!r}\n")


# ---------------------------------------------------------------- binary store
#
# layout (all little-endian):
#   b"HNE1" | u32 version | u64 N
#   N x (u8 type | u32 len | id utf-8 | u32 len | label utf-8)
#   u32 n_sections, then per link type:
#     u8 link | u64 n_edges | (N+1) x u64 indptr | n_edges x u64 dst | n_edges x f64 weight

STORE_MAGIC = b"HNE1"
STORE_VERSION = 1


def save_store(path, catalog: NodeCatalog, edges: EdgeSet) -> None:
    n = len(catalog)
    buf = io.BytesIO()
    buf.write(STORE_MAGIC)
    buf.write(struct.pack("<IQ", STORE_VERSION, n))
    for ext, t, label in zip(catalog.ids, catalog.types, catalog.labels):
        e, lb = ext.encode("utf-8"), label.encode("utf-8")
        buf.write(struct.pack("<BI", int(t), len(e)))
        buf.write(e)
        buf.write(struct.pack("<I", len(lb)))
        buf.write(lb)
    buf.write(struct.pack("<I", len(LinkType)))
    for lt in LinkType:
        src, dst, w = edges.of_type(lt)
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(n + 1, dtype="<u8")
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        buf.write(struct.pack("<BQ", int(lt), len(src)))
        buf.write(indptr.tobytes())
        buf.write(dst[order].astype("<u8").tobytes())
        buf.write(w[order].astype("<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_store(path) -> tuple[NodeCatalog, EdgeSet]:
    data = memoryview(Path(path).read_bytes())
    if bytes(data[:4]) != STORE_MAGIC:
        raise ValueError(f"{path}: not a graph store (bad magic)")
    version, n = struct.unpack_from("<IQ", data, 4)
    if version != STORE_VERSION:
        raise ValueError(f"{path}: unsupported store version {version}")
    off = 16
    ids, types, labels = [], [], []
    for _ in range(n):
        t, ln = struct.unpack_from("<BI", data, off)
        off += 5
        ids.append(bytes(data[off:off + ln]).decode("utf-8"))
        off += ln
        (ln,) = struct.unpack_from("<I", data, off)
        off += 4
        labels.append(bytes(data[off:off + ln]).decode("utf-8"))
        off += ln
        types.append(t)
    (n_sections,) = struct.unpack_from("<I", data, off)
    off += 4
    parts = []
    for _ in range(n_sections):
        lt, m = struct.unpack_from("<BQ", data, off)
        off += 9
        indptr = np.frombuffer(data, dtype="<u8", count=n + 1, offset=off).astype(np.int64)
        off += 8 * (n + 1)
        dst = np.frombuffer(data, dtype="<u8", count=m, offset=off).astype(np.int64)
        off += 8 * m
        w = np.frombuffer(data, dtype="<f8", count=m, offset=off).astype(np.float64)
        off += 8 * m
        src = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
        parts.append((src, dst, np.full(m, lt, dtype=np.int8), w))
    catalog = NodeCatalog(ids, np.asarray(types, dtype=np.int8), labels)
    if parts:
        edges = EdgeSet(*(np.concatenate(col) for col in zip(*parts)))
    else:
        edges = EdgeSet.empty()
    catalog.attach_edges(edges)
    return catalog, edges
