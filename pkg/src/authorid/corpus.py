"""Paper instances: building them from the graph, splitting, and file IO.

Instance file rows (UTF-8, tab-separated, comma-separated id lists)::

    <paper_id>  <authors>  <keywords>  <references>  <venues>  <years>

Lines starting with ``#`` are comments.  The paper id may be outside the
catalog (held-out papers never enter the training graph); neighbour and
author ids that the catalog does not know are dropped and counted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MalformedLine
from .graph_store import EdgeSet, LinkType, NodeCatalog, NodeType
from .objectives import INFO_TYPES, PaperInstance

INFO_LINKS = (LinkType.PW, LinkType.PP, LinkType.PV, LinkType.PY)
_HEADER = "#paper\tauthors\tkeywords\treferences\tvenues\tyears\n"


def _group_by_src(edges: EdgeSet, lt: LinkType, n_nodes: int):
    src, dst, _ = edges.of_type(lt)
    order = np.argsort(src, kind="stable")
    ptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n_nodes), out=ptr[1:])
    return ptr, dst[order]


def instances_from_graph(catalog: NodeCatalog, edges: EdgeSet, papers=None) -> list[PaperInstance]:
    """One instance per paper that has at least one author and one neighbour."""
    n = len(catalog)
    groups = {lt: _group_by_src(edges, lt, n) for lt in (LinkType.PA, *INFO_LINKS)}
    if papers is None:
        papers = catalog.nodes_of_type(NodeType.PAPER)
    out = []
    for p in papers:
        p = int(p)
        ptr, dst = groups[LinkType.PA]
        authors = dst[ptr[p]:ptr[p + 1]]
        neigh = tuple(groups[lt][1][groups[lt][0][p]:groups[lt][0][p + 1]] for lt in INFO_LINKS)
        if len(authors) == 0 or all(len(x) == 0 for x in neigh):
            continue
        out.append(PaperInstance(p, neigh, frozenset(authors.tolist()), catalog.ids[p]))
    return out


def paper_years(catalog: NodeCatalog, edges: EdgeSet) -> np.ndarray:
    """Numeric publication year per node (``nan`` for non-papers or unknown)."""
    years = np.full(len(catalog), np.nan)
    src, dst, _ = edges.of_type(LinkType.PY)
    for p, y in zip(src, dst):
        years[p] = _year_value(catalog, int(y))
    return years


def _year_value(catalog, node):
    for text in (catalog.labels[node], catalog.ids[node]):
        try:
            return float(text)
        except ValueError:
            digits = "".join(ch for ch in text if ch.isdigit())
            if digits:
                return float(digits)
    return np.nan


@dataclass
class Holdout:
    """Training view with the most recent year of papers held out for validation."""

    catalog: NodeCatalog
    edges: EdgeSet
    train: list[PaperInstance]
    valid: list[PaperInstance]
    valid_year: float


def temporal_holdout(catalog: NodeCatalog, edges: EdgeSet,
                     instances: list[PaperInstance] | None = None) -> Holdout:
    """Hold out the last-year slice of papers; their edges leave the training graph."""
    if instances is None:
        instances = instances_from_graph(catalog, edges)
    years = paper_years(catalog, edges)
    inst_years = np.array([years[i.paper] for i in instances])
    if np.all(np.isnan(inst_years)):
        raise ValueError("no paper has a year; cannot build a temporal holdout")
    last = np.nanmax(inst_years)
    valid = [i for i, y in zip(instances, inst_years) if y == last]
    train = [i for i, y in zip(instances, inst_years) if y != last]
    if not train:
        raise ValueError("temporal holdout left no training papers")
    held = np.array([i.paper for i in valid], dtype=np.int64)
    kept = edges.drop_nodes(held)
    view = NodeCatalog(catalog.ids, catalog.types, catalog.labels, index=catalog.index)
    view.attach_edges(kept)
    # validation references must point at training papers only
    held_set = set(held.tolist())
    valid = [PaperInstance(i.paper,
                           (i.neighbors[0], np.array([r for r in i.neighbors[1] if r not in held_set]),
                            i.neighbors[2], i.neighbors[3]),
                           i.authors, i.name) for i in valid]
    valid = [i for i in valid if not i.is_empty()]
    return Holdout(view, kept, train, valid, float(last))


# ------------------------------------------------------------------ file IO

@dataclass
class InstanceFileStats:
    papers: int = 0
    unknown_neighbors: int = 0
    unknown_authors: int = 0


def load_instances(path, catalog: NodeCatalog) -> tuple[list[PaperInstance], InstanceFileStats]:
    stats = InstanceFileStats()
    out = []
    fh = path if hasattr(path, "read") else open(path, encoding="utf-8")
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 6:
                raise MalformedLine(path, lineno, f"expected 6 tab-separated fields, got {len(parts)}")
            name = parts[0]
            paper = catalog.index.get(name, -1)
            fields = []
            for col, want in zip(parts[1:], (NodeType.AUTHOR,) + INFO_TYPES):
                ids = []
                for ext in filter(None, col.split(",")):
                    node = catalog.index.get(ext)
                    if node is None:
                        if want == NodeType.AUTHOR:
                            stats.unknown_authors += 1
                        else:
                            stats.unknown_neighbors += 1
                        continue
                    if catalog.types[node] != int(want):
                        raise MalformedLine(path, lineno, f"{ext!r} is not a {want.tsv_name}")
                    ids.append(node)
                fields.append(ids)
            out.append(PaperInstance(paper, tuple(fields[1:]), frozenset(fields[0]), name))
            stats.papers += 1
    return out, stats


def write_instances(instances, catalog: NodeCatalog, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_HEADER)
        for inst in instances:
            name = inst.name or catalog.ids[inst.paper]
            cols = [",".join(catalog.ids[a] for a in inst.author_array)]
            cols += [",".join(catalog.ids[n] for n in xs) for xs in inst.neighbors]
            fh.write(name + "\t" + "\t".join(cols) + "\n")
