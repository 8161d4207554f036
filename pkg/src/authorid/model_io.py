"""Embedding files.

``<model>``: first line ``N D``, then ``<external_id> <D floats>`` per node.
``<model>.params``: ``w\\t<type>\\t<value>`` and ``b\\t<path>\\t<value>`` lines.
Floats use the shortest decimal that round-trips exactly.
"""
from __future__ import annotations

import numpy as np

from .graph_store import NodeCatalog
from .objectives import INFO_NAMES, EmbeddingModel


def params_path(path) -> str:
    return f"{path}.params"


def save_model(model: EmbeddingModel, catalog: NodeCatalog, path) -> None:
    n, d = model.U.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{n} {d}\n")
        for ext, row in zip(catalog.ids, model.U):
            fh.write(ext + " " + " ".join(repr(float(x)) for x in row) + "\n")
    with open(params_path(path), "w", encoding="utf-8", newline="\n") as fh:
        for name, v in zip(INFO_NAMES, model.w):
            fh.write(f"w\t{name}\t{float(v)!r}\n")
        for spec, v in zip(model.paths, model.b):
            fh.write(f"b\t{spec}\t{float(v)!r}\n")


def load_model(path, catalog: NodeCatalog) -> EmbeddingModel:
    with open(path, encoding="utf-8") as fh:
        n, d = (int(x) for x in fh.readline().split())
        if n != len(catalog):
            raise ValueError(f"{path}: model has {n} rows, catalog has {len(catalog)} nodes")
        U = np.zeros((n, d))
        for line in fh:
            parts = line.split(" ")
            U[catalog.lookup(parts[0])] = [float(x) for x in parts[1:]]
    w = np.zeros(len(INFO_NAMES))
    paths, b = [], []
    with open(params_path(path), encoding="utf-8") as fh:
        for line in fh:
            kind, key, val = line.rstrip("\n").split("\t")
            if kind == "w":
                w[INFO_NAMES.index(key)] = float(val)
            else:
                paths.append(key)
                b.append(float(val))
    return EmbeddingModel(U, w, np.asarray(b, dtype=np.float64), paths)
