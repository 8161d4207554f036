"""Task-guided, path-augmented heterogeneous network embedding for author identification."""

__version__ = "0.1.0"

from .graph_store import (EdgeSet, LinkType, NodeCatalog, NodeType, load_edges, load_nodes,
                          load_store, save_store)
from .metapath import (DEFAULT_CANDIDATES, MetaPath, PathAdjacency, compose, materialize,
                       normalize, parse_path_spec)
from .objectives import EmbeddingModel, PaperInstance
from .trainer import RunReport, TrainConfig, train
from .evaluation import Sampled, WholeSet, evaluate
from .path_selection import SelectionData, select_paths

__all__ = [
    "DEFAULT_CANDIDATES", "EdgeSet", "EmbeddingModel", "LinkType", "MetaPath", "NodeCatalog",
    "NodeType", "PaperInstance", "PathAdjacency", "RunReport", "Sampled", "SelectionData",
    "TrainConfig", "WholeSet", "compose", "evaluate", "load_edges", "load_nodes", "load_store",
    "materialize", "normalize", "parse_path_spec", "save_store", "select_paths", "train",
]
