"""Fault-tolerant connectivity labels under vertex failures."""

from .graph import Graph, GraphParseError, InvalidQueryError, generate, load_edge_list, oracle_connected
from .decomp import DecompError, DecompResult, check_decomp, decomp
from .hierarchy import (
    BaseHierarchy,
    CoarseHierarchy,
    ColorPartition,
    HierarchyError,
    build_base_hierarchy,
    coarsen,
    derandomized_partition,
    psi,
    random_partition,
)
from .auxgraph import AuxGraph, build_aux_graph, query_graph, sparsify_orient
from .sketch import Sketch, SketchParams, get_edge, merge, sketch_of, sketch_of_single
from .labels import FinalLabel, build_labels, decode_label, encode_label, label_stats
from .query import answer, answer_bytes, answer_labels

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "GraphParseError",
    "InvalidQueryError",
    "generate",
    "load_edge_list",
    "oracle_connected",
    "decomp",
    "DecompError",
    "DecompResult",
    "check_decomp",
    "BaseHierarchy",
    "CoarseHierarchy",
    "ColorPartition",
    "HierarchyError",
    "build_base_hierarchy",
    "coarsen",
    "derandomized_partition",
    "psi",
    "random_partition",
    "AuxGraph",
    "build_aux_graph",
    "query_graph",
    "sparsify_orient",
    "Sketch",
    "SketchParams",
    "get_edge",
    "merge",
    "sketch_of",
    "sketch_of_single",
    "FinalLabel",
    "build_labels",
    "decode_label",
    "encode_label",
    "label_stats",
    "answer",
    "answer_bytes",
    "answer_labels",
]
