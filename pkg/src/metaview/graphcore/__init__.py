"""Graph representation, TUDataset ingestion, filtering and synthetic generators."""
from .generators import FAMILIES, synth_graph
from .graph import Graph, GraphError
from .preprocess import (
    FILTER_RULES,
    FilterLimits,
    FilterVerdict,
    SubsampleError,
    canonicalize_features,
    filter_graph,
    harmonic_centrality,
    largest_component,
    preprocess_graphs,
    subsample_top_nodes,
)
from .tudataset import (
    DatasetError,
    IngestionError,
    LabeledDataset,
    MalformedDatasetError,
    load_tudataset,
    read_tudataset,
    write_tudataset,
)

__all__ = [
    "FAMILIES",
    "FILTER_RULES",
    "DatasetError",
    "FilterLimits",
    "FilterVerdict",
    "Graph",
    "GraphError",
    "IngestionError",
    "LabeledDataset",
    "MalformedDatasetError",
    "SubsampleError",
    "canonicalize_features",
    "filter_graph",
    "harmonic_centrality",
    "largest_component",
    "load_tudataset",
    "preprocess_graphs",
    "read_tudataset",
    "subsample_top_nodes",
    "synth_graph",
    "write_tudataset",
]
