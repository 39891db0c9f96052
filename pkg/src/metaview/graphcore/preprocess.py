"""Feature canonicalization, filtering rules and centrality-based subsampling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .. import kernels
from .graph import Graph, GraphError

ONES_FEATURE_DIM = 16


class SubsampleError(GraphError):
    """Subsampling left fewer than two nodes or no edges."""


def canonicalize_features(
    attributes: Optional[np.ndarray],
    node_labels: Optional[np.ndarray],
    n_nodes: Optional[int] = None,
    n_label_classes: Optional[int] = None,
) -> np.ndarray:
    """Initial node features from whatever the source provides.

    Attributes win over labels; labels become one-hot rows, ``n_label_classes``
    wide (pass the dataset-wide count so every graph agrees). Either way rows
    are scaled to unit L1 norm (zero rows stay zero). With neither, every node
    gets a 16-dim vector of ones, left unnormalized.
    """
    if attributes is not None:
        x = np.array(attributes, dtype=np.float64, ndmin=2)
    elif node_labels is not None:
        labels = np.asarray(node_labels, dtype=np.int64)
        n_classes = n_label_classes or (int(labels.max()) + 1 if labels.size else 1)
        x = np.zeros((labels.shape[0], n_classes))
        x[np.arange(labels.shape[0]), labels] = 1.0
    else:
        if n_nodes is None:
            raise ValueError("n_nodes is required when neither attributes nor labels are given")
        return np.ones((n_nodes, ONES_FEATURE_DIM))
    norms = np.abs(x).sum(axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


@dataclass(frozen=True)
class FilterLimits:
    max_degree: int = 50
    max_feature_dim: int = 100
    min_nodes: int = 2
    min_edges: int = 1
    max_nodes_before_subsample: int = 500

    def __post_init__(self):
        for name in ("max_degree", "max_feature_dim", "min_nodes", "min_edges", "max_nodes_before_subsample"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.min_nodes < 2:
            raise ValueError("min_nodes must be at least 2")


class FilterVerdict(NamedTuple):
    keep: bool
    reason: Optional[str]


# rule order is part of the contract: the first violated rule is reported
FILTER_RULES = ("degree", "feature_dim", "min_nodes", "min_edges", "disconnected")


def filter_graph(g: Graph, limits: FilterLimits = FilterLimits()) -> FilterVerdict:
    if g.degrees.max(initial=0) > limits.max_degree:
        return FilterVerdict(False, "degree")
    if g.d_x > limits.max_feature_dim:
        return FilterVerdict(False, "feature_dim")
    if g.n_nodes < limits.min_nodes:
        return FilterVerdict(False, "min_nodes")
    if g.n_edges < limits.min_edges:
        return FilterVerdict(False, "min_edges")
    if not g.is_connected():
        return FilterVerdict(False, "disconnected")
    return FilterVerdict(True, None)


def harmonic_centrality(g: Graph) -> np.ndarray:
    """score(v) = sum over u != v of 1/dist(u, v), unit edge weights."""
    if not g.is_connected():
        raise GraphError("harmonic centrality requires a connected graph")
    return kernels.harmonic_centrality(g.indptr, g.indices)


def largest_component(g: Graph) -> Graph:
    labels = g.component_labels()
    sizes = np.bincount(labels)
    # labels are numbered by lowest member, so argmax breaks size ties by lowest index
    best = int(np.argmax(sizes))
    if sizes.shape[0] == 1:
        return g
    return g.induced_subgraph(np.flatnonzero(labels == best))


def top_centrality_nodes(g: Graph, k: int) -> np.ndarray:
    scores = harmonic_centrality(g)
    order = np.lexsort((np.arange(g.n_nodes), -scores))
    return np.sort(order[:k])


def subsample_top_nodes(g: Graph, k: int = 500) -> Graph:
    """Keep the ``k`` most harmonic-central nodes, then the largest component.

    Ties in centrality go to the lower node index. Nodes keep their relative
    order from the source graph.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if g.n_nodes <= k:
        return g
    sub = largest_component(g.induced_subgraph(top_centrality_nodes(g, k)))
    if sub.n_nodes < 2 or sub.n_edges < 1:
        raise SubsampleError(f"subsampling {g.origin_id or 'graph'} left a degenerate component")
    return sub


def preprocess_graphs(graphs, limits: FilterLimits = FilterLimits()):
    """Apply the filtering rules, then subsample oversized graphs.

    Returns ``(kept, dropped)`` where ``dropped`` maps origin id to reason.
    """
    kept, dropped = [], {}
    for g in graphs:
        verdict = filter_graph(g, limits)
        if not verdict.keep:
            dropped[g.origin_id] = verdict.reason
            continue
        if g.n_nodes > limits.max_nodes_before_subsample:
            try:
                g = subsample_top_nodes(g, limits.max_nodes_before_subsample)
            except SubsampleError:
                dropped[g.origin_id] = "subsample"
                continue
        kept.append(g)
    return kept, dropped
