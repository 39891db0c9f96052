"""Immutable undirected graph with CSR adjacency and node features."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .. import kernels


class GraphError(ValueError):
    """A graph violates a structural precondition."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """An undirected graph.

    ``indptr``/``indices`` hold a symmetric adjacency in CSR form with sorted,
    duplicate-free rows. A self-loop appears once in its row.
    """

    n_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    x: np.ndarray
    y: int = 0
    origin_id: str = ""
    node_labels: Optional[np.ndarray] = None
    _degrees: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_nodes < 1:
            raise GraphError("graph needs at least one node")
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64)
        x = np.asarray(self.x, dtype=np.float64)
        if indptr.shape != (self.n_nodes + 1,):
            raise GraphError("indptr length must be n_nodes + 1")
        if x.ndim != 2 or x.shape[0] != self.n_nodes:
            raise GraphError(f"feature matrix shape {x.shape} does not match {self.n_nodes} nodes")
        if indices.size and (indices.min() < 0 or indices.max() >= self.n_nodes):
            raise GraphError("edge endpoint out of range")
        object.__setattr__(self, "indptr", _frozen(indptr))
        object.__setattr__(self, "indices", _frozen(indices))
        object.__setattr__(self, "x", _frozen(x))
        if self.node_labels is not None:
            object.__setattr__(self, "node_labels", _frozen(np.asarray(self.node_labels, dtype=np.int64)))
        object.__setattr__(self, "_degrees", _frozen(np.diff(indptr)))

    @classmethod
    def from_edges(
        cls,
        n_nodes: int,
        edges: Iterable[tuple[int, int]],
        x: Optional[np.ndarray] = None,
        y: int = 0,
        origin_id: str = "",
        node_labels: Optional[np.ndarray] = None,
    ) -> "Graph":
        """Build from an edge list; each pair is taken as undirected."""
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n_nodes):
            raise GraphError("edge endpoint out of range")
        both = np.concatenate([e, e[:, ::-1]]) if e.size else e
        if both.size:
            # unique rows, sorted by (row, col)
            key = both[:, 0] * n_nodes + both[:, 1]
            key = np.unique(key)
            rows, cols = key // n_nodes, key % n_nodes
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        if x is None:
            x = np.ones((n_nodes, 16))
        return cls(n_nodes, indptr, cols, x, int(y), origin_id, node_labels)

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    @property
    def d_x(self) -> int:
        return self.x.shape[1]

    @property
    def n_edges(self) -> int:
        """Number of undirected edges, self-loops counted once."""
        rows = np.repeat(np.arange(self.n_nodes), self._degrees)
        loops = int(np.count_nonzero(rows == self.indices))
        return (self.indices.shape[0] - loops) // 2 + loops

    def edge_list(self) -> np.ndarray:
        """Undirected edges as (i, j) rows with i <= j."""
        rows = np.repeat(np.arange(self.n_nodes), self._degrees)
        keep = rows <= self.indices
        return np.stack([rows[keep], self.indices[keep]], axis=1)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def dense_adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_nodes, self.n_nodes))
        rows = np.repeat(np.arange(self.n_nodes), self._degrees)
        a[rows, self.indices] = 1.0
        return a

    def component_labels(self) -> np.ndarray:
        return kernels.connected_components(self.indptr, self.indices)

    def is_connected(self) -> bool:
        return self.n_nodes == 1 or int(self.component_labels().max()) == 0

    def induced_subgraph(self, nodes: np.ndarray) -> "Graph":
        """Subgraph on ``nodes``; new node i is ``nodes[i]``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.n_nodes, -1, dtype=np.int64)
        remap[nodes] = np.arange(nodes.shape[0])
        e = self.edge_list()
        keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
        sub_edges = remap[e[keep]]
        labels = None if self.node_labels is None else self.node_labels[nodes]
        return Graph.from_edges(
            nodes.shape[0], sub_edges, self.x[nodes], self.y, self.origin_id, labels
        )

    def permuted(self, perm: np.ndarray) -> "Graph":
        """Relabel nodes so that old node v becomes ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.argsort(perm)
        e = perm[self.edge_list()]
        labels = None if self.node_labels is None else self.node_labels[inv]
        return Graph.from_edges(self.n_nodes, e, self.x[inv], self.y, self.origin_id, labels)

    def with_features(self, x: np.ndarray) -> "Graph":
        return Graph(self.n_nodes, self.indptr, self.indices, x, self.y, self.origin_id, self.node_labels)

    def with_label(self, y: int) -> "Graph":
        return Graph(self.n_nodes, self.indptr, self.indices, self.x, int(y), self.origin_id, self.node_labels)
