"""Reader and writer for the TUDataset flat-file layout.

Files for dataset ``DS`` (all ASCII, LF or CRLF):

* ``DS_A.txt``: ``i, j`` per line, 1-indexed global node ids, both directions
* ``DS_graph_indicator.txt``: 1-indexed graph id of each node
* ``DS_graph_labels.txt``: one label per graph; multi-task sets put several
  comma-separated labels on a line, ``nan`` marking a missing label
* ``DS_node_labels.txt`` (optional): one integer per node
* ``DS_node_attributes.txt`` (optional): comma-separated reals per node
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .graph import Graph
from .preprocess import canonicalize_features


class DatasetError(Exception):
    pass


class IngestionError(DatasetError):
    """A mandatory file is missing or unreadable."""


class MalformedDatasetError(DatasetError):
    """File contents violate the layout; the message carries file and line."""


@dataclass
class LabeledDataset:
    """Graphs of one source dataset plus the full per-graph label matrix.

    ``labels`` has shape (n_graphs, n_tasks); NaN marks a missing label.
    """

    name: str
    graphs: list
    labels: np.ndarray
    meta_domain: str = ""

    @property
    def n_tasks(self) -> int:
        return self.labels.shape[1]


def _lines(path: Path) -> list[str]:
    with open(path, "r", encoding="ascii", newline=None) as fh:
        text = fh.read()
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    return lines


def _require(directory: Path, name: str, suffix: str) -> Path:
    path = directory / f"{name}_{suffix}.txt"
    if not path.is_file():
        raise IngestionError(f"missing mandatory file {path.name} in {directory}")
    return path


def _optional(directory: Path, name: str, suffix: str) -> Optional[Path]:
    path = directory / f"{name}_{suffix}.txt"
    return path if path.is_file() else None


def _parse_ints(path: Path, per_line: Optional[int] = None) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(_lines(path), start=1):
        parts = [p for p in line.replace(",", " ").split()]
        if per_line is not None and len(parts) != per_line:
            raise MalformedDatasetError(f"{path.name}:{lineno}: expected {per_line} values, got {len(parts)}")
        try:
            rows.append([int(p) for p in parts])
        except ValueError:
            raise MalformedDatasetError(f"{path.name}:{lineno}: not an integer: {line.strip()!r}") from None
    return np.asarray(rows, dtype=np.int64).reshape(len(rows), per_line or (len(rows[0]) if rows else 0))


def _parse_reals(path: Path) -> np.ndarray:
    rows = []
    width = None
    for lineno, line in enumerate(_lines(path), start=1):
        parts = [p.strip() for p in line.split(",")]
        try:
            row = [float(p) for p in parts]
        except ValueError:
            raise MalformedDatasetError(f"{path.name}:{lineno}: not a real number: {line.strip()!r}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MalformedDatasetError(f"{path.name}:{lineno}: expected {width} values, got {len(row)}")
        rows.append(row)
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), -1)


def read_tudataset(directory, name: str, meta_domain: str = "") -> LabeledDataset:
    """Load every graph of ``name`` from ``directory`` with its label matrix."""
    directory = Path(directory)
    a_path = _require(directory, name, "A")
    ind_path = _require(directory, name, "graph_indicator")
    lab_path = _require(directory, name, "graph_labels")
    nl_path = _optional(directory, name, "node_labels")
    at_path = _optional(directory, name, "node_attributes")

    indicator = _parse_ints(ind_path, per_line=1)[:, 0]
    n_total = indicator.shape[0]
    label_matrix = _parse_reals(lab_path)
    n_graphs = label_matrix.shape[0]
    if n_total == 0 or n_graphs == 0:
        raise MalformedDatasetError(f"{name}: dataset holds no nodes or no graphs")
    bad = np.flatnonzero((indicator < 1) | (indicator > n_graphs))
    if bad.size:
        raise MalformedDatasetError(f"{ind_path.name}:{bad[0] + 1}: graph id {indicator[bad[0]]} out of range")
    if np.any(np.diff(indicator) < 0):
        first = int(np.flatnonzero(np.diff(indicator) < 0)[0]) + 2
        raise MalformedDatasetError(f"{ind_path.name}:{first}: graph ids must be non-decreasing")

    edges = _parse_ints(a_path, per_line=2) - 1
    if edges.size:
        bad = np.flatnonzero((edges < 0).any(axis=1) | (edges >= n_total).any(axis=1))
        if bad.size:
            raise MalformedDatasetError(f"{a_path.name}:{bad[0] + 1}: edge references unknown node")
        cross = np.flatnonzero(indicator[edges[:, 0]] != indicator[edges[:, 1]])
        if cross.size:
            raise MalformedDatasetError(f"{a_path.name}:{cross[0] + 1}: edge joins nodes of different graphs")

    node_labels = None
    if nl_path is not None:
        node_labels = _parse_ints(nl_path, per_line=1)[:, 0]
        if node_labels.shape[0] != n_total:
            raise MalformedDatasetError(f"{nl_path.name}: {node_labels.shape[0]} lines for {n_total} nodes")
        node_labels = node_labels - node_labels.min()
    attributes = None
    if at_path is not None:
        attributes = _parse_reals(at_path)
        if attributes.shape[0] != n_total:
            raise MalformedDatasetError(f"{at_path.name}: {attributes.shape[0]} lines for {n_total} nodes")
    n_label_classes = int(node_labels.max()) + 1 if node_labels is not None else None

    gid = indicator - 1
    starts = np.searchsorted(gid, np.arange(n_graphs), side="left")
    stops = np.searchsorted(gid, np.arange(n_graphs), side="right")
    edge_gid = gid[edges[:, 0]] if edges.size else np.zeros(0, dtype=np.int64)
    edge_order = np.argsort(edge_gid, kind="stable")
    edges, edge_gid = edges[edge_order], edge_gid[edge_order]
    e_starts = np.searchsorted(edge_gid, np.arange(n_graphs), side="left")
    e_stops = np.searchsorted(edge_gid, np.arange(n_graphs), side="right")

    graphs = []
    for g in range(n_graphs):
        lo, hi = int(starts[g]), int(stops[g])
        if hi == lo:
            raise MalformedDatasetError(f"{ind_path.name}: graph {g + 1} has no nodes")
        local_edges = edges[e_starts[g]:e_stops[g]] - lo
        nl = None if node_labels is None else node_labels[lo:hi]
        at = None if attributes is None else attributes[lo:hi]
        x = canonicalize_features(at, nl, n_nodes=hi - lo, n_label_classes=n_label_classes)
        first = label_matrix[g, 0]
        y = int(first) if np.isfinite(first) else -1
        graphs.append(Graph.from_edges(hi - lo, local_edges, x, y, f"{name}#{g + 1}", nl))
    return LabeledDataset(name, graphs, label_matrix, meta_domain)


def load_tudataset(directory, name: str) -> list[Graph]:
    return read_tudataset(directory, name).graphs


def _fmt(v: float) -> str:
    if np.isnan(v):
        return "nan"
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def write_tudataset(
    directory,
    name: str,
    graphs: Sequence[Graph],
    labels: Optional[np.ndarray] = None,
    write_attributes: bool = True,
) -> Path:
    """Serialize graphs in the layout :func:`read_tudataset` accepts.

    Node labels are written when every graph carries them; features are
    written as node attributes unless ``write_attributes`` is false.
    """
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)
    if labels is None:
        labels = np.array([[g.y] for g in graphs], dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64).reshape(len(graphs), -1)
    offset = 0
    a_lines, ind_lines, nl_lines, at_lines = [], [], [], []
    with_labels = all(g.node_labels is not None for g in graphs)
    for gi, g in enumerate(graphs, start=1):
        rows = np.repeat(np.arange(g.n_nodes), g.degrees)
        for i, j in zip(rows, g.indices):
            a_lines.append(f"{i + 1 + offset}, {j + 1 + offset}")
        ind_lines.extend([str(gi)] * g.n_nodes)
        if with_labels:
            nl_lines.extend(str(int(v)) for v in g.node_labels)
        if write_attributes:
            at_lines.extend(", ".join(repr(float(v)) for v in row) for row in g.x)
        offset += g.n_nodes

    def dump(suffix, lines):
        (directory / f"{name}_{suffix}.txt").write_text("".join(line + "\n" for line in lines), encoding="ascii")

    dump("A", a_lines)
    dump("graph_indicator", ind_lines)
    dump("graph_labels", [", ".join(_fmt(v) for v in row) for row in labels])
    if with_labels:
        dump("node_labels", nl_lines)
    if write_attributes:
        dump("node_attributes", at_lines)
    return directory
