"""Seeded synthetic graph families used by tests and the synthetic benchmark."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .graph import Graph
from .preprocess import FilterLimits, canonicalize_features, filter_graph

FAMILIES = ("erdos_renyi", "barabasi_albert", "cycle", "tree", "star")

_MAX_RETRIES = 1000


def _cycle(n, rng):
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return [(i, (i + 1) % n) for i in range(n)]


def _star(n, rng):
    if n < 2:
        raise ValueError("star needs n >= 2")
    return [(0, i) for i in range(1, n)]


def _tree(n, rng):
    # random recursive tree: node i attaches to a uniform earlier node
    if n < 2:
        raise ValueError("tree needs n >= 2")
    return [(int(rng.integers(0, i)), i) for i in range(1, n)]


def _erdos_renyi(n, rng, p):
    if n < 2 or not 0.0 < p <= 1.0:
        raise ValueError("erdos_renyi needs n >= 2 and 0 < p <= 1")
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.shape[0]) < p
    return list(zip(iu[mask].tolist(), ju[mask].tolist()))


def _barabasi_albert(n, rng, m):
    """Star on m+1 nodes, then each new node links to m distinct nodes by degree."""
    if m < 1 or n < m + 2:
        raise ValueError("barabasi_albert needs m >= 1 and n >= m + 2")
    edges = [(0, i) for i in range(1, m + 1)]
    degree = np.zeros(n)
    degree[0] = m
    degree[1:m + 1] = 1
    for v in range(m + 1, n):
        p = degree[:v] / degree[:v].sum()
        targets = rng.choice(v, size=m, replace=False, p=p)
        for t in sorted(int(t) for t in targets):
            edges.append((t, v))
            degree[t] += 1
        degree[v] = m
    return edges


def synth_graph(
    family: str,
    params: Optional[dict] = None,
    seed: int = 0,
    *,
    y: int = 0,
    origin_id: str = "",
    require_keep: bool = True,
    limits: FilterLimits = FilterLimits(),
) -> Graph:
    """Deterministic graph from ``family`` with ``params``.

    ``params`` takes ``n`` plus family extras (``p`` for erdos_renyi, ``m`` for
    barabasi_albert) and optionally ``d_x``: when given, node features are
    uniform random rows normalized to unit L1 norm, otherwise the all-ones
    features of featureless datasets. With ``require_keep`` the generator
    redraws from the same stream until the graph passes :func:`filter_graph`.
    """
    params = dict(params or {})
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    n = int(params.pop("n"))
    d_x = params.pop("d_x", None)
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    extra = {}
    if family == "erdos_renyi":
        extra["p"] = float(params.pop("p"))
    elif family == "barabasi_albert":
        extra["m"] = int(params.pop("m"))
    if params:
        raise ValueError(f"unexpected parameters for {family}: {sorted(params)}")
    build = {
        "erdos_renyi": _erdos_renyi,
        "barabasi_albert": _barabasi_albert,
        "cycle": _cycle,
        "tree": _tree,
        "star": _star,
    }[family]
    for _ in range(_MAX_RETRIES):
        edges = build(n, rng, **extra)
        if d_x is None:
            x = canonicalize_features(None, None, n_nodes=n)
        else:
            x = canonicalize_features(rng.random((n, int(d_x))), None)
        g = Graph.from_edges(n, edges, x, y, origin_id)
        if not require_keep or filter_graph(g, limits).keep:
            return g
    raise ValueError(f"{family} with {extra} never produced a graph passing the filters")
