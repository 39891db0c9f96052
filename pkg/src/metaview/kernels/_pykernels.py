"""Reference implementations of the graph kernels in Python/numpy.

These define the semantics; ``_ckernels.pyx`` must agree with them bit for bit.
"""
from collections import deque

import numpy as np


def neighbor_sum(indptr, indices, h):
    """out[v] = sum of h[u] over the CSR row of v, accumulated in row order."""
    h = np.ascontiguousarray(h, dtype=np.float64)
    n = indptr.shape[0] - 1
    out = np.zeros((n, h.shape[1]), dtype=np.float64)
    if indices.shape[0] == 0:
        return out
    starts = indptr[:-1]
    deg = indptr[1:] - starts
    # add the j-th neighbour of every row at once so each row sums in CSR order
    for j in range(int(deg.max())):
        rows = np.flatnonzero(deg > j)
        out[rows] += h[indices[starts[rows] + j]]
    return out


def _bfs_levels(adj, source, n):
    dist = [-1] * n
    dist[source] = 0
    queue = deque([source])
    counts = []
    while queue:
        v = queue.popleft()
        d = dist[v] + 1
        for u in adj[v]:
            if dist[u] < 0:
                dist[u] = d
                if len(counts) < d:
                    counts.append(0)
                counts[d - 1] += 1
                queue.append(u)
    return counts


def harmonic_centrality(indptr, indices):
    """Sum of 1/dist to every reachable node, summed by ascending distance.

    Summing per distance level (count/d) makes the result depend only on the
    distance profile of a node, so structurally tied nodes tie exactly.
    """
    n = indptr.shape[0] - 1
    adj = [indices[indptr[v]:indptr[v + 1]].tolist() for v in range(n)]
    scores = np.zeros(n, dtype=np.float64)
    for v in range(n):
        total = 0.0
        for d, c in enumerate(_bfs_levels(adj, v, n), start=1):
            total += c / d
        scores[v] = total
    return scores


def connected_components(indptr, indices):
    """Component label per node; labels are numbered by lowest member index."""
    n = indptr.shape[0] - 1
    labels = np.full(n, -1, dtype=np.int64)
    current = 0
    for s in range(n):
        if labels[s] >= 0:
            continue
        labels[s] = current
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for u in indices[indptr[v]:indptr[v + 1]]:
                if labels[u] < 0:
                    labels[u] = current
                    queue.append(u)
        current += 1
    return labels
