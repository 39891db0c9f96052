"""Differentiable activations, reductions, graph aggregation and losses."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .. import kernels
from .tensor import Tensor, as_tensor


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return Tensor._make(np.where(mask, a.data, 0.0), (a,), lambda g: a._accumulate(g * mask), "relu")


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = _sigmoid(a.data)
    return Tensor._make(s, (a,), lambda g: a._accumulate(g * s * (1.0 - s)), "sigmoid")


def swish(a) -> Tensor:
    """x * sigmoid(x)."""
    a = as_tensor(a)
    s = _sigmoid(a.data)
    out = a.data * s

    def backward(g):
        a._accumulate(g * (s + out * (1.0 - s)))

    return Tensor._make(out, (a,), backward, "swish")


def softplus(x):
    """Numerically stable log(1 + e^x) on plain floats/arrays."""
    x = np.asarray(x, dtype=np.float64)
    return np.logaddexp(0.0, x)


def softplus_inverse(y):
    y = np.asarray(y, dtype=np.float64)
    return y + np.log(-np.expm1(-y))


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        a._accumulate(p * (g - (g * p).sum(axis=axis, keepdims=True)))

    return Tensor._make(p, (a,), backward, "softmax")


def masked_softmax(a, mask: np.ndarray, axis: int = -1) -> Tensor:
    """Softmax over entries where ``mask`` is true; masked entries get exactly 0.

    Equivalent to setting masked logits to -inf, without producing infinities.
    """
    a = as_tensor(a)
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), a.data.shape)
    if not mask.any(axis=axis).all():
        raise ValueError("every softmax row needs at least one unmasked entry")
    masked = np.where(mask, a.data, -np.inf)
    shifted = np.where(mask, a.data - masked.max(axis=axis, keepdims=True), 0.0)
    e = np.where(mask, np.exp(shifted), 0.0)
    p = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        a._accumulate(p * (g - (g * p).sum(axis=axis, keepdims=True)))

    return Tensor._make(p, (a,), backward, "masked_softmax")


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    p = np.exp(out)

    def backward(g):
        a._accumulate(g - p * g.sum(axis=axis, keepdims=True))

    return Tensor._make(out, (a,), backward, "log_softmax")


def dropout(a, p: float, training: bool, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-p); identity outside training."""
    if not 0.0 <= p < 1.0:
        raise ValueError("dropout probability must lie in [0, 1)")
    a = as_tensor(a)
    if not training or p == 0.0:
        return a
    keep = (rng.random(a.data.shape) >= p) / (1.0 - p)
    return Tensor._make(a.data * keep, (a,), lambda g: a._accumulate(g * keep), "dropout")


def normalize_rows(a, eps: float = 1e-12) -> Tensor:
    """Rows divided by max(L2 norm, eps); an all-zero row stays zero."""
    a = as_tensor(a)
    norm = np.sqrt((a.data * a.data).sum(axis=-1, keepdims=True))
    denom = np.maximum(norm, eps)
    y = a.data / denom
    active = norm > eps

    def backward(g):
        radial = np.where(active, (g * y).sum(axis=-1, keepdims=True), 0.0)
        a._accumulate((g - y * radial) / denom)

    return Tensor._make(y, (a,), backward, "normalize_rows")


# -- graph ops -----------------------------------------------------------------


class Adjacency:
    """Symmetric CSR adjacency, possibly the disjoint union of many graphs."""

    __slots__ = ("indptr", "indices", "n_nodes")

    def __init__(self, indptr: np.ndarray, indices: np.ndarray):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.n_nodes = self.indptr.shape[0] - 1

    @classmethod
    def block_diagonal(cls, parts: Sequence) -> "Adjacency":
        """Disjoint union of objects exposing ``indptr``/``indices``."""
        indptrs, indices, node_off, edge_off = [np.zeros(1, dtype=np.int64)], [], 0, 0
        for p in parts:
            indptrs.append(p.indptr[1:] + edge_off)
            indices.append(p.indices + node_off)
            node_off += p.indptr.shape[0] - 1
            edge_off += p.indices.shape[0]
        return cls(np.concatenate(indptrs), np.concatenate(indices) if indices else np.zeros(0, np.int64))


def neighbor_sum(adj: Adjacency, h) -> Tensor:
    """out[v] = sum of h[u] over neighbours u. Self-adjoint because adj is symmetric."""
    h = as_tensor(h)
    if h.data.shape[0] != adj.n_nodes:
        raise ValueError(f"{h.data.shape[0]} feature rows for {adj.n_nodes} nodes")
    out = kernels.neighbor_sum(adj.indptr, adj.indices, h.data)
    return Tensor._make(
        out, (h,), lambda g: h._accumulate(kernels.neighbor_sum(adj.indptr, adj.indices, g)), "neighbor_sum"
    )


def segment_mean(h, sizes: Sequence[int]) -> Tensor:
    """Mean of consecutive row blocks of the given sizes (one row per block)."""
    h = as_tensor(h)
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.size == 0 or sizes.min() < 1:
        raise ValueError("mean pooling needs at least one node per graph")
    if sizes.sum() != h.data.shape[0]:
        raise ValueError("segment sizes do not cover the rows")
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    out = np.add.reduceat(h.data, starts, axis=0) / sizes[:, None]

    def backward(g):
        h._accumulate(np.repeat(g / sizes[:, None], sizes, axis=0))

    return Tensor._make(out, (h,), backward, "segment_mean")


def mean_pool(h) -> Tensor:
    """Column means of a node-feature matrix."""
    h = as_tensor(h)
    if h.data.shape[0] == 0:
        raise ValueError("mean pooling over zero nodes")
    return segment_mean(h, [h.data.shape[0]]).reshape(h.data.shape[1])


# -- losses --------------------------------------------------------------------


def cross_entropy(logits, targets: np.ndarray, reduction: str = "mean") -> Tensor:
    logp = log_softmax(logits, axis=-1)
    targets = np.asarray(targets, dtype=np.int64)
    picked = logp[np.arange(targets.shape[0]), targets]
    total = -picked.sum()
    return total if reduction == "sum" else total * (1.0 / targets.shape[0])


def nll_from_probs(probs, targets: np.ndarray, reduction: str = "mean", floor: float = 1e-12) -> Tensor:
    from .tensor import log

    targets = np.asarray(targets, dtype=np.int64)
    picked = probs[np.arange(targets.shape[0]), targets]
    total = -log(picked + floor).sum()
    return total if reduction == "sum" else total * (1.0 / targets.shape[0])


def mse(pred, target: np.ndarray, reduction: str = "mean") -> Tensor:
    diff = as_tensor(pred) - Tensor(target)
    total = (diff * diff).sum()
    return total if reduction == "sum" else total * (1.0 / diff.data.size)
