"""Metric-based classification heads: prototypical, matching and relation."""
from __future__ import annotations

import numpy as np

from ..diffcore import functional as F
from ..diffcore.layers import MLP, Module
from ..diffcore.tensor import Tensor, as_tensor, concat

HEADS = ("proto", "match", "relation")


def _one_hot(labels: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], k))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def class_means(h_s, y_s: np.ndarray, k: int) -> Tensor:
    """Mean support embedding per class (rows ordered by class index)."""
    y_s = np.asarray(y_s, dtype=np.int64)
    counts = np.bincount(y_s, minlength=k)
    if counts.shape[0] > k or (counts[:k] == 0).any():
        missing = [j for j in range(k) if j >= counts.shape[0] or counts[j] == 0]
        raise ValueError(f"classes {missing} have no support examples")
    weights = _one_hot(y_s, k).T / counts[:, None]
    return Tensor(weights) @ as_tensor(h_s)


def proto_logits(h_s, y_s, h_q, k: int) -> Tensor:
    """Negative squared Euclidean distance from each query to each prototype."""
    protos = class_means(h_s, y_s, k)
    h_q = as_tensor(h_q)
    d = h_q.shape[1]
    diff = h_q.reshape(h_q.shape[0], 1, d) - protos.reshape(1, k, d)
    return -(diff * diff).sum(axis=2)


def proto_head(h_s, y_s, h_q, k: int) -> Tensor:
    """Query class probabilities under the prototypical classifier."""
    return F.softmax(proto_logits(h_s, y_s, h_q, k), axis=-1)


def match_head(h_s, y_s, h_q, k: int) -> Tensor:
    """P(y | q) = sum_i softmax_i(cos(q, s_i)) [y_i = y].

    A zero-norm embedding has cosine 0 with everything.
    """
    y_s = np.asarray(y_s, dtype=np.int64)
    cos = F.normalize_rows(h_q) @ F.normalize_rows(h_s).T
    attn = F.softmax(cos, axis=-1)
    return attn @ Tensor(_one_hot(y_s, k))


class RelationModule(Module):
    """Two-layer relation MLP (2*d_h -> d_h -> 1) scoring (query, class) pairs."""

    def __init__(self, d_h: int, rng: np.random.Generator):
        self.mlp = MLP([2 * d_h, d_h, 1], rng, activation=F.relu)
        self.d_h = d_h

    def __call__(self, h_s, y_s, h_q, k: int) -> Tensor:
        protos = class_means(h_s, y_s, k)
        h_q = as_tensor(h_q)
        if h_q.shape[1] != self.d_h:
            raise ValueError(f"relation module expects width {self.d_h}, got {h_q.shape[1]}")
        nq = h_q.shape[0]
        # pair rows ordered (query 0, class 0), (query 0, class 1), ...
        q_rep = h_q[np.repeat(np.arange(nq), k)]
        c_rep = protos[np.tile(np.arange(k), nq)]
        scores = F.sigmoid(self.mlp(concat([q_rep, c_rep], axis=1)))
        return scores.reshape(nq, k)


def relation_head(h_s, y_s, h_q, k: int, module: RelationModule) -> Tensor:
    return module(h_s, y_s, h_q, k)


def head_loss(head: str, h_s, y_s, h_q, y_q, k: int, relation: RelationModule = None):
    """Summed query loss and the query scores used for prediction."""
    y_q = np.asarray(y_q, dtype=np.int64)
    if head == "proto":
        logits = proto_logits(h_s, y_s, h_q, k)
        return F.cross_entropy(logits, y_q, reduction="sum"), logits
    if head == "match":
        probs = match_head(h_s, y_s, h_q, k)
        return F.nll_from_probs(probs, y_q, reduction="sum"), probs
    if head == "relation":
        if relation is None:
            raise ValueError("relation head needs a RelationModule")
        scores = relation(h_s, y_s, h_q, k)
        return F.mse(scores, _one_hot(y_q, k), reduction="sum"), scores
    raise ValueError(f"unknown head {head!r}; expected one of {HEADS}")
