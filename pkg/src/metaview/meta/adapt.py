"""Cosine-distance classifier fitted on support embeddings at meta-test time."""
from __future__ import annotations

import numpy as np

from ..diffcore import functional as F
from ..diffcore.optim import Adam
from ..diffcore.tensor import Tensor


class CosineClassifier:
    """logits = tau * cos(h, w_j) with one learned weight vector per class."""

    def __init__(self, weights: np.ndarray, tau: float = 10.0):
        self.weight = Tensor(np.array(weights, dtype=np.float64), requires_grad=True)
        self.tau = tau

    def logits(self, h) -> Tensor:
        h = h if isinstance(h, Tensor) else Tensor(h)
        return (F.normalize_rows(h) @ F.normalize_rows(self.weight).T) * self.tau

    def predict(self, h) -> np.ndarray:
        return np.argmax(self.logits(h).data, axis=1)


def cosine_adapt(
    h_s: np.ndarray,
    y_s: np.ndarray,
    k: int,
    steps: int,
    lr: float,
    tau: float = 10.0,
) -> CosineClassifier:
    """Fit class weights on frozen support embeddings with Adam on cross-entropy.

    Weights start at the class-mean embeddings, so ``lr=0`` returns that
    initialization unchanged.
    """
    if steps < 1:
        raise ValueError("cosine_adapt needs at least one step")
    h_s = np.asarray(h_s, dtype=np.float64)
    y_s = np.asarray(y_s, dtype=np.int64)
    init = np.stack([h_s[y_s == j].mean(axis=0) for j in range(k)])
    clf = CosineClassifier(init, tau)
    opt = Adam({"weight": clf.weight}, lr=lr)
    feats = Tensor(h_s)
    for _ in range(steps):
        opt.zero_grad()
        F.cross_entropy(clf.logits(feats), y_s).backward()
        opt.step()
    clf.weight.grad = None
    return clf
