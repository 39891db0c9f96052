"""Few-shot tasks and k-way n-shot episode sampling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..views import ViewBundle


class EpisodeError(ValueError):
    pass


@dataclass
class Episode:
    support: list  # (ViewBundle, class index) pairs
    query: list
    task_id: str = ""
    seed: int = 0
    classes: tuple = ()  # original label of each class index

    @property
    def way(self) -> int:
        return len(self.classes)

    def support_labels(self) -> np.ndarray:
        return np.array([c for _, c in self.support], dtype=np.int64)

    def query_labels(self) -> np.ndarray:
        return np.array([c for _, c in self.query], dtype=np.int64)

    def bundles(self) -> list:
        """Support bundles followed by query bundles."""
        return [b for b, _ in self.support] + [b for b, _ in self.query]


def _by_class(items: Sequence) -> dict:
    groups: dict = {}
    for i, (_, label) in enumerate(items):
        groups.setdefault(label, []).append(i)
    return groups


def _first_appearance(items: Sequence, labels) -> list:
    order = {}
    for _, label in items:
        order.setdefault(label, len(order))
    return sorted(labels, key=order.__getitem__)


def sample_episode(
    items: Sequence,
    k: int,
    n: int,
    m: int,
    seed: int,
    task_id: str = "",
    query_items: Optional[Sequence] = None,
) -> Episode:
    """Draw a k-way episode of n support and m query examples per class.

    ``items`` are (bundle, original label) pairs. Sampling is uniform without
    replacement and fully determined by ``seed``. When ``query_items`` is given
    the query set is fixed to it (restricted to the drawn classes) and only the
    support is sampled from ``items``.
    """
    rng = np.random.default_rng(seed)
    groups = _by_class(items)
    if len(groups) < k:
        raise EpisodeError(f"task {task_id!r} has {len(groups)} classes, need {k}")
    labels = list(groups)
    if len(labels) > k:
        picked = rng.choice(len(labels), size=k, replace=False)
        labels = [labels[i] for i in sorted(picked)]
    labels = _first_appearance(items, labels)
    need = n if query_items is not None else n + m
    for label in labels:
        if len(groups[label]) < need:
            raise EpisodeError(
                f"class {label!r} of task {task_id!r} has {len(groups[label])} examples, need {need}"
            )
    support, query = [], []
    for c, label in enumerate(labels):
        drawn = rng.permutation(groups[label])[:need]
        support.extend((items[i][0], c) for i in drawn[:n])
        if query_items is None:
            query.extend((items[i][0], c) for i in drawn[n:])
    if query_items is not None:
        index = {label: c for c, label in enumerate(labels)}
        query = [(b, index[label]) for b, label in query_items if label in index]
    return Episode(support, query, task_id, seed, tuple(labels))


@dataclass
class Task:
    """A pool of labelled view bundles from which episodes are drawn.

    With ``query_items`` the query set is fixed (as in a benchmark manifest)
    and ``items`` is the support pool.
    """

    task_id: str
    items: list
    query_items: Optional[list] = None
    meta_domain: str = ""
    way: int = 2
    origin: str = field(default="")

    def episode(self, n_shot: int, n_query: int, seed: int) -> Episode:
        return sample_episode(self.items, self.way, n_shot, n_query, seed, self.task_id, self.query_items)

    def fixed_episode(self) -> Episode:
        """Every support item and every fixed query item, in stored order."""
        if self.query_items is None:
            raise EpisodeError(f"task {self.task_id!r} has no fixed query set")
        labels = _first_appearance(self.items, list(_by_class(self.items)))
        index = {label: c for c, label in enumerate(labels)}
        support = [(b, index[y]) for b, y in self.items]
        query = [(b, index[y]) for b, y in self.query_items]
        return Episode(support, query, self.task_id, 0, tuple(labels))
