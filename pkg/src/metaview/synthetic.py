"""Synthetic heterogeneous cross-domain few-shot benchmark.

Source tasks separate cycles from random trees and carry 8-dim random node
features; target tasks separate stars from Barabasi-Albert graphs and carry
16-dim random features, so the contextual feature spaces do not match and
the node features hold no class information in either domain.

Features are standard normal and left unnormalized. Non-negative rows with
unit L1 norm would give every node a constant feature mass, and the GIN
neighbour sum would turn that into an exact degree count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphcore import synth_graph
from .meta.episodes import Task
from .meta.train import derive_seed
from .views import ViewConfig, build_views


@dataclass(frozen=True)
class SyntheticSuiteConfig:
    n_train_tasks: int = 16
    n_dev_tasks: int = 4
    n_test_tasks: int = 4
    support_pool: int = 20
    query_per_class: int = 50
    min_nodes: int = 10
    max_nodes: int = 30
    source_feature_dim: int = 8
    target_feature_dim: int = 16
    ba_m: int = 2
    seed: int = 0

    def __post_init__(self):
        if not 5 <= self.min_nodes <= self.max_nodes:
            raise ValueError("need 5 <= min_nodes <= max_nodes")
        if min(self.n_train_tasks, self.n_dev_tasks, self.n_test_tasks, self.support_pool) < 1:
            raise ValueError("task counts and support_pool must be positive")


_SOURCE = ("cycle", "tree")
_TARGET = ("star", "barabasi_albert")


def _make_graph(family, n, d_x, seed, label, origin_id, ba_m):
    params = {"n": n}
    if family == "barabasi_albert":
        params["m"] = ba_m
    g = synth_graph(family, params, seed, y=label, origin_id=origin_id)
    return g.with_features(np.random.default_rng([seed, 1]).standard_normal((g.n_nodes, d_x)))


def _make_task(task_id, families, d_x, per_class, fixed_query, cfg, view_cfg, seed):
    rng = np.random.default_rng(seed)
    lo = int(rng.integers(cfg.min_nodes, (cfg.min_nodes + cfg.max_nodes) // 2 + 1))
    hi = int(rng.integers(min(lo + 4, cfg.max_nodes), cfg.max_nodes + 1))
    pool, query = [], []
    for label, family in enumerate(families):
        count = per_class + (fixed_query or 0)
        for j in range(count):
            n = int(rng.integers(lo, hi + 1))
            g = _make_graph(family, n, d_x, int(rng.integers(2**63)), label, f"{task_id}/{family}/{j}", cfg.ba_m)
            item = (build_views(g, view_cfg), label)
            (pool if j < per_class else query).append(item)
    order = rng.permutation(len(pool))
    pool = [pool[i] for i in order]
    return Task(task_id, pool, query if fixed_query else None, meta_domain="synthetic")


def make_suite(cfg: SyntheticSuiteConfig = SyntheticSuiteConfig(), view_cfg: ViewConfig = ViewConfig()):
    """Return ``(train_tasks, dev_tasks, test_tasks)``.

    Train and dev tasks hold a pool from which episodes are sampled; test
    tasks hold a support pool plus a fixed query set, as benchmark tasks do.
    """
    pool = cfg.support_pool + cfg.query_per_class
    train = [
        _make_task(f"src-{i}", _SOURCE, cfg.source_feature_dim, pool, None, cfg, view_cfg,
                   derive_seed(cfg.seed, 10, i))
        for i in range(cfg.n_train_tasks)
    ]
    dev = [
        _make_task(f"dev-{i}", _SOURCE, cfg.source_feature_dim, pool, None, cfg, view_cfg,
                   derive_seed(cfg.seed, 11, i))
        for i in range(cfg.n_dev_tasks)
    ]
    test = [
        _make_task(f"tgt-{i}", _TARGET, cfg.target_feature_dim, cfg.support_pool, cfg.query_per_class,
                   cfg, view_cfg, derive_seed(cfg.seed, 12, i))
        for i in range(cfg.n_test_tasks)
    ]
    return train, dev, test
