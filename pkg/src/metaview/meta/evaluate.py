"""Meta-test evaluation over repeated runs and the metrics report."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import __version__
from ..diffcore.tensor import no_grad
from .adapt import cosine_adapt
from .episodes import Task
from .heads import RelationModule, head_loss
from .train import derive_seed

_EVAL = 3


@dataclass(frozen=True)
class EvalConfig:
    runs: int = 10
    n_shot: int = 5
    n_query: int = 50
    head: str = "proto"
    adapt: bool = True
    adapt_steps: int = 10
    adapt_lr: float = 0.1
    tau: float = 10.0
    seed: int = 0


def query_accuracy(pred: np.ndarray, y_q: np.ndarray) -> float:
    return float(np.mean(np.asarray(pred) == np.asarray(y_q)))


def _run_task(encoder, relation, task: Task, cfg: EvalConfig, seed: int) -> float:
    episode = task.episode(cfg.n_shot, cfg.n_query, seed)
    ns = len(episode.support)
    y_s, y_q = episode.support_labels(), episode.query_labels()
    with no_grad():
        h, _ = encoder.encode(episode.bundles(), training=False)
    h_s, h_q = h.data[:ns], h.data[ns:]
    if cfg.adapt:
        clf = cosine_adapt(h_s, y_s, episode.way, cfg.adapt_steps, cfg.adapt_lr, cfg.tau)
        with no_grad():
            pred = clf.predict(h_q)
    else:
        with no_grad():
            _, scores = head_loss(cfg.head, h_s, y_s, h_q, y_q, episode.way, relation)
        pred = np.argmax(scores.data, axis=1)
    return query_accuracy(pred, y_q)


def evaluate(
    encoder,
    tasks: Sequence[Task],
    cfg: EvalConfig = EvalConfig(),
    relation: Optional[RelationModule] = None,
    benchmark: str = "",
    config_hash: str = "",
) -> dict:
    """Accuracy per task and overall, mean and population std across runs.

    Every run draws a fresh support set per task from its own seed.
    """
    if not tasks:
        raise ValueError("no evaluation tasks")
    if cfg.runs < 1:
        raise ValueError("runs must be at least 1")
    acc = np.zeros((cfg.runs, len(tasks)))
    seeds = []
    for r in range(cfg.runs):
        run_seed = derive_seed(cfg.seed, _EVAL, r)
        seeds.append(run_seed)
        for t, task in enumerate(tasks):
            acc[r, t] = _run_task(encoder, relation, task, cfg, derive_seed(run_seed, t))
    return {
        "benchmark": benchmark,
        "head": cfg.head,
        "shots": cfg.n_shot,
        "adapt": cfg.adapt,
        "per_task": [
            {"task_id": task.task_id, "mean": float(acc[:, t].mean()), "std": float(acc[:, t].std())}
            for t, task in enumerate(tasks)
        ],
        "aggregate": {"mean": float(acc.mean()), "std": float(acc.std())},
        "seeds": {"eval": cfg.seed, "runs": seeds},
        "config_hash": config_hash,
        "tool_version": __version__,
    }


def render_table(report: dict) -> str:
    """Aligned plain-text rendering of an evaluation report."""
    rows = [(t["task_id"], f"{100 * t['mean']:.2f}", f"{100 * t['std']:.2f}") for t in report["per_task"]]
    agg = report["aggregate"]
    rows.append(("aggregate", f"{100 * agg['mean']:.2f}", f"{100 * agg['std']:.2f}"))
    header = ("task", "acc %", "std %")
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(3)]
    lines = [
        f"{report.get('benchmark', '')} head={report['head']} shots={report['shots']}".strip(),
        "  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths))),
    ]
    for r in rows:
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
    return "\n".join(lines)
