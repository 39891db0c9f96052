"""Episodic meta-training of the encoder with a metric head."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from ..diffcore.optim import Adam, cosine_lr
from ..diffcore.tensor import no_grad
from ..encoder import MultiViewEncoder
from .episodes import Episode, Task
from .heads import HEADS, RelationModule, head_loss

log = logging.getLogger(__name__)

# Selected 20-shot hyper-parameters per target meta-domain and head:
# (task steps, adapt steps, task lr, adapt lr, number of layers)
TUNED_PRESETS = {
    ("molecules", "match"): (25, 10, 0.01, 0.1, 2),
    ("molecules", "proto"): (50, 50, 0.01, 0.01, 3),
    ("molecules", "relation"): (50, 50, 0.001, 0.01, 2),
    ("bioinformatics", "match"): (50, 50, 0.001, 0.01, 2),
    ("bioinformatics", "proto"): (50, 10, 0.001, 0.1, 2),
    ("bioinformatics", "relation"): (25, 25, 0.01, 0.1, 3),
    ("social", "match"): (50, 25, 0.01, 0.1, 3),
    ("social", "proto"): (25, 10, 0.01, 0.1, 3),
    ("social", "relation"): (50, 10, 0.01, 0.01, 3),
}


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    way: int = 2
    n_shot: int = 20
    n_query: int = 50
    meta_batch: int = 16
    epochs: int = 1000
    patience: int = 30
    lr: float = 1e-3
    head: str = "proto"
    task_steps: int = 50
    adapt_steps: int = 50
    task_lr: float = 0.01
    adapt_lr: float = 0.01
    layers: int = 3
    tau: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}")
        for name in ("way", "n_shot", "n_query", "meta_batch", "patience", "task_steps", "adapt_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0 or self.lr <= 0 or self.task_lr <= 0 or self.adapt_lr < 0:
            raise ValueError("epochs must be non-negative and learning rates positive")

    @classmethod
    def from_preset(cls, domain: str, head: str, **overrides) -> "TrainConfig":
        task_steps, adapt_steps, task_lr, adapt_lr, layers = TUNED_PRESETS[(domain, head)]
        base = cls(head=head, task_steps=task_steps, adapt_steps=adapt_steps,
                   task_lr=task_lr, adapt_lr=adapt_lr, layers=layers)
        return replace(base, **overrides)


def derive_seed(*parts: int) -> int:
    """Stable 63-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(2, np.uint64)[0] >> np.uint64(1))


_TRAIN, _DEV = 1, 2


@dataclass
class TrainResult:
    history: list = field(default_factory=list)
    step_losses: list = field(default_factory=list)
    best_epoch: int = -1
    best_dev_accuracy: float = float("nan")
    stopped_early: bool = False


def _episode_loss(encoder, relation, episode: Episode, head: str, training: bool, rng):
    h, _ = encoder.encode(episode.bundles(), training=training, rng=rng)
    ns = len(episode.support)
    n_all = ns + len(episode.query)
    h_s = h[:ns]
    h_q = h[ns:n_all]
    return head_loss(head, h_s, episode.support_labels(), h_q, episode.query_labels(), episode.way, relation)


def episode_accuracy(encoder, relation, episode: Episode, head: str) -> float:
    with no_grad():
        _, scores = _episode_loss(encoder, relation, episode, head, False, None)
    return float(np.mean(np.argmax(scores.data, axis=1) == episode.query_labels()))


def dev_accuracy(encoder, relation, tasks: Sequence[Task], cfg: TrainConfig) -> float:
    accs = []
    for i, task in enumerate(tasks):
        ep = task.episode(cfg.n_shot, cfg.n_query, derive_seed(cfg.seed, _DEV, i))
        accs.append(episode_accuracy(encoder, relation, ep, cfg.head))
    return float(np.mean(accs))


def trainable_parameters(encoder: MultiViewEncoder, relation: Optional[RelationModule] = None) -> dict:
    params = dict(encoder.named_parameters())
    if relation is not None:
        params.update({f"relation.{k}": v for k, v in relation.named_parameters()})
    return params


def meta_train(
    encoder: MultiViewEncoder,
    train_tasks: Sequence[Task],
    cfg: TrainConfig,
    dev_tasks: Sequence[Task] = (),
    relation: Optional[RelationModule] = None,
    callback: Optional[Callable[[dict], None]] = None,
) -> TrainResult:
    """Train ``encoder`` (and ``relation``) in place; returns the history.

    Each step draws a meta-batch of tasks, sums every task's query loss,
    normalizes by (tasks x queries) and takes one Adam step. The learning rate
    follows a cosine schedule over epochs. With dev tasks, training stops once
    dev accuracy has not improved for ``patience`` epochs and the best-dev
    parameters are restored.
    """
    if not train_tasks:
        raise TrainingError("meta_train needs at least one training task")
    if cfg.head == "relation" and relation is None:
        raise TrainingError("relation head needs a RelationModule")
    params = trainable_parameters(encoder, relation)
    opt = Adam(params, lr=cfg.lr)
    result = TrainResult()
    best_state = None
    stale = 0
    order_rng = np.random.default_rng(derive_seed(cfg.seed, _TRAIN))
    step = 0
    for epoch in range(cfg.epochs):
        lr = cosine_lr(epoch, cfg.epochs, cfg.lr)
        order = order_rng.permutation(len(train_tasks))
        epoch_losses = []
        for start in range(0, len(order), cfg.meta_batch):
            batch = order[start:start + cfg.meta_batch]
            opt.zero_grad()
            total = 0.0
            for ti in batch:
                ep_seed = derive_seed(cfg.seed, _TRAIN, epoch, int(ti))
                episode = train_tasks[ti].episode(cfg.n_shot, cfg.n_query, ep_seed)
                rng = np.random.default_rng(ep_seed)
                try:
                    loss, _ = _episode_loss(encoder, relation, episode, cfg.head, True, rng)
                    scaled = loss * (1.0 / (len(batch) * len(episode.query)))
                    scaled.backward()
                except FloatingPointError as exc:
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch}, task {train_tasks[ti].task_id!r}: {exc}"
                    ) from exc
                total += scaled.item()
            try:
                opt.step(lr)
            except FloatingPointError as exc:
                raise TrainingError(f"non-finite gradient at epoch {epoch}: {exc}") from exc
            step += 1
            result.step_losses.append(total)
            epoch_losses.append(total)
        record = {"epoch": epoch, "lr": lr, "loss": float(np.mean(epoch_losses))}
        if dev_tasks:
            acc = dev_accuracy(encoder, relation, dev_tasks, cfg)
            record["dev_accuracy"] = acc
            if best_state is None or acc > result.best_dev_accuracy:
                result.best_dev_accuracy = acc
                result.best_epoch = epoch
                best_state = {k: p.data.copy() for k, p in params.items()}
                stale = 0
            else:
                stale += 1
        result.history.append(record)
        log.debug("epoch %d loss %.5f %s", epoch, record["loss"], record.get("dev_accuracy", ""))
        if callback is not None:
            callback(record)
        if dev_tasks and stale >= cfg.patience:
            result.stopped_early = True
            break
    if best_state is not None:
        for k, p in params.items():
            p.data = best_state[k]
    return result
