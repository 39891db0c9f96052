"""Episodes, metric heads, meta-training, cosine adaptation and evaluation."""
from .adapt import CosineClassifier, cosine_adapt
from .episodes import Episode, EpisodeError, Task, sample_episode
from .evaluate import EvalConfig, evaluate, query_accuracy, render_table
from .heads import (
    HEADS,
    RelationModule,
    class_means,
    head_loss,
    match_head,
    proto_head,
    proto_logits,
    relation_head,
)
from .train import TUNED_PRESETS, TrainConfig, TrainingError, TrainResult, derive_seed, meta_train

__all__ = [
    "HEADS", "TUNED_PRESETS", "CosineClassifier", "Episode", "EpisodeError", "EvalConfig", "RelationModule",
    "Task", "TrainConfig", "TrainResult", "TrainingError", "class_means", "cosine_adapt", "derive_seed",
    "evaluate", "head_loss", "match_head", "meta_train", "proto_head", "proto_logits", "query_accuracy",
    "relation_head", "render_table", "sample_episode",
]
