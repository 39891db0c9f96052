"""Dense float64 autodiff core and the layers the encoder is built from."""
from . import functional
from .functional import (
    Adjacency,
    cross_entropy,
    dropout,
    log_softmax,
    masked_softmax,
    mean_pool,
    mse,
    neighbor_sum,
    normalize_rows,
    relu,
    segment_mean,
    sigmoid,
    softmax,
    softplus,
    softplus_inverse,
    swish,
)
from .gradcheck import NonDeterminismError, finite_diff_check
from .layers import MLP, FeatureWiseTransform, GINConv, Linear, Module, fwt, xavier_uniform
from .optim import Adam, adam_step, cosine_lr, load_checkpoint, save_checkpoint
from .tensor import Tensor, as_tensor, checked, concat, exp, is_checked, log, no_grad, set_checked, stack

__all__ = [
    "Adam", "Adjacency", "FeatureWiseTransform", "GINConv", "Linear", "MLP", "Module",
    "NonDeterminismError", "Tensor", "adam_step", "as_tensor", "checked", "concat", "cosine_lr",
    "cross_entropy", "dropout", "exp", "finite_diff_check", "functional", "fwt", "is_checked",
    "load_checkpoint", "log", "log_softmax", "masked_softmax", "mean_pool", "mse", "neighbor_sum",
    "no_grad", "normalize_rows", "relu", "save_checkpoint", "segment_mean", "set_checked",
    "sigmoid", "softmax", "softplus", "softplus_inverse", "stack", "swish", "xavier_uniform",
]
