"""Multi-view graph encoder with attention over the three view embeddings."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .diffcore import functional as F
from .diffcore.layers import MLP, FeatureWiseTransform, GINConv, Module, xavier_uniform
from .diffcore.tensor import Tensor, concat
from .views import ViewBundle, ViewConfig

VIEW_NAMES = ("X", "U", "Z")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    d_h: int = 256
    gnn_layers: int = 2
    mlp_layers: int = 2
    dropout_p: float = 0.6
    use_fwt: bool = True
    fwt_sd_gamma: float = 0.3
    fwt_sd_beta: float = 0.5
    use_x: bool = True
    use_u: bool = True
    use_z: bool = True

    def __post_init__(self):
        if not (self.use_x or self.use_u or self.use_z):
            raise ConfigError("at least one view must be enabled")
        if self.gnn_layers not in (1, 2, 3) or self.mlp_layers not in (1, 2, 3):
            raise ConfigError("gnn_layers and mlp_layers must be 1, 2 or 3")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError("dropout_p must lie in [0, 1)")
        if self.d_h < 1:
            raise ConfigError("d_h must be positive")

    @property
    def view_mask(self) -> np.ndarray:
        return np.array([self.use_x, self.use_u, self.use_z])

    @classmethod
    def with_views(cls, views: str, **kwargs) -> "EncoderConfig":
        """Config enabling the views named in e.g. ``"X,U,Z"``."""
        names = {v.strip().upper() for v in views.split(",") if v.strip()}
        unknown = names - set(VIEW_NAMES)
        if unknown:
            raise ConfigError(f"unknown views {sorted(unknown)}; expected a subset of X,U,Z")
        return cls(use_x="X" in names, use_u="U" in names, use_z="Z" in names, **kwargs)


def attention_aggregate(h_x, h_u, h_z, w1, w2, mask=None, dropout_p: float = 0.0,
                        training: bool = False, rng=None):
    """alpha = softmax(relu([h_x | h_u | h_z] @ w1) @ w2); h = sum_i alpha_i h_i.

    Works on single vectors or on row batches. ``mask`` (length 3) drops views
    from the softmax, giving them exactly zero weight.
    """
    tensors = [t if isinstance(t, Tensor) else Tensor(t) for t in (h_x, h_u, h_z)]
    single = tensors[0].ndim == 1
    if single:
        tensors = [t.reshape(1, -1) for t in tensors]
    widths = {t.shape[-1] for t in tensors}
    w1 = w1 if isinstance(w1, Tensor) else Tensor(w1)
    w2 = w2 if isinstance(w2, Tensor) else Tensor(w2)
    if len(widths) != 1 or w1.shape[0] != 3 * widths.pop():
        raise ValueError("view embeddings must share width d_h and w1 must be (3*d_h, d_h)")
    hidden = F.relu(concat(tensors, axis=1) @ w1)
    hidden = F.dropout(hidden, dropout_p, training, rng)
    logits = hidden @ w2
    alpha = F.softmax(logits) if mask is None else F.masked_softmax(logits, mask)
    h = alpha[:, 0:1] * tensors[0] + alpha[:, 1:2] * tensors[1] + alpha[:, 2:3] * tensors[2]
    if single:
        return alpha.reshape(3), h.reshape(h.shape[-1])
    return alpha, h


class GINStack(Module):
    """GIN layers, each followed by dropout, feature-wise transform and swish."""

    def __init__(self, d_in: int, cfg: EncoderConfig, rng: np.random.Generator):
        widths = [d_in] + [cfg.d_h] * cfg.gnn_layers
        self.convs = [GINConv(a, b, cfg.mlp_layers, rng) for a, b in zip(widths[:-1], widths[1:])]
        self._dropout_p = cfg.dropout_p
        self._fwt = FeatureWiseTransform.from_std(cfg.fwt_sd_gamma, cfg.fwt_sd_beta) if cfg.use_fwt else None

    def __call__(self, adj: F.Adjacency, h, training: bool = False, rng=None) -> Tensor:
        for conv in self.convs:
            h = conv(adj, h)
            h = F.dropout(h, self._dropout_p, training, rng)
            if self._fwt is not None:
                h = self._fwt(h, training, rng)
            h = F.swish(h)
        return h


@dataclass
class GraphBatch:
    """Several view bundles packed as one disjoint-union graph."""

    adj: F.Adjacency
    x: np.ndarray
    u: np.ndarray
    z: np.ndarray
    sizes: np.ndarray

    @classmethod
    def from_bundles(cls, bundles: Sequence[ViewBundle]) -> "GraphBatch":
        if not bundles:
            raise ValueError("empty batch")
        return cls(
            adj=F.Adjacency.block_diagonal([b.graph for b in bundles]),
            x=np.concatenate([b.x for b in bundles]),
            u=np.concatenate([b.u for b in bundles]),
            z=np.stack([b.z for b in bundles]),
            sizes=np.array([b.n_nodes for b in bundles], dtype=np.int64),
        )

    def __len__(self) -> int:
        return self.sizes.shape[0]


class MultiViewEncoder(Module):
    """Contextual GIN stack (theta), topological GIN stack (phi), spectrum MLP (psi)
    and attention weights (omega). The two GIN stacks never share parameters.
    """

    def __init__(self, view_cfg: ViewConfig, cfg: EncoderConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.view_cfg = view_cfg
        d_h = cfg.d_h
        self.theta = GINStack(view_cfg.d_pad, cfg, rng)
        self.phi = GINStack(view_cfg.d_u, cfg, rng)
        self.psi = MLP([view_cfg.d_z] + [d_h] * cfg.mlp_layers, rng)
        self.omega_w1 = Tensor(xavier_uniform(3 * d_h, d_h, rng), requires_grad=True)
        self.omega_w2 = Tensor(xavier_uniform(d_h, 3, rng), requires_grad=True)

    def param_groups(self) -> dict[str, list[str]]:
        groups = {"theta": [], "phi": [], "psi": [], "omega": []}
        for name, _ in self.named_parameters():
            groups[name.split(".")[0].split("_")[0]].append(name)
        return groups

    def encode_batch(self, batch: GraphBatch, training: bool = False, rng=None):
        """Embeddings ``h`` (B x d_h) and attention ``alpha`` (B x 3) for a batch."""
        if training and rng is None:
            raise ValueError("training mode needs a random generator")
        cfg = self.cfg
        b = len(batch)
        zeros = Tensor(np.zeros((b, cfg.d_h)))
        if batch.x.shape[1] != self.view_cfg.d_pad or batch.u.shape[1] != self.view_cfg.d_u \
                or batch.z.shape[1] != self.view_cfg.d_z:
            raise ValueError("bundle widths do not match the encoder's view configuration")
        h_x = h_u = h_z = zeros
        if cfg.use_x:
            h_x = F.segment_mean(self.theta(batch.adj, Tensor(batch.x), training, rng), batch.sizes)
        if cfg.use_u:
            h_u = F.segment_mean(self.phi(batch.adj, Tensor(batch.u), training, rng), batch.sizes)
        if cfg.use_z:
            h_z = self.psi(Tensor(batch.z))
        alpha, h = attention_aggregate(
            h_x, h_u, h_z, self.omega_w1, self.omega_w2, mask=cfg.view_mask,
            dropout_p=cfg.dropout_p, training=training, rng=rng,
        )
        return h, alpha

    def encode(self, bundles: Sequence[ViewBundle], training: bool = False, rng=None):
        return self.encode_batch(GraphBatch.from_bundles(bundles), training, rng)

    def encode_graph(self, bundle: ViewBundle, training: bool = False, rng=None):
        """(h, alpha) for one graph, as vectors."""
        h, alpha = self.encode([bundle], training, rng)
        return h.reshape(self.cfg.d_h), alpha.reshape(3)


def encode_graph(bundle: ViewBundle, encoder: MultiViewEncoder, mode: str = "eval",
                 rng: Optional[np.random.Generator] = None):
    if mode not in ("train", "eval"):
        raise ValueError("mode must be 'train' or 'eval'")
    return encoder.encode_graph(bundle, training=mode == "train", rng=rng)
