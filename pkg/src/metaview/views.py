"""The three congruent views of a graph: contextual, degree-encoded, diffusion spectrum."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .graphcore import Graph, GraphError

CONTEXTUAL_MODES = ("pad", "deepset", "hetero_concat")
DIFFUSION_KINDS = ("ppr", "heat")


class DimensionError(ValueError):
    pass


class SpectrumError(ArithmeticError):
    """The eigensolver failed; carries the graph id and solver message."""


@dataclass(frozen=True)
class ViewConfig:
    contextual_mode: str = "pad"
    d_pad: int = 100
    d_u: int = 32
    d_z: int = 128
    diffusion_kind: str = "ppr"
    alpha: float = 0.2
    heat_t: float = 5.0
    series_truncation: int = 64
    # width of the linear projection concatenated in hetero_concat mode
    hetero_dim: int = 16
    # seeds the fixed (non-learned) projections of deepset/hetero_concat
    augment_seed: int = 0

    def __post_init__(self):
        if self.contextual_mode not in CONTEXTUAL_MODES:
            raise ValueError(f"contextual_mode must be one of {CONTEXTUAL_MODES}")
        if self.diffusion_kind not in DIFFUSION_KINDS:
            raise ValueError(f"diffusion_kind must be one of {DIFFUSION_KINDS}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.heat_t <= 0:
            raise ValueError("heat_t must be positive")
        if self.d_u <= 0 or self.d_u % 2:
            raise ValueError("d_u must be a positive even number")
        if self.d_pad < 1 or self.d_z < 1 or self.series_truncation < 0:
            raise ValueError("d_pad and d_z must be positive, series_truncation non-negative")


@dataclass(frozen=True, eq=False)
class ViewBundle:
    """Views of one graph. All views share the graph's CSR adjacency."""

    graph: Graph
    x: np.ndarray
    u: np.ndarray
    z: np.ndarray

    @property
    def indptr(self) -> np.ndarray:
        return self.graph.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.graph.indices

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    @property
    def origin_id(self) -> str:
        return self.graph.origin_id


# -- contextual view ---------------------------------------------------------


def pad_features(x: np.ndarray, d_pad: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    n, d_x = x.shape
    if d_x > d_pad:
        raise DimensionError(f"feature width {d_x} exceeds pad width {d_pad}")
    out = np.zeros((n, d_pad))
    out[:, :d_x] = x
    return out


def deepset_features(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, d_pad: int) -> np.ndarray:
    """Project every scalar feature with one shared 1 -> d_pad map, then sum.

    out[v] = sum_i (x[v, i] * weight + bias), invariant to column order.
    """
    x = np.asarray(x, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64).reshape(d_pad)
    bias = np.asarray(bias, dtype=np.float64).reshape(d_pad)
    return x.sum(axis=1, keepdims=True) * weight + x.shape[1] * bias


def hetero_concat_features(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, d_pad: int) -> np.ndarray:
    """Rows become [x | x @ weight + bias | 0...] padded to ``d_pad``."""
    x = np.asarray(x, dtype=np.float64)
    proj = x @ np.asarray(weight, dtype=np.float64) + np.asarray(bias, dtype=np.float64)
    if x.shape[1] + proj.shape[1] > d_pad:
        raise DimensionError(f"concatenated width {x.shape[1] + proj.shape[1]} exceeds pad width {d_pad}")
    return pad_features(np.concatenate([x, proj], axis=1), d_pad)


def _fixed_projection(cfg: ViewConfig, fan_in: int, fan_out: int):
    rng = np.random.default_rng([cfg.augment_seed, fan_in, fan_out])
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out)), np.zeros(fan_out)


def contextual_features(g: Graph, cfg: ViewConfig) -> np.ndarray:
    if cfg.contextual_mode == "pad":
        return pad_features(g.x, cfg.d_pad)
    if cfg.contextual_mode == "deepset":
        w, b = _fixed_projection(cfg, 1, cfg.d_pad)
        return deepset_features(g.x, w[0], b, cfg.d_pad)
    d_p = min(cfg.hetero_dim, cfg.d_pad - g.d_x)
    if d_p < 1:
        raise DimensionError(f"no room to concatenate a projection of width-{g.d_x} features into {cfg.d_pad}")
    w, b = _fixed_projection(cfg, g.d_x, d_p)
    return hetero_concat_features(g.x, w, b, cfg.d_pad)


# -- topological views -------------------------------------------------------


def degree_encoding(g: Graph, d_u: int) -> np.ndarray:
    """Sinusoidal encoding with the node degree in place of a position."""
    if d_u <= 0 or d_u % 2:
        raise DimensionError("d_u must be a positive even number")
    deg = g.degrees.astype(np.float64)[:, None]
    freq = 10000.0 ** (np.arange(0, d_u, 2, dtype=np.float64) / d_u)
    angle = deg / freq
    u = np.empty((g.n_nodes, d_u))
    u[:, 0::2] = np.sin(angle)
    u[:, 1::2] = np.cos(angle)
    return u


def _check_diffusable(g: Graph):
    if g.degrees.min() < 1:
        raise GraphError(f"{g.origin_id or 'graph'} has an isolated node; diffusion undefined")


def transition_eigenvalues(g: Graph) -> np.ndarray:
    """Eigenvalues of A D^-1 via the symmetric similar matrix D^-1/2 A D^-1/2."""
    _check_diffusable(g)
    inv_sqrt = 1.0 / np.sqrt(g.degrees.astype(np.float64))
    t_sym = inv_sqrt[:, None] * g.dense_adjacency() * inv_sqrt[None, :]
    try:
        lam = scipy.linalg.eigh(t_sym, eigvals_only=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SpectrumError(
            f"eigensolver failed on {g.origin_id or 'graph'} (n={g.n_nodes}, edges={g.n_edges}): {exc}"
        ) from exc
    return np.clip(lam, -1.0, 1.0)


def spectral_map(lam: np.ndarray, cfg: ViewConfig) -> np.ndarray:
    """Diffusion eigenvalue for each transition eigenvalue, in closed form."""
    if cfg.diffusion_kind == "ppr":
        return cfg.alpha / (1.0 - (1.0 - cfg.alpha) * lam)
    return np.exp(cfg.heat_t * (lam - 1.0))


def _sort_pad(mu: np.ndarray, d_z: int) -> np.ndarray:
    mu = np.sort(mu)[::-1]
    z = np.zeros(d_z)
    k = min(d_z, mu.shape[0])
    z[:k] = mu[:k]
    return z


def diffusion_spectrum(g: Graph, cfg: ViewConfig) -> np.ndarray:
    """Top ``d_z`` eigenvalues of the diffusion matrix, descending, zero-padded."""
    return _sort_pad(spectral_map(transition_eigenvalues(g), cfg), cfg.d_z)


def diffusion_coefficients(cfg: ViewConfig, k_max: Optional[int] = None) -> np.ndarray:
    k_max = cfg.series_truncation if k_max is None else k_max
    k = np.arange(k_max + 1, dtype=np.float64)
    if cfg.diffusion_kind == "ppr":
        return cfg.alpha * (1.0 - cfg.alpha) ** k
    log_theta = -cfg.heat_t + k * math.log(cfg.heat_t) - np.array([math.lgamma(i + 1) for i in k])
    return np.exp(log_theta)


def diffusion_spectrum_series_oracle(g: Graph, cfg: ViewConfig) -> np.ndarray:
    """Same quantity by materializing the truncated series sum_k theta_k T^k.

    Uses the non-symmetric T = A D^-1 and a general eigensolver, sharing no
    code with :func:`diffusion_spectrum` beyond sorting. Test use only.
    """
    _check_diffusable(g)
    a = g.dense_adjacency()
    t = a / g.degrees.astype(np.float64)[None, :]
    theta = diffusion_coefficients(cfg)
    s = np.zeros_like(t)
    power = np.eye(g.n_nodes)
    for coef in theta:
        s += coef * power
        power = power @ t
    mu = np.linalg.eigvals(s)
    return _sort_pad(mu.real, cfg.d_z)


def build_views(g: Graph, cfg: ViewConfig = ViewConfig()) -> ViewBundle:
    return ViewBundle(
        graph=g,
        x=contextual_features(g, cfg),
        u=degree_encoding(g, cfg.d_u),
        z=diffusion_spectrum(g, cfg),
    )


def build_views_many(graphs: Sequence[Graph], cfg: ViewConfig = ViewConfig(), jobs: int = 1) -> list:
    if jobs <= 1:
        return [build_views(g, cfg) for g in graphs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda g: build_views(g, cfg), graphs))
