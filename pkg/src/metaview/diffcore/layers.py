"""Parameterized layers: linear, MLP, GIN convolution, feature-wise transform."""
from __future__ import annotations

import math
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from . import functional as F
from .tensor import Tensor


def xavier_uniform(fan_in: int, fan_out: int, rng: np.random.Generator, shape=None) -> np.ndarray:
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape or (fan_in, fan_out))


class Module:
    """Parameter container; parameters are discovered in attribute order."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{name}.{i}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict) -> None:
        params = dict(self.named_parameters())
        missing = set(params) - set(state)
        unknown = set(state) - set(params)
        if missing or unknown:
            raise KeyError(f"state mismatch; missing={sorted(missing)} unknown={sorted(unknown)}")
        for name, p in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.data.shape:
                raise ValueError(f"{name}: shape {value.shape} != {p.data.shape}")
            p.data = value.copy()

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = Tensor(xavier_uniform(d_in, d_out, rng), requires_grad=True)
        self.bias = Tensor(np.zeros(d_out), requires_grad=True) if bias else None
        self.d_in, self.d_out = d_in, d_out

    def __call__(self, x) -> Tensor:
        x = x if isinstance(x, Tensor) else Tensor(x)
        if x.shape[-1] != self.d_in:
            raise ValueError(f"linear layer expects width {self.d_in}, got {x.shape[-1]}")
        out = x @ self.weight
        return out + self.bias if self.bias is not None else out


class MLP(Module):
    """Linear layers with ``activation`` between them (not after the last)."""

    def __init__(
        self,
        sizes: Sequence[int],
        rng: np.random.Generator,
        activation: Callable = F.swish,
    ):
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least input and output widths")
        self.layers = [Linear(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]
        self.activation = activation

    def __call__(self, x) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = self.activation(x)
        return x


class GINConv(Module):
    """out[v] = MLP((1 + eps) * h[v] + sum of neighbour rows); eps learnable."""

    def __init__(self, d_in: int, d_out: int, mlp_layers: int, rng: np.random.Generator):
        self.eps = Tensor(0.0, requires_grad=True)
        self.mlp = MLP([d_in] + [d_out] * mlp_layers, rng)

    def __call__(self, adj: F.Adjacency, h) -> Tensor:
        h = h if isinstance(h, Tensor) else Tensor(h)
        if h.shape[-1] != self.mlp.layers[0].d_in:
            raise ValueError(f"GIN layer expects width {self.mlp.layers[0].d_in}, got {h.shape[-1]}")
        return self.mlp((1.0 + self.eps) * h + F.neighbor_sum(adj, h))


class FeatureWiseTransform:
    """h * gamma + beta with gamma ~ N(1, sd_gamma), beta ~ N(0, sd_beta).

    The standard deviations are softplus of fixed (non-learned) thetas. One
    scalar pair is drawn per call in training; evaluation is the identity.
    """

    def __init__(self, theta_gamma: float, theta_beta: float):
        self.theta_gamma = float(theta_gamma)
        self.theta_beta = float(theta_beta)

    @classmethod
    def from_std(cls, sd_gamma: float, sd_beta: float) -> "FeatureWiseTransform":
        return cls(float(F.softplus_inverse(sd_gamma)), float(F.softplus_inverse(sd_beta)))

    def __call__(self, h, training: bool, rng: Optional[np.random.Generator]) -> Tensor:
        h = h if isinstance(h, Tensor) else Tensor(h)
        if not training:
            return h
        gamma = rng.normal(1.0, float(F.softplus(self.theta_gamma)))
        beta = rng.normal(0.0, float(F.softplus(self.theta_beta)))
        return h * gamma + beta


def fwt(h, theta_gamma: float, theta_beta: float, training: bool, rng=None) -> Tensor:
    return FeatureWiseTransform(theta_gamma, theta_beta)(h, training, rng)
