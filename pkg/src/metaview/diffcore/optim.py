"""Adam, the cosine learning-rate schedule and checkpoint files."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .tensor import Tensor, is_checked

CHECKPOINT_VERSION = 1


def cosine_lr(step: int, total_steps: int, lr_max: float) -> float:
    """lr_max * (1 + cos(pi * step / total_steps)) / 2."""
    if total_steps <= 0:
        return lr_max
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return lr_max * (1.0 + math.cos(math.pi * step / total_steps)) / 2.0


class Adam:
    """Adam with bias correction over a name -> Tensor mapping."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = dict(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self, lr: Optional[float] = None) -> None:
        grads = {k: p.grad for k, p in self.params.items()}
        adam_step(self, grads, self.lr if lr is None else lr)

    def state_dict(self) -> dict:
        return {"step": self.step_count, "m": {k: v.copy() for k, v in self.m.items()},
                "v": {k: v.copy() for k, v in self.v.items()}}

    def load_state_dict(self, state: dict) -> None:
        self.step_count = int(state["step"])
        self.m = {k: np.array(state["m"][k], dtype=np.float64) for k in self.params}
        self.v = {k: np.array(state["v"][k], dtype=np.float64) for k in self.params}


def adam_step(opt: Adam, grads: Mapping[str, Optional[np.ndarray]], lr: float) -> None:
    """One in-place Adam update; a missing gradient counts as zero."""
    b1, b2 = opt.betas
    if is_checked():
        for k, g in grads.items():
            if g is not None and not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for parameter {k}")
    opt.step_count += 1
    c1 = 1.0 - b1**opt.step_count
    c2 = 1.0 - b2**opt.step_count
    for k, p in opt.params.items():
        g = grads.get(k)
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {k} {p.data.shape}")
        opt.m[k] = b1 * opt.m[k] + (1.0 - b1) * g
        opt.v[k] = b2 * opt.v[k] + (1.0 - b2) * g * g
        p.data = p.data - lr * (opt.m[k] / c1) / (np.sqrt(opt.v[k] / c2) + opt.eps)


def save_checkpoint(path, params: Mapping[str, Tensor], optimizer: Optional[Adam] = None,
                    meta: Optional[dict] = None) -> Path:
    """Write a ``.npz`` container.

    Keys: ``param/<name>`` arrays in parameter order, ``adam_m/<name>`` and
    ``adam_v/<name>`` when an optimizer is given, and ``__meta__`` holding a
    JSON document with the format version, parameter order and step count.
    """
    path = Path(path)
    arrays = {}
    names = list(params)
    for name in names:
        arrays[f"param/{name}"] = np.asarray(params[name].data, dtype=np.float64)
    header = {"version": CHECKPOINT_VERSION, "order": names, "meta": meta or {}}
    if optimizer is not None:
        header["adam_step"] = optimizer.step_count
        for name in names:
            arrays[f"adam_m/{name}"] = optimizer.m[name]
            arrays[f"adam_v/{name}"] = optimizer.v[name]
    arrays["__meta__"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_checkpoint(path) -> tuple[dict, Optional[dict], dict]:
    """Return ``(params, optimizer_state or None, meta)`` from :func:`save_checkpoint`."""
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(bytes(data["__meta__"]).decode())
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        params = {name: data[f"param/{name}"].copy() for name in header["order"]}
        opt_state = None
        if "adam_step" in header:
            opt_state = {
                "step": header["adam_step"],
                "m": {n: data[f"adam_m/{n}"].copy() for n in header["order"]},
                "v": {n: data[f"adam_v/{n}"].copy() for n in header["order"]},
            }
    return params, opt_state, header["meta"]
