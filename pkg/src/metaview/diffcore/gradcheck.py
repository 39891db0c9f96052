"""Central finite differences against reverse-mode gradients."""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .tensor import Tensor, checked


class NonDeterminismError(RuntimeError):
    pass


def finite_diff_check(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> float:
    """Largest |g_ad - g_fd| / max(1, |g_ad|, |g_fd|) over checked entries.

    ``fn`` must rebuild the computation from ``params`` on every call and
    freeze any randomness it uses. With ``max_entries`` a seeded subset of
    each parameter's entries is probed.
    """
    first = fn()
    second = fn()
    if first.data.size != 1:
        raise ValueError("finite_diff_check needs a scalar-valued computation")
    if not np.array_equal(first.data, second.data):
        raise NonDeterminismError("two forward passes disagree; freeze the random streams")
    for p in params:
        p.grad = None
    second.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    rng = np.random.default_rng(seed)
    worst = 0.0
    with checked(False):
        for p, g_ad in zip(params, analytic):
            flat = p.data.reshape(-1)
            entries = np.arange(flat.size)
            if max_entries is not None and flat.size > max_entries:
                entries = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
            for i in entries:
                base = p.data.copy()
                bumped = base.copy().reshape(-1)
                bumped[i] += h
                p.data = bumped.reshape(base.shape)
                up = fn().item()
                bumped[i] -= 2 * h
                p.data = bumped.reshape(base.shape)
                down = fn().item()
                p.data = base
                g_fd = (up - down) / (2 * h)
                a = float(g_ad.reshape(-1)[i])
                worst = max(worst, abs(a - g_fd) / max(1.0, abs(a), abs(g_fd)))
    for p in params:
        p.grad = None
    return worst
