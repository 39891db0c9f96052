import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metaview.diffcore import functional as F
from metaview.diffcore.gradcheck import NonDeterminismError, finite_diff_check
from metaview.diffcore.layers import MLP, FeatureWiseTransform, GINConv
from metaview.diffcore.optim import Adam, cosine_lr, load_checkpoint, save_checkpoint
from metaview.diffcore.tensor import Tensor, concat, exp, log, sqrt, stack

from oracles import numeric_grad


def grad_of(fn, x):
    t = Tensor(x.copy(), requires_grad=True)
    fn(t).backward()
    return t.grad


UNARY = {
    "relu": lambda t: (F.relu(t) * t).sum(),
    "sigmoid": lambda t: F.sigmoid(t).sum(),
    "swish": lambda t: (F.swish(t) ** 2).sum(),
    "softmax": lambda t: (F.softmax(t) * np.arange(3.0)).sum(),
    "log_softmax": lambda t: (F.log_softmax(t) * np.arange(3.0)).sum(),
    "normalize": lambda t: (F.normalize_rows(t) * np.array([1.0, -2.0, 0.5])).sum(),
    "exp_log": lambda t: (log(exp(t) + 2.0) / sqrt(t * t + 1.0)).sum(),
    "mean_pool": lambda t: (F.mean_pool(t) ** 2).sum(),
    "concat": lambda t: (concat([t, t * 2], axis=1) ** 2).sum() + stack([t, t]).mean(),
    "index": lambda t: (t[1:, ::2] ** 3).sum(),
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_gradients_match_central_differences(name):
    fn = UNARY[name]
    x = np.random.default_rng(3).normal(size=(4, 3)) + 0.1
    num = numeric_grad(lambda v: fn(Tensor(v)).item(), x.copy())
    assert np.abs(grad_of(fn, x) - num).max() < 1e-6


def test_matmul_and_broadcast_gradients():
    rng = np.random.default_rng(0)
    a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
    c = Tensor(rng.normal(size=(2,)), requires_grad=True)
    assert finite_diff_check(lambda: ((a @ b + c) ** 2).sum(), [a, b, c]) < 1e-7


def test_cross_entropy_and_mse_values():
    logits = Tensor(np.log(np.array([[1.0, 3.0]])))
    assert F.cross_entropy(logits, np.array([1])).item() == pytest.approx(-math.log(0.75))
    assert F.mse(Tensor(np.array([1.0, 3.0])), np.array([0.0, 1.0])).item() == pytest.approx(2.5)


def test_masked_softmax():
    p = F.masked_softmax(Tensor(np.array([[1.0, 5.0, 1.0]])), np.array([True, False, True])).data
    assert p.tolist() == [[0.5, 0.0, 0.5]]
    with pytest.raises(ValueError):
        F.masked_softmax(Tensor(np.ones((1, 2))), np.array([False, False]))


def test_masked_softmax_gradient():
    a = Tensor(np.random.default_rng(1).normal(size=(3, 3)), requires_grad=True)
    m = np.array([True, False, True])
    w = np.arange(9.0).reshape(3, 3)
    assert finite_diff_check(lambda: (F.masked_softmax(a, m) * w).sum(), [a]) < 1e-7


def test_dropout_scaling_and_eval_identity():
    x = Tensor(np.ones((200, 50)))
    assert F.dropout(x, 0.6, training=False, rng=None) is x
    y = F.dropout(x, 0.6, training=True, rng=np.random.default_rng(0)).data
    assert set(np.unique(y)) <= {0.0, 2.5}
    assert abs(y.mean() - 1.0) < 0.05
    with pytest.raises(ValueError):
        F.dropout(x, 1.0, training=True, rng=None)


def test_neighbor_sum_gradient_is_adjacency_transpose():
    adj = F.Adjacency(np.array([0, 1, 3, 4]), np.array([1, 0, 2, 1]))
    h = Tensor(np.random.default_rng(2).normal(size=(3, 2)), requires_grad=True)
    assert finite_diff_check(lambda: (F.neighbor_sum(adj, h) ** 2).sum(), [h]) < 1e-7


def test_segment_mean():
    h = Tensor(np.arange(10.0).reshape(5, 2), requires_grad=True)
    out = F.segment_mean(h, [2, 3])
    assert out.data.tolist() == [[1.0, 2.0], [6.0, 7.0]]
    assert finite_diff_check(lambda: (F.segment_mean(h, [2, 3]) ** 2).sum(), [h]) < 1e-7


def test_gin_and_mlp_gradients():
    rng = np.random.default_rng(4)
    adj = F.Adjacency(np.array([0, 2, 3, 4]), np.array([1, 2, 0, 0]))
    conv = GINConv(3, 4, 2, rng)
    h = Tensor(rng.normal(size=(3, 3)))
    assert finite_diff_check(lambda: F.swish(conv(adj, h)).sum(), conv.parameters()) < 1e-6
    mlp = MLP([3, 5, 1], rng)
    assert finite_diff_check(lambda: mlp(h).sum(), mlp.parameters()) < 1e-6


def test_gradcheck_detects_nondeterminism():
    a = Tensor(np.ones(2), requires_grad=True)
    rng = np.random.default_rng(0)
    with pytest.raises(NonDeterminismError):
        finite_diff_check(lambda: (a * rng.normal()).sum(), [a])


def test_fwt_is_identity_in_eval_and_scalar_affine_in_training():
    t = FeatureWiseTransform.from_std(0.3, 0.5)
    h = Tensor(np.random.default_rng(0).normal(size=(4, 3)))
    assert t(h, training=False, rng=None) is h
    out = t(h, training=True, rng=np.random.default_rng(1)).data
    gamma = (out[0, 0] - out[1, 0]) / (h.data[0, 0] - h.data[1, 0])
    beta = out[0, 0] - gamma * h.data[0, 0]
    assert np.allclose(out, h.data * gamma + beta)
    assert F.softplus(t.theta_gamma) == pytest.approx(0.3)


def test_cosine_lr_schedule():
    assert cosine_lr(0, 100, 1e-3) == 1e-3
    assert cosine_lr(50, 100, 1e-3) == pytest.approx(5e-4)
    assert cosine_lr(100, 100, 1e-3) == pytest.approx(0.0, abs=1e-18)
    with pytest.raises(ValueError):
        cosine_lr(101, 100, 1.0)


def test_adam_first_step_moves_by_lr():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    opt = Adam({"p": p}, lr=0.1)
    p.grad = np.array([3.0, -0.5])
    opt.step()
    assert np.allclose(p.data, [0.9, -1.9], atol=1e-7)


def test_adam_minimises_quadratic():
    p = Tensor(np.array([5.0, -3.0]), requires_grad=True)
    opt = Adam({"p": p}, lr=0.1)
    for _ in range(500):
        opt.zero_grad()
        ((p - np.array([1.0, 2.0])) ** 2).sum().backward()
        opt.step()
    assert np.allclose(p.data, [1.0, 2.0], atol=1e-3)


def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    params = {"a": Tensor(rng.normal(size=(2, 3))), "b": Tensor(rng.normal(size=4))}
    opt = Adam(params)
    for p in params.values():
        p.grad = np.ones_like(p.data)
    opt.step()
    save_checkpoint(tmp_path / "c.npz", params, opt, meta={"seed": 3})
    back, state, meta = load_checkpoint(tmp_path / "c.npz")
    assert list(back) == ["a", "b"] and meta == {"seed": 3}
    assert all(np.array_equal(back[k], params[k].data) for k in params)
    assert state["step"] == 1 and np.array_equal(state["m"]["a"], opt.m["a"])


@given(st.lists(st.floats(-30, 30), min_size=2, max_size=6))
def test_softmax_is_a_distribution(xs):
    p = F.softmax(Tensor(np.array([xs]))).data
    assert abs(p.sum() - 1) <= 1e-12 and np.all(p >= 0)
