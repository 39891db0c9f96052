"""Self-test suites run by ``metaview verify``.

Each suite checks one implemented formula against an independent route on a
small seeded corpus and reports pass/fail with the worst deviation seen.
"""
from __future__ import annotations

import tempfile
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .diffcore import functional as F
from .diffcore.gradcheck import finite_diff_check
from .diffcore.tensor import Tensor, exp
from .encoder import EncoderConfig, MultiViewEncoder, encode_graph
from .graphcore import Graph, harmonic_centrality, load_tudataset, synth_graph, write_tudataset
from .kernels import _pykernels
from .meta.heads import match_head, proto_head, proto_logits
from .views import ViewConfig, build_views, diffusion_spectrum, diffusion_spectrum_series_oracle


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def __post_init__(self):
        self.passed = bool(self.passed)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<14} {self.detail}  ({self.seconds:.1f}s)"


def _random_connected(rng: np.random.Generator, n: int, p: float) -> Graph:
    while True:
        g = synth_graph("erdos_renyi", {"n": n, "p": p}, int(rng.integers(2**63)), require_keep=False)
        if g.is_connected() and g.n_edges >= 1:
            return g


def suite_spectra(seed: int = 0, n_graphs: int = 40) -> SuiteResult:
    rng = np.random.default_rng(seed)
    ppr = ViewConfig(diffusion_kind="ppr", alpha=0.2, series_truncation=64, d_z=12)
    heat = ViewConfig(diffusion_kind="heat", heat_t=5.0, series_truncation=60, d_z=12)
    bound = (1 - ppr.alpha) ** ppr.series_truncation / ppr.alpha
    worst_ppr = worst_heat = 0.0
    for _ in range(n_graphs):
        g = _random_connected(rng, int(rng.integers(2, 13)), float(rng.uniform(0.2, 0.9)))
        worst_ppr = max(worst_ppr, np.abs(diffusion_spectrum(g, ppr) - diffusion_spectrum_series_oracle(g, ppr)).max())
        worst_heat = max(worst_heat, np.abs(diffusion_spectrum(g, heat) - diffusion_spectrum_series_oracle(g, heat)).max())
    k2 = Graph.from_edges(2, [(0, 1)])
    k3 = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    small = max(
        np.abs(diffusion_spectrum(k2, ViewConfig(d_z=2)) - [1, 1 / 9]).max(),
        np.abs(diffusion_spectrum(k3, ViewConfig(d_z=3)) - [1, 1 / 7, 1 / 7]).max(),
    )
    ok = worst_ppr <= bound and worst_heat <= 1e-10 and small <= 1e-9
    return SuiteResult("spectra", ok, f"ppr {worst_ppr:.2e} <= {bound:.2e}, heat {worst_heat:.2e}, K2/K3 {small:.1e}")


def _tiny_encoder(rng, d_x=4, d_u=4, d_z=6, d_h=5, layers=2):
    vcfg = ViewConfig(d_pad=d_x, d_u=d_u, d_z=d_z)
    ecfg = EncoderConfig(d_h=d_h, gnn_layers=layers, dropout_p=0.3)
    return vcfg, MultiViewEncoder(vcfg, ecfg, rng)


def suite_gradients(seed: int = 0, n_seeds: int = 3) -> SuiteResult:
    worst = 0.0
    for s in range(seed, seed + n_seeds):
        rng = np.random.default_rng(s)
        a = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        b = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
        mask = np.array([True, False, True])
        ops: list[Callable[[], Tensor]] = [
            lambda: (F.swish(a @ b) * F.sigmoid(a @ b)).sum(),
            lambda: F.log_softmax(a).sum() + F.masked_softmax(a, mask).sum() * 0.5,
            lambda: F.normalize_rows(a).sum() + (exp(a) / (1 + a * a)).sum(),
            lambda: F.cross_entropy(a, np.array([0, 1, 2, 1]), reduction="sum"),
            lambda: F.mse(F.relu(a @ b), np.ones((4, 2))),
        ]
        for fn in ops:
            worst = max(worst, finite_diff_check(fn, [a, b] if fn is ops[0] or fn is ops[4] else [a]))
        g = synth_graph("tree", {"n": 7, "d_x": 4}, s)
        g2 = synth_graph("cycle", {"n": 5, "d_x": 4}, s)
        vcfg, enc = _tiny_encoder(rng)
        bundles = [build_views(g, vcfg), build_views(g2, vcfg), build_views(g, vcfg)]

        def chain():
            h, _ = enc.encode(bundles, training=True, rng=np.random.default_rng(s))
            logits = proto_logits(h[:2], np.array([0, 1]), h[2:], 2)
            return F.cross_entropy(logits, np.array([0]), reduction="sum")

        worst = max(worst, finite_diff_check(chain, enc.parameters(), max_entries=6, seed=s))
    return SuiteResult("gradients", worst < 1e-4, f"max rel err {worst:.2e} < 1e-4")


def suite_permutation(seed: int = 0, n_graphs: int = 8, n_perms: int = 4) -> SuiteResult:
    rng = np.random.default_rng(seed)
    vcfg = ViewConfig(d_pad=8, d_u=8, d_z=16)
    enc = MultiViewEncoder(vcfg, EncoderConfig(d_h=16), rng)
    worst = 0.0
    for _ in range(n_graphs):
        g = _random_connected(rng, int(rng.integers(4, 15)), 0.35)
        g = g.with_features(rng.random((g.n_nodes, 8)))
        h0, _ = encode_graph(build_views(g, vcfg), enc)
        for _ in range(n_perms):
            h1, _ = encode_graph(build_views(g.permuted(rng.permutation(g.n_nodes)), vcfg), enc)
            worst = max(worst, float(np.abs(h0.data - h1.data).max()))
    return SuiteResult("permutation", worst <= 1e-9, f"max deviation {worst:.1e} <= 1e-9")


def suite_heads(seed: int = 0, n_instances: int = 300) -> SuiteResult:
    rng = np.random.default_rng(seed)
    mismatches, worst_sum = 0, 0.0
    for _ in range(n_instances):
        k, d, nq = int(rng.integers(2, 6)), int(rng.integers(1, 8)), int(rng.integers(1, 10))
        h_s, h_q = rng.normal(size=(k, d)), rng.normal(size=(nq, d))
        y_s = rng.permutation(k)
        p = proto_head(h_s, y_s, h_q, k).data
        nn = y_s[np.argmin(((h_q[:, None, :] - h_s[None, :, :]) ** 2).sum(-1), axis=1)]
        mismatches += int((np.argmax(p, axis=1) != nn).sum())
        m = match_head(h_s, y_s, h_q, k).data
        worst_sum = max(worst_sum, np.abs(p.sum(1) - 1).max(), np.abs(m.sum(1) - 1).max())
    ok = mismatches == 0 and worst_sum <= 1e-12
    return SuiteResult("heads", ok, f"1-shot NN mismatches {mismatches}, simplex err {worst_sum:.1e}")


def suite_centrality(seed: int = 0, n_graphs: int = 20) -> SuiteResult:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_graphs):
        g = _random_connected(rng, int(rng.integers(3, 20)), 0.3)
        dist = np.full((g.n_nodes, g.n_nodes), np.inf)
        adj = g.dense_adjacency() > 0
        for s in range(g.n_nodes):
            dist[s, s] = 0
            frontier, d = {s}, 0
            while frontier:
                d += 1
                nxt = {int(v) for u in frontier for v in np.flatnonzero(adj[u]) if dist[s, v] == np.inf}
                for v in nxt:
                    dist[s, v] = d
                frontier = nxt
        with np.errstate(divide="ignore"):
            inv = np.where(dist > 0, 1.0 / dist, 0.0)
        score = harmonic_centrality(g)
        bad += int(not np.allclose(score, inv.sum(0), atol=1e-12, rtol=0))
        perm = rng.permutation(g.n_nodes)
        bad += int(not np.array_equal(harmonic_centrality(g.permuted(perm))[perm], score))
    return SuiteResult("centrality", bad == 0, f"{bad} failures over {n_graphs} graphs")


def suite_roundtrip(seed: int = 0, n_graphs: int = 6) -> SuiteResult:
    rng = np.random.default_rng(seed)
    graphs = [_random_connected(rng, int(rng.integers(2, 10)), 0.5) for _ in range(n_graphs)]
    graphs = [g.with_features(rng.random((g.n_nodes, 3))) for g in graphs]
    with tempfile.TemporaryDirectory() as tmp:
        write_tudataset(tmp, "RT", graphs)
        back = load_tudataset(tmp, "RT")
    ok = len(back) == len(graphs) and all(
        np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
        and np.array_equal(a.x / a.x.sum(1, keepdims=True), b.x)
        for a, b in zip(graphs, back)
    )
    return SuiteResult("roundtrip", ok, f"{len(back)} graphs re-read")


def suite_backends(seed: int = 0, n_graphs: int = 10) -> SuiteResult:
    if kernels.BACKEND == "python":
        return SuiteResult("backends", True, "compiled kernels not built; python fallback only")
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_graphs):
        g = synth_graph("erdos_renyi", {"n": int(rng.integers(2, 40)), "p": 0.15}, int(rng.integers(2**63)),
                        require_keep=False)
        h = rng.normal(size=(g.n_nodes, 3))
        bad += int(not np.array_equal(kernels.neighbor_sum(g.indptr, g.indices, h),
                                      _pykernels.neighbor_sum(g.indptr, g.indices, h)))
        bad += int(not np.array_equal(kernels.connected_components(g.indptr, g.indices),
                                      _pykernels.connected_components(g.indptr, g.indices)))
        if g.is_connected():
            bad += int(not np.array_equal(kernels.harmonic_centrality(g.indptr, g.indices),
                                          _pykernels.harmonic_centrality(g.indptr, g.indices)))
    return SuiteResult("backends", bad == 0, f"{kernels.BACKEND} vs python: {bad} mismatches")


SUITES = {
    "spectra": suite_spectra,
    "gradients": suite_gradients,
    "permutation": suite_permutation,
    "heads": suite_heads,
    "centrality": suite_centrality,
    "roundtrip": suite_roundtrip,
    "backends": suite_backends,
}


def run_suites(names=None, seed: int = 0) -> list:
    results = []
    for name in names or SUITES:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
        t0 = time.perf_counter()
        try:
            r = SUITES[name](seed)
        except Exception as exc:  # a crashing suite is a failing suite
            r = SuiteResult(name, False, f"{type(exc).__name__}: {exc}")
        r.seconds = time.perf_counter() - t0
        results.append(r)
    return results
