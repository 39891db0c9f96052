"""Acceptance criteria, one test per criterion.

Each test records a ``criterion N PASS|FAIL ...`` line that is printed in
the terminal summary. The synthetic transfer runs are shared between
criteria 6 and 9 through a session fixture.
"""
import json
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from metaview.benchbuild import (
    BIOINFORMATICS_DATASETS,
    MOLECULE_DATASETS,
    build_benchmark,
    origin_atomicity_violations,
    published_split_of_origin,
    sample_sharing_violations,
)
from metaview.cli import SYNTHETIC_PRESET, train_and_evaluate
from metaview.config import RunConfig
from metaview.diffcore.tensor import Tensor
from metaview.encoder import EncoderConfig, MultiViewEncoder, encode_graph
from metaview.graphcore import Graph, synth_graph
from metaview.meta import Task, TrainConfig, match_head, meta_train, proto_head
from metaview.synthetic import SyntheticSuiteConfig, make_suite
from metaview.verify import suite_gradients
from metaview.views import ViewConfig, build_views, diffusion_spectrum

from conftest import ACCEPTANCE_LINES
from oracles import nearest_support, series_spectrum


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def random_connected(rng, n_max=12):
    while True:
        n = int(rng.integers(2, n_max + 1))
        p = float(rng.uniform(0.15, 0.9))
        upper = np.triu(rng.random((n, n)) < p, 1)
        g = Graph.from_edges(n, np.argwhere(upper))
        if g.n_edges and g.is_connected():
            return g


def test_criterion_1_spectral_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    alpha, k_ppr, k_heat = 0.2, 64, 60
    bound = (1 - alpha) ** k_ppr / alpha
    worst_ppr = worst_heat = 0.0
    for _ in range(200):
        g = random_connected(rng)
        adj = g.dense_adjacency()
        z = diffusion_spectrum(g, ViewConfig(alpha=alpha, d_z=12))
        worst_ppr = max(worst_ppr, np.abs(z - series_spectrum(adj, "ppr", alpha=alpha, k_terms=k_ppr, d_z=12)).max())
        t = float(rng.uniform(0.1, 5.0))
        z = diffusion_spectrum(g, ViewConfig(diffusion_kind="heat", heat_t=t, d_z=12))
        worst_heat = max(worst_heat, np.abs(z - series_spectrum(adj, "heat", t=t, k_terms=k_heat, d_z=12)).max())
    seconds = time.perf_counter() - t0
    ok = worst_ppr <= bound and worst_heat <= 1e-10 and seconds < 30
    record(1, ok, f"ppr max {worst_ppr:.2e} <= {bound:.2e}, heat max {worst_heat:.2e} <= 1e-10, {seconds:.1f}s < 30s")


def test_criterion_2_small_graph_spectra():
    k2 = Graph.from_edges(2, [(0, 1)])
    k3 = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    err = max(np.abs(diffusion_spectrum(k2, ViewConfig(d_z=2)) - [1, 1 / 9]).max(),
              np.abs(diffusion_spectrum(k3, ViewConfig(d_z=3)) - [1, 1 / 7, 1 / 7]).max())
    dense = max(np.abs(series_spectrum(k2.dense_adjacency(), "ppr", k_terms=400) - [1, 1 / 9]).max(),
                np.abs(series_spectrum(k3.dense_adjacency(), "ppr", k_terms=400) - [1, 1 / 7, 1 / 7]).max())
    record(2, err <= 1e-9 and dense <= 1e-9, f"K2/K3 max error {err:.1e}, dense oracle {dense:.1e} <= 1e-9")


def test_criterion_3_gradient_suite():
    t0 = time.perf_counter()
    result = suite_gradients(seed=0, n_seeds=10)
    seconds = time.perf_counter() - t0
    record(3, result.passed and seconds < 120, f"{result.detail} over 10 seeds, {seconds:.1f}s < 120s")


def test_criterion_4_permutation_invariance():
    rng = np.random.default_rng(404)
    vcfg = ViewConfig(d_pad=8, d_u=8, d_z=32)
    enc = MultiViewEncoder(vcfg, EncoderConfig(d_h=32), np.random.default_rng(4))
    worst = 0.0
    for _ in range(50):
        g = random_connected(rng, n_max=30)
        g = g.with_features(rng.random((g.n_nodes, 6)))
        h0, a0 = encode_graph(build_views(g, vcfg), enc)
        for _ in range(20):
            h1, a1 = encode_graph(build_views(g.permuted(rng.permutation(g.n_nodes)), vcfg), enc)
            worst = max(worst, np.abs(h0.data - h1.data).max(), np.abs(a0.data - a1.data).max())
    record(4, worst <= 1e-9, f"max deviation {worst:.1e} <= 1e-9 (50 graphs x 20 permutations)")


def test_criterion_5_overfit_fixture():
    t0 = time.perf_counter()
    vcfg = ViewConfig(d_z=32)
    suite_cfg = SyntheticSuiteConfig(n_train_tasks=1, n_dev_tasks=1, n_test_tasks=1, support_pool=5,
                                     query_per_class=10, min_nodes=10, max_nodes=20, seed=5)
    train, _, _ = make_suite(suite_cfg, vcfg)
    enc_cfg = EncoderConfig(d_h=32, dropout_p=0.0, use_fwt=False)
    enc = MultiViewEncoder(vcfg, enc_cfg, np.random.default_rng(5))
    cfg = TrainConfig(n_shot=5, n_query=10, meta_batch=1, epochs=500, seed=5)
    result = meta_train(enc, train, cfg)
    losses = np.array(result.step_losses)
    below = np.flatnonzero(losses < 0.05)
    seconds = time.perf_counter() - t0
    first = int(below[0]) + 1 if below.size else None
    ok = first is not None and first <= 500 and seconds < 120
    record(5, ok, f"query loss < 0.05 first at step {first} of {losses.size}, final {losses[-1]:.2e}, "
                  f"{seconds:.1f}s < 120s")


# -- synthetic transfer -------------------------------------------------------------------------


def transfer_config():
    return replace(RunConfig(), **SYNTHETIC_PRESET)


def transfer_run(views):
    cfg = transfer_config()
    t0 = time.perf_counter()
    train, dev, test = make_suite(SyntheticSuiteConfig(seed=cfg.seed), cfg.view_config())
    _, _, result, report = train_and_evaluate(cfg, train, dev, test, "synthetic", views)
    return report, result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def transfer_runs():
    return {"full": transfer_run("X,U,Z"), "x": transfer_run("X")}


@pytest.mark.slow
def test_criterion_6_synthetic_transfer(transfer_runs):
    full, _, t_full = transfer_runs["full"]
    xonly, _, t_x = transfer_runs["x"]
    acc, acc_x = full["aggregate"]["mean"], xonly["aggregate"]["mean"]
    seconds = t_full + t_x
    ok = acc >= 0.80 and acc - acc_x >= 0.10 and seconds < 900
    record(6, ok, f"X,U,Z {acc:.3f} >= 0.80, X-only {acc_x:.3f}, gap {acc - acc_x:.3f} >= 0.10, "
                  f"{seconds:.0f}s < 900s")


@pytest.mark.slow
def test_criterion_9_determinism(transfer_runs):
    first, first_result, _ = transfer_runs["full"]
    second, second_result, _ = transfer_run("X,U,Z")
    same = json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)
    same_history = first_result.history == second_result.history
    record(9, same and same_history, f"repeat run report identical: {same}, history identical: {same_history}")


# -- benchmark factory ----------------------------------------------------------------------------


def test_criterion_7_benchmark_counts(fixtures_dir):
    expected = json.loads((fixtures_dir / "corpus_expected.json").read_text())
    details, ok = [], True
    for name, spec in expected["benchmarks"].items():
        m = build_benchmark(fixtures_dir / "corpus", spec["sources"], spec["targets"], seed=0, name=name,
                            target_domain=spec["target_domain"], dev_size=spec["dev_size"],
                            test_size=spec["test_size"])
        good = (m.counts == spec["counts"] and not origin_atomicity_violations(m)
                and not sample_sharing_violations(m))
        ok &= good
        details.append(f"{name} {m.counts['train']}/{m.counts['dev']}/{m.counts['test']}")
    record(7, ok, "fixture " + ", ".join(details) + " match expectation; atomicity and disjointness scans clean")


@pytest.mark.skipif(not os.environ.get("METAVIEW_DATA_DIR"), reason="full TUDataset corpus not available")
def test_criterion_7_full_data():
    root = os.environ["METAVIEW_DATA_DIR"]
    splits = published_split_of_origin("bioinformatics")
    m = build_benchmark(root, sorted(MOLECULE_DATASETS), sorted(BIOINFORMATICS_DATASETS), seed=0,
                        name="molecules-bioinformatics", target_domain="bioinformatics",
                        split_of_origin=splits)
    counts = (m.counts["train"], m.counts["dev"], m.counts["test"])
    ok = counts == (187, 5, 24) and not origin_atomicity_violations(m) and not sample_sharing_violations(m)
    record(7, ok, f"full data Molecules->Bioinformatics {counts} vs (187, 5, 24)")


# -- heads --------------------------------------------------------------------------------------------


def test_criterion_8_head_correctness():
    rng = np.random.default_rng(808)
    mismatches, worst = 0, 0.0
    for _ in range(1000):
        k, d, nq = int(rng.integers(2, 8)), int(rng.integers(1, 10)), int(rng.integers(1, 12))
        h_s, h_q = rng.normal(size=(k, d)), rng.normal(size=(nq, d))
        y_s = rng.permutation(k)
        p = proto_head(Tensor(h_s), y_s, Tensor(h_q), k).data
        mismatches += int(np.sum(np.argmax(p, 1) != np.asarray(nearest_support(h_s, y_s, h_q))))
        m = match_head(h_s, y_s, h_q, k).data
        worst = max(worst, np.abs(p.sum(1) - 1).max(), np.abs(m.sum(1) - 1).max())
    record(8, mismatches == 0 and worst <= 1e-12,
           f"1-shot proto vs nearest neighbour: {mismatches} mismatches / 1000; row-sum error {worst:.1e} <= 1e-12")
