import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metaview.benchbuild import (
    BIOINFORMATICS_DATASETS,
    MOLECULE_DATASETS,
    SOCIAL_DATASETS,
    BenchmarkError,
    BenchmarkManifest,
    InfeasibleSplitError,
    SingleTaskDataset,
    SourceDataset,
    TaskManifest,
    assemble_benchmark,
    build_benchmark,
    build_task,
    load_samples,
    origin_atomicity_violations,
    published_split_of_origin,
    sample_sharing_violations,
    split_multiclass,
    split_multitask,
    tasks_from_manifest,
    tasks_from_source,
)
from metaview.views import ViewConfig


@pytest.fixture(scope="module")
def expected(fixtures_dir):
    return json.loads((fixtures_dir / "corpus_expected.json").read_text())


def source(name, labels):
    labels = np.asarray(labels, dtype=np.float64)
    if labels.ndim == 1:
        labels = labels[:, None]
    return SourceDataset(name, [f"{name}#{i + 1}" for i in range(labels.shape[0])], labels, "molecules")


def kinds(warnings):
    out = {}
    for w in warnings:
        out[w["kind"]] = out.get(w["kind"], 0) + 1
    return out


# -- splitting ------------------------------------------------------------------------------


def test_two_column_multitask_split():
    rng = np.random.default_rng(0)
    ds = source("MT", rng.integers(0, 2, size=(400, 2)))
    singles, warnings = split_multitask(ds, seed=1)
    assert [s.name for s in singles] == ["MT/task0", "MT/task1"] and warnings == []
    ids = [set(s.sample_ids) for s in singles]
    assert not ids[0] & ids[1] and len(ids[0] | ids[1]) == 400
    for s in singles:
        assert all(np.sum(s.labels == c) >= 70 for c in (0, 1))


def test_toxcast_like_stub_yields_17_tasks():
    # 17 columns over 17 * 150 samples, every column balanced on its own block
    n = 17 * 150
    labels = np.full((n, 17), np.nan)
    for t in range(17):
        labels[t * 150:(t + 1) * 150, t] = np.tile([0, 1], 75)
    tasks, warnings = tasks_from_source(source("TOXLIKE", labels), seed=0)
    assert len(tasks) == 17 and warnings == []


def test_single_column_is_an_identity_split():
    ds = source("S", [0, 1] * 70 + [np.nan])
    singles, _ = split_multitask(ds, 0)
    assert len(singles) == 1 and len(singles[0].sample_ids) == 140


def test_enzymes_like_six_classes_give_three_pairs():
    ds = SingleTaskDataset("ENZ", "ENZ", [f"e{i}" for i in range(600)], np.repeat(np.arange(1, 7), 100))
    pairs, warnings = split_multiclass(ds, seed=4)
    assert len(pairs) == 3 and warnings == []
    used = [c for p in pairs for c in p.classes]
    assert sorted(used) == [1, 2, 3, 4, 5, 6]


def test_three_classes_leave_one_unused():
    ds = SingleTaskDataset("C3", "C3", [f"c{i}" for i in range(240)], np.repeat([0, 1, 2], 80))
    pairs, warnings = split_multiclass(ds, seed=0)
    assert len(pairs) == 1 and kinds(warnings) == {"class_unused": 1}


def test_multiclass_needs_three_classes():
    with pytest.raises(BenchmarkError):
        split_multiclass(SingleTaskDataset("B", "B", ["a", "b"], np.array([0, 1])), 0)


def test_task_with_exactly_seventy_per_class():
    ds = SingleTaskDataset("E", "E", [f"s{i}" for i in range(140)], np.repeat([0, 1], 70))
    t = build_task(ds, 0)
    assert len(t.support) == 40 and len(t.query) == 100
    assert set(t.support).isdisjoint(t.query) and len(set(t.support + t.query)) == 140


def test_task_with_sixty_nine_fails():
    ds = SingleTaskDataset("E", "E", [f"s{i}" for i in range(139)], np.array([0] * 70 + [1] * 69))
    with pytest.raises(BenchmarkError, match="class 1 has 69"):
        build_task(ds, 0)


@given(st.integers(0, 2**32))
def test_built_tasks_are_balanced_and_disjoint(seed):
    ds = SingleTaskDataset("P", "P", [f"p{i}" for i in range(180)], np.repeat([3, 7], 90))
    t = build_task(ds, seed)
    lab = dict(zip(ds.sample_ids, ds.labels))
    assert [lab[s] for s in t.support].count(3) == 20 and [lab[s] for s in t.query].count(7) == 50
    assert not set(t.support) & set(t.query)


# -- assembly ------------------------------------------------------------------------------------


def stub(tid, origin):
    return TaskManifest(tid, origin, [0, 1], [f"{origin}:s"], [f"{origin}:q"], 0)


def test_single_origin_cannot_fill_dev_and_test():
    tasks = [stub(f"A/{i}", "A") for i in range(3)]
    with pytest.raises(InfeasibleSplitError, match="A"):
        assemble_benchmark(tasks, [], dev_size=1, test_size=1)


def test_target_origin_may_not_feed_sources():
    with pytest.raises(InfeasibleSplitError):
        assemble_benchmark([stub("A/0", "A")], [stub("A/1", "A")])


def test_duplicate_ids_rejected():
    with pytest.raises(BenchmarkError):
        assemble_benchmark([stub("A", "A")], [stub("A", "B")])


@given(st.lists(st.integers(1, 4), min_size=3, max_size=7), st.integers(0, 1000))
def test_allocation_keeps_origins_whole(sizes, seed):
    tasks = [stub(f"O{o}/{i}", f"O{o}") for o, n in enumerate(sizes) for i in range(n)]
    try:
        m = assemble_benchmark(tasks, [], seed=seed, dev_size=sizes[0], test_size=sizes[1])
    except InfeasibleSplitError:
        return
    assert origin_atomicity_violations(m) == []
    assert m.counts["dev"] == sizes[0] and m.counts["test"] == sizes[1]
    assert sum(m.counts.values()) == len(tasks)


# -- fixture corpus --------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def corpus(fixtures_dir):
    return fixtures_dir / "corpus"


@pytest.mark.parametrize("bench", ["mol_bio", "mol_social", "mol_mol"])
def test_fixture_benchmarks(corpus, expected, bench):
    spec = expected["benchmarks"][bench]
    m = build_benchmark(corpus, spec["sources"], spec["targets"], seed=0, name=bench,
                        target_domain=spec["target_domain"], dev_size=spec["dev_size"],
                        test_size=spec["test_size"])
    assert m.counts == spec["counts"]
    assert kinds(m.warnings) == spec["warning_kinds"]
    assert origin_atomicity_violations(m) == [] and sample_sharing_violations(m) == []
    for t in m.tasks:
        assert len(t.support) == 40 and len(t.query) == 100


def test_fixture_task_ids(corpus, expected):
    m = build_benchmark(corpus, ["MOLA", "MOLB", "MOLMT", "MOLMC"], ["BIOA"], seed=0,
                        target_domain="bioinformatics", dev_size=1)
    ids = {t.task_id for t in m.tasks}
    for name, d in expected["datasets"].items():
        if "tasks" in d and name in ("MOLA", "MOLB", "MOLMT", "BIOA"):
            assert set(d["tasks"]) <= ids
    assert sum(tid.startswith("MOLMC/") for tid in ids) == expected["datasets"]["MOLMC"]["n_tasks"]
    assert m.splits["test"] == ["BIOA"]


def test_manifest_hash_is_stable_and_round_trips(corpus, tmp_path):
    args = dict(seed=3, target_domain="bioinformatics", dev_size=1)
    a = build_benchmark(corpus, ["MOLA", "MOLMT"], ["BIOA"], **args)
    b = build_benchmark(corpus, ["MOLA", "MOLMT"], ["BIOA"], **args)
    assert a.hash() == b.hash() and a.dumps() == b.dumps()
    back = BenchmarkManifest.load(a.save(tmp_path / "m.json"))
    assert back.hash() == a.hash()
    c = build_benchmark(corpus, ["MOLA", "MOLMT"], ["BIOA"], **dict(args, seed=4))
    assert c.hash() != a.hash()


def test_rehydrated_tasks_match_manifest(corpus):
    m = build_benchmark(corpus, ["MOLA", "MOLMT"], ["BIOA"], target_domain="bioinformatics", dev_size=1)
    samples = load_samples(corpus, m, ViewConfig(d_z=16), splits=("test", "dev"))
    for split in ("test", "dev"):
        for task in tasks_from_manifest(m, samples, split):
            tm = m.task(task.task_id)
            assert [b.origin_id for b, _ in task.items] == tm.support
            assert [b.origin_id for b, _ in task.query_items] == tm.query
            assert {y for _, y in task.items} == set(tm.classes)
    with pytest.raises(BenchmarkError, match="missing sample data"):
        tasks_from_manifest(m, {}, "test")


# -- published benchmark tables ------------------------------------------------------------------


def test_published_task_counts():
    for target, domain_tasks in (("bioinformatics", BIOINFORMATICS_DATASETS), ("social", SOCIAL_DATASETS)):
        splits = published_split_of_origin(target)
        counts = {s: sum(MOLECULE_DATASETS[d][0] for d in splits if splits[d] == s) for s in ("train", "dev")}
        assert (counts["train"], counts["dev"], sum(domain_tasks.values())) == ({"bioinformatics": (186, 5, 24),
                                                                                "social": (186, 5, 12)}[target])
    splits = published_split_of_origin("molecules")
    per = {s: sum(MOLECULE_DATASETS[d][0] for d in splits if splits[d] == s) for s in ("train", "dev", "test")}
    assert per == {"train": 168, "dev": 5, "test": 18}


def test_subsampled_graphs_are_flagged(corpus):
    m = build_benchmark(corpus, ["MOLB"], [], dev_size=0)
    flagged = [w for w in m.warnings if w["kind"] == "graphs_subsampled"]
    assert flagged == [{"kind": "graphs_subsampled", "dataset": "MOLB",
                        "rule": "top_centrality_largest_component", "graphs": ["MOLB#151"]}]
