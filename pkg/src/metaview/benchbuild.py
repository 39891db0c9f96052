"""Benchmark factory: per-dataset task extraction and origin-atomic splitting.

Manifests store sample identities (``origin_id`` strings), never graphs.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .graphcore import FilterLimits, LabeledDataset, preprocess_graphs, read_tudataset
from .meta.episodes import Task
from .meta.train import derive_seed
from .views import ViewConfig, build_views_many

MANIFEST_VERSION = 1
SUPPORT_PER_CLASS = 20
QUERY_PER_CLASS = 50
SPLITS = ("train", "dev", "test")


class BenchmarkError(ValueError):
    pass


class InfeasibleSplitError(BenchmarkError):
    pass


@dataclass
class SingleTaskDataset:
    """One binary-or-multiclass task: sample ids with one integer label each."""

    name: str
    origin: str
    sample_ids: list
    labels: np.ndarray
    meta_domain: str = ""
    column: int = 0

    @property
    def classes(self) -> list:
        return sorted(set(int(v) for v in self.labels))


@dataclass
class SourceDataset:
    """Filtered samples of one source dataset with its (n, T) label matrix."""

    name: str
    sample_ids: list
    labels: np.ndarray
    meta_domain: str = ""
    subsampled: list = field(default_factory=list)  # origin ids cut to the top-centrality component

    @classmethod
    def from_labeled(cls, data: LabeledDataset, limits: Optional[FilterLimits] = FilterLimits()):
        """Apply the filtering rules; returns ``(source, kept_graphs, dropped)``."""
        graphs = data.graphs
        dropped: dict = {}
        if limits is not None:
            graphs, dropped = preprocess_graphs(graphs, limits)
        index = {g.origin_id: i for i, g in enumerate(data.graphs)}
        rows = [index[g.origin_id] for g in graphs]
        cut = [g.origin_id for g in graphs if g.n_nodes != data.graphs[index[g.origin_id]].n_nodes]
        src = cls(data.name, [g.origin_id for g in graphs], data.labels[rows], data.meta_domain, cut)
        return src, graphs, dropped


@dataclass
class TaskManifest:
    task_id: str
    source: str
    classes: list
    support: list
    query: list
    seed: int
    meta_domain: str = ""
    label_column: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def _warning(kind: str, **fields) -> dict:
    return {"kind": kind, **fields}


def _usable(labels: np.ndarray) -> np.ndarray:
    return np.isfinite(labels)


def split_multitask(
    dataset: SourceDataset,
    seed: int,
    per_class: int = SUPPORT_PER_CLASS + QUERY_PER_CLASS,
) -> tuple[list, list]:
    """Split a T-task dataset into T single-task datasets sharing no sample.

    Tasks are served rarest-first: each takes ``per_class`` unassigned samples
    of each of its classes, drawn in seeded order. Tasks that cannot be served
    are skipped with a warning. Leftover samples then go, in seeded order, to
    the labelled retained task that currently holds the fewest samples.
    Returns ``(datasets, warnings)``.
    """
    labels = np.asarray(dataset.labels, dtype=np.float64).reshape(len(dataset.sample_ids), -1)
    n, t_count = labels.shape
    if t_count == 1:
        ok = _usable(labels[:, 0])
        ids = [s for s, keep in zip(dataset.sample_ids, ok) if keep]
        return [SingleTaskDataset(dataset.name, dataset.name, ids, labels[ok, 0].astype(np.int64),
                                  dataset.meta_domain, 0)], []
    rng = np.random.default_rng([seed, 1])
    order = rng.permutation(n)
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    assigned = np.full(n, -1, dtype=np.int64)
    warnings = []

    def minority(t):
        col = labels[:, t]
        _, counts = np.unique(col[_usable(col)].astype(np.int64), return_counts=True)
        return int(counts.min()) if counts.size > 1 else 0

    retained = []
    for t in sorted(range(t_count), key=lambda t: (minority(t), t)):
        col = labels[:, t]
        usable = _usable(col)
        classes = sorted(set(col[usable].astype(np.int64).tolist()))
        picks, short = [], None
        for c in classes:
            pool = np.flatnonzero(usable & (assigned < 0) & (col == c))
            pool = pool[np.argsort(rank[pool])]
            if pool.shape[0] < per_class:
                short = (c, int(pool.shape[0]))
                break
            picks.append(pool[:per_class])
        if short is not None or len(classes) < 2:
            warnings.append(_warning(
                "task_skipped", dataset=dataset.name, task=t,
                reason="single class" if len(classes) < 2 else f"class {short[0]} has {short[1]} free samples",
            ))
            continue
        assigned[np.concatenate(picks)] = t
        retained.append(t)
    held = {t: int(np.sum(assigned == t)) for t in retained}
    for i in order:
        if assigned[i] >= 0:
            continue
        options = [t for t in retained if np.isfinite(labels[i, t])]
        if not options:
            continue
        t = min(options, key=lambda t: (held[t], t))
        assigned[i] = t
        held[t] += 1
    out = []
    for t in sorted(retained):
        rows = np.flatnonzero(assigned == t)
        out.append(SingleTaskDataset(
            f"{dataset.name}/task{t}", dataset.name, [dataset.sample_ids[i] for i in rows],
            labels[rows, t].astype(np.int64), dataset.meta_domain, t,
        ))
    return out, warnings


def split_multiclass(
    dataset: SingleTaskDataset,
    seed: int,
    per_class: int = SUPPORT_PER_CLASS + QUERY_PER_CLASS,
) -> tuple[list, list]:
    """Pair the C classes at random into floor(C/2) binary datasets.

    Pairs with a class below ``per_class`` samples are skipped with a warning.
    Returns ``(datasets, warnings)``.
    """
    classes = dataset.classes
    if len(classes) < 3:
        raise BenchmarkError(f"{dataset.name} has {len(classes)} classes; multiclass split needs at least 3")
    rng = np.random.default_rng([seed, 2])
    shuffled = [classes[i] for i in rng.permutation(len(classes))]
    out, warnings = [], []
    for a, b in zip(shuffled[0::2], shuffled[1::2]):
        pair = sorted((a, b))
        counts = {c: int(np.sum(dataset.labels == c)) for c in pair}
        small = [c for c in pair if counts[c] < per_class]
        if small:
            warnings.append(_warning("pair_skipped", dataset=dataset.name, classes=pair,
                                     reason=f"class {small[0]} has {counts[small[0]]} samples"))
            continue
        rows = np.flatnonzero(np.isin(dataset.labels, pair))
        out.append(SingleTaskDataset(
            f"{dataset.name}/{pair[0]}-{pair[1]}", dataset.origin, [dataset.sample_ids[i] for i in rows],
            dataset.labels[rows], dataset.meta_domain, dataset.column,
        ))
    if len(shuffled) % 2:
        warnings.append(_warning("class_unused", dataset=dataset.name, classes=[shuffled[-1]]))
    return out, warnings


def build_task(
    dataset: SingleTaskDataset,
    seed: int,
    n_support: int = SUPPORT_PER_CLASS,
    n_query: int = QUERY_PER_CLASS,
) -> TaskManifest:
    """Seeded draw of ``n_support`` + ``n_query`` samples per class."""
    classes = dataset.classes
    if len(classes) != 2:
        raise BenchmarkError(f"{dataset.name} has {len(classes)} classes; tasks are 2-way")
    rng = np.random.default_rng([seed, 3])
    support, query = [], []
    for c in classes:
        rows = np.flatnonzero(dataset.labels == c)
        if rows.shape[0] < n_support + n_query:
            raise BenchmarkError(
                f"{dataset.name}: class {c} has {rows.shape[0]} samples, need {n_support + n_query}"
            )
        drawn = rng.choice(rows, size=n_support + n_query, replace=False)
        support.extend(dataset.sample_ids[i] for i in drawn[:n_support])
        query.extend(dataset.sample_ids[i] for i in drawn[n_support:])
    return TaskManifest(dataset.name, dataset.origin, classes, support, query, seed,
                        dataset.meta_domain, dataset.column)


def tasks_from_source(
    dataset: SourceDataset,
    seed: int,
    n_support: int = SUPPORT_PER_CLASS,
    n_query: int = QUERY_PER_CLASS,
) -> tuple[list, list]:
    """Every 2-way task one source dataset yields, plus the warnings raised."""
    per_class = n_support + n_query
    singles, warnings = split_multitask(dataset, seed, per_class)
    binaries = []
    for single in singles:
        n_classes = len(single.classes)
        if n_classes >= 3:
            pairs, w = split_multiclass(single, seed, per_class)
            binaries.extend(pairs)
            warnings.extend(w)
        elif n_classes == 2:
            binaries.append(single)
        else:
            warnings.append(_warning("task_skipped", dataset=single.name, reason="single class"))
    tasks = []
    for i, b in enumerate(binaries):
        short = [c for c in b.classes if np.sum(b.labels == c) < per_class]
        if short:
            warnings.append(_warning("task_skipped", dataset=b.name,
                                     reason=f"class {short[0]} has {int(np.sum(b.labels == short[0]))} samples"))
            continue
        tasks.append(build_task(b, seed + i, n_support, n_query))
    return tasks, warnings


# -- assembly -------------------------------------------------------------------


def _subset_with_sum(origins: list, counts: Mapping[str, int], target: int) -> Optional[list]:
    """First subset (in the given origin order) whose task counts sum to target."""
    if target == 0:
        return []
    reach = {0: None}
    for i, o in enumerate(origins):
        c = counts[o]
        for s in sorted(reach, reverse=True):
            if s + c <= target and s + c not in reach:
                reach[s + c] = (s, i)
        if target in reach:
            break
    if target not in reach:
        return None
    picked, s = [], target
    while s:
        prev, i = reach[s]
        picked.append(origins[i])
        s = prev
    return picked


def _allocate(by_origin: Mapping[str, list], test_size: int, dev_size: int, seed: int) -> dict:
    """Pick whole origins for test and dev with exact task counts; the rest train.

    The first seeded origin order that admits test, dev and a nonempty train
    wins; every rotation of that order is tried before giving up.
    """
    rng = np.random.default_rng([seed, 4])
    base = sorted(by_origin)
    base = [base[i] for i in rng.permutation(len(base))]
    counts = {o: len(v) for o, v in by_origin.items()}
    for shift in range(max(1, len(base))):
        origins = base[shift:] + base[:shift]
        test = _subset_with_sum(origins, counts, test_size)
        if test is None:
            continue
        rest = [o for o in origins if o not in test]
        dev = _subset_with_sum(rest, counts, dev_size)
        if dev is None:
            continue
        train = [o for o in rest if o not in dev]
        if train:
            return {"train": train, "dev": dev, "test": test}
    too_big = sorted(o for o in base if counts[o] > max(test_size, dev_size, 1))
    blocking = too_big or base
    raise InfeasibleSplitError(
        f"cannot place {test_size} test and {dev_size} dev tasks and keep a train split "
        f"without dividing an origin; blocking origins: {sorted(blocking)}"
    )


@dataclass
class BenchmarkManifest:
    name: str
    seed: int
    source_domain: str
    target_domain: str
    tasks: list
    splits: dict
    warnings: list = field(default_factory=list)
    version: int = MANIFEST_VERSION
    tool_version: str = __version__
    config_hash: str = ""

    @property
    def counts(self) -> dict:
        return {k: len(self.splits[k]) for k in SPLITS}

    def task(self, task_id: str) -> TaskManifest:
        for t in self.tasks:
            if t.task_id == task_id:
                return t
        raise KeyError(task_id)

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "tool_version": self.tool_version,
            "config_hash": self.config_hash,
            "name": self.name,
            "seed": self.seed,
            "source_domain": self.source_domain,
            "target_domain": self.target_domain,
            "tasks": [t.to_json() for t in self.tasks],
            "splits": {k: list(self.splits[k]) for k in SPLITS},
            "counts": self.counts,
            "warnings": list(self.warnings),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.dumps())
        return path

    @classmethod
    def from_json(cls, doc: dict) -> "BenchmarkManifest":
        if doc.get("version") != MANIFEST_VERSION:
            raise BenchmarkError(f"unsupported manifest version {doc.get('version')}")
        return cls(
            name=doc["name"], seed=doc["seed"], source_domain=doc["source_domain"],
            target_domain=doc["target_domain"], tasks=[TaskManifest(**t) for t in doc["tasks"]],
            splits={k: list(doc["splits"][k]) for k in SPLITS}, warnings=list(doc.get("warnings", [])),
            version=doc["version"], tool_version=doc.get("tool_version", __version__),
            config_hash=doc.get("config_hash", ""),
        )

    @classmethod
    def load(cls, path) -> "BenchmarkManifest":
        return cls.from_json(json.loads(Path(path).read_text()))


def assemble_benchmark(
    source_tasks: Sequence[TaskManifest],
    target_tasks: Sequence[TaskManifest],
    origin_map: Optional[Mapping[str, str]] = None,
    seed: int = 0,
    *,
    name: str = "benchmark",
    source_domain: str = "",
    target_domain: str = "",
    dev_size: int = 0,
    test_size: int = 0,
    split_of_origin: Optional[Mapping[str, str]] = None,
    warnings: Sequence = (),
) -> BenchmarkManifest:
    """Allocate tasks to train/dev/test keeping each origin dataset in one split.

    Target tasks always go to test. With ``split_of_origin`` the source
    allocation is taken from that map; otherwise ``test_size`` then
    ``dev_size`` source tasks are drawn as whole origins (seeded order, exact
    sizes) and the rest train.
    """
    origin_map = dict(origin_map or {})
    origin_of = lambda t: origin_map.get(t.task_id, t.source)  # noqa: E731
    all_ids = [t.task_id for t in list(source_tasks) + list(target_tasks)]
    if len(set(all_ids)) != len(all_ids):
        raise BenchmarkError("duplicate task ids")
    splits = {k: [] for k in SPLITS}
    splits["test"].extend(t.task_id for t in target_tasks)
    by_origin: dict = {}
    for t in source_tasks:
        by_origin.setdefault(origin_of(t), []).append(t.task_id)
    target_origins = {origin_of(t) for t in target_tasks}
    clash = sorted(target_origins & set(by_origin))
    if clash:
        raise InfeasibleSplitError(f"origins {clash} feed both source and target tasks")

    if split_of_origin is not None:
        unknown = sorted(set(by_origin) - set(split_of_origin))
        if unknown:
            raise BenchmarkError(f"no split given for origins {unknown}")
        for o, ids in by_origin.items():
            s = split_of_origin[o]
            if s not in SPLITS:
                raise BenchmarkError(f"origin {o}: unknown split {s!r}")
            splits[s].extend(ids)
    else:
        for split, origins in _allocate(by_origin, test_size, dev_size, seed).items():
            for o in origins:
                splits[split].extend(by_origin[o])
    order = {tid: i for i, tid in enumerate(all_ids)}
    for k in SPLITS:
        splits[k].sort(key=order.__getitem__)
    return BenchmarkManifest(
        name=name, seed=seed, source_domain=source_domain, target_domain=target_domain,
        tasks=list(source_tasks) + list(target_tasks), splits=splits, warnings=list(warnings),
    )


# -- checks and rehydration ----------------------------------------------------------


def origin_atomicity_violations(manifest: BenchmarkManifest) -> list:
    where: dict = {}
    split_of = {tid: s for s in SPLITS for tid in manifest.splits[s]}
    for t in manifest.tasks:
        where.setdefault(t.source, set()).add(split_of.get(t.task_id))
    return sorted(o for o, s in where.items() if len(s) > 1)


def sample_sharing_violations(manifest: BenchmarkManifest) -> list:
    """Sample ids used by more than one task of the same origin, or within one task twice."""
    seen: dict = {}
    bad = set()
    for t in manifest.tasks:
        ids = list(t.support) + list(t.query)
        if len(set(ids)) != len(ids):
            bad.update(i for i in ids if ids.count(i) > 1)
        for i in ids:
            key = (t.source, i)
            if key in seen and seen[key] != t.task_id:
                bad.add(i)
            seen[key] = t.task_id
    return sorted(bad)


def tasks_from_manifest(manifest: BenchmarkManifest, samples: Mapping[str, tuple], split: str) -> list:
    """Rebuild :class:`Task` objects for one split.

    ``samples`` maps sample id to ``(bundle, label_row)``; the task's label
    column selects the label. Support and query memberships come verbatim
    from the manifest.
    """
    missing = [tid for tid in manifest.splits[split]
               if any(s not in samples for s in manifest.task(tid).support + manifest.task(tid).query)]
    if missing:
        raise BenchmarkError(f"missing sample data for tasks {missing}")
    tasks = []
    for tid in manifest.splits[split]:
        t = manifest.task(tid)

        def item(sid, col=t.label_column):
            bundle, row = samples[sid]
            return (bundle, int(np.asarray(row).reshape(-1)[col]))

        tasks.append(Task(tid, [item(s) for s in t.support], [item(s) for s in t.query],
                          meta_domain=t.meta_domain, origin=t.source))
    return tasks


# -- directory pipeline -------------------------------------------------------------


def dataset_directory(root, name: str) -> Path:
    """``root/NAME`` when it exists (unpacked archive layout), else ``root``."""
    root = Path(root)
    return root / name if (root / name).is_dir() else root


def load_source(root, name: str, meta_domain: str, limits: FilterLimits = FilterLimits()):
    """Read and filter one dataset; returns ``(SourceDataset, graphs, dropped)``."""
    data = read_tudataset(dataset_directory(root, name), name, meta_domain)
    return SourceDataset.from_labeled(data, limits)


def build_benchmark(
    root,
    sources: Sequence[str],
    targets: Sequence[str],
    *,
    seed: int = 0,
    name: str = "benchmark",
    source_domain: str = "molecules",
    target_domain: str = "",
    dev_size: int = 0,
    test_size: int = 0,
    split_of_origin: Optional[Mapping[str, str]] = None,
    limits: FilterLimits = FilterLimits(),
) -> BenchmarkManifest:
    """Full factory run over TUDataset directories below ``root``."""
    warnings, source_tasks, target_tasks = [], [], []
    for i, ds in enumerate(list(sources) + list(targets)):
        domain = source_domain if i < len(sources) else target_domain
        src, _, dropped = load_source(root, ds, domain, limits)
        if dropped:
            reasons: dict = {}
            for r in dropped.values():
                reasons[r] = reasons.get(r, 0) + 1
            warnings.append(_warning("graphs_dropped", dataset=ds, reasons=dict(sorted(reasons.items()))))
        if src.subsampled:
            warnings.append(_warning("graphs_subsampled", dataset=ds, rule="top_centrality_largest_component",
                                     graphs=src.subsampled))
        tasks, w = tasks_from_source(src, derive_seed(seed, i))
        warnings.extend(w)
        (source_tasks if i < len(sources) else target_tasks).extend(tasks)
    return assemble_benchmark(
        source_tasks, target_tasks, None, seed, name=name, source_domain=source_domain,
        target_domain=target_domain, dev_size=dev_size, test_size=test_size,
        split_of_origin=split_of_origin, warnings=warnings,
    )


def load_samples(
    root,
    manifest: BenchmarkManifest,
    view_cfg: ViewConfig = ViewConfig(),
    splits: Sequence[str] = SPLITS,
    limits: FilterLimits = FilterLimits(),
    jobs: int = 1,
) -> dict:
    """Views and label rows for every sample the chosen splits reference."""
    wanted: dict = {}
    for split in splits:
        for tid in manifest.splits[split]:
            t = manifest.task(tid)
            wanted.setdefault(t.source, set()).update(t.support, t.query)
    out = {}
    for ds in sorted(wanted):
        data = read_tudataset(dataset_directory(root, ds), ds)
        src, graphs, _ = SourceDataset.from_labeled(data, limits)
        rows = {sid: src.labels[i] for i, sid in enumerate(src.sample_ids)}
        keep = [g for g in graphs if g.origin_id in wanted[ds]]
        for g, bundle in zip(keep, build_views_many(keep, view_cfg, jobs)):
            out[g.origin_id] = (bundle, rows[g.origin_id])
    return out


# Task counts and meta-splits of the molecule datasets behind the published
# benchmarks, with the task counts of the two target meta-domains.
MOLECULE_DATASETS = {
    "AIDS": (1, "train"), "BZR": (1, "train"), "COX2": (1, "train"), "DHFR": (1, "train"),
    "MCF-7": (1, "train"), "MCF-7H": (1, "train"), "MOLT-4": (1, "train"), "MOLT-4H": (1, "train"),
    "MUTAGENICITY": (1, "train"), "NCI1": (1, "test"), "NCI109": (1, "test"), "P388": (1, "train"),
    "P388H": (1, "train"), "PC-3": (1, "train"), "PC-3H": (1, "train"), "PTC-FM": (1, "test"),
    "PTC-FR": (1, "test"), "PTC-MM": (1, "test"), "PTC-MR": (1, "test"), "SF-295": (1, "train"),
    "SF-295H": (1, "train"), "SN12C": (1, "train"), "SN12CH": (1, "train"), "SW-620": (1, "dev"),
    "SW-620H": (1, "dev"), "Tox21-AhR": (1, "test"), "Tox21-AR": (1, "test"),
    "Tox21-AR-LBD": (1, "test"), "Tox21-ARE": (1, "test"), "Tox21-aromatase": (1, "test"),
    "Tox21-ATAD5": (1, "test"), "Tox21-ER": (1, "test"), "Tox21-ER-LBD": (1, "test"),
    "Tox21-HSE": (1, "test"), "Tox21-MMP": (1, "test"), "Tox21-p53": (1, "test"),
    "Tox21-PPAR-GAMMA": (1, "test"), "UACC257": (1, "train"), "UACC257H": (1, "train"),
    "YEAST": (1, "dev"), "YEASTH": (1, "dev"), "MOLHIV": (1, "train"), "MOLBACE": (1, "train"),
    "MOLBBBP": (1, "train"), "MOLPCBA": (121, "train"), "MOLCLINTOX": (1, "dev"),
    "MOLSIDER": (8, "train"), "MOLTOXCAST": (17, "train"),
}
BIOINFORMATICS_DATASETS = {"DD": 1, "ENZYMES": 3, "PROTEINS": 1, "PROTEINS-full": 1, "PPA": 18}
SOCIAL_DATASETS = {
    "COLLAB": 1, "DEEZER-EGO-NETS": 1, "GITHUB-STARGAZERS": 1, "IMDB-BINARY": 1, "IMDB-MULTI": 1,
    "REDDIT-BINARY": 1, "REDDIT-MULTI-5K": 1, "REDDIT-MULTI-12K": 3, "REDDIT-THREADS": 1, "TWITCH-EGOS": 1,
}


def published_split_of_origin(target_domain: str) -> dict:
    """Molecule dataset -> split for the published benchmark with this target.

    With a molecule target, the molecule meta-test datasets form the test
    split; with another target they join meta-training.
    """
    if target_domain == "molecules":
        return {k: s for k, (_, s) in MOLECULE_DATASETS.items()}
    return {k: ("train" if s == "test" else s) for k, (_, s) in MOLECULE_DATASETS.items()}
