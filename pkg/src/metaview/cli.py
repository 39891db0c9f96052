"""``metaview`` command line: benchbuild, spectra, train, eval, ablate, verify.

Exit codes: 0 success, 1 runtime failure (structured JSON error on stderr),
2 configuration or usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .benchbuild import (
    BenchmarkError,
    BenchmarkManifest,
    build_benchmark,
    dataset_directory,
    load_samples,
    published_split_of_origin,
    tasks_from_manifest,
)
from .config import RunConfig, RunConfigError, load_config, parse_config
from .diffcore.optim import load_checkpoint, save_checkpoint
from .encoder import MultiViewEncoder
from .graphcore import read_tudataset
from .graphcore.tudataset import DatasetError
from .meta.evaluate import evaluate, render_table
from .meta.heads import RelationModule
from .meta.train import derive_seed, meta_train, trainable_parameters
from .synthetic import SyntheticSuiteConfig, make_suite
from .verify import run_suites
from .views import ViewConfig, diffusion_spectrum

log = logging.getLogger("metaview")

SYNTHETIC = "synthetic"
ABLATION_VIEWS = ("X", "X,U", "X,Z", "X,U,Z")
# Settings the synthetic transfer suite runs with unless the config says otherwise.
SYNTHETIC_PRESET = {"d_h": 64, "epochs": 100, "n_shot": 5, "n_query": 50, "eval_shots": 5}


class CliError(RuntimeError):
    """Runtime failure reported as exit code 1."""


class UsageError(ValueError):
    """Bad flags; exit code 2."""


# -- shared plumbing --------------------------------------------------------------


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "benchmark", None) == SYNTHETIC and not args.config:
        cfg = replace(cfg, **SYNTHETIC_PRESET)
    overrides = _overrides_only(args)
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    return cfg


def _one(item: str) -> dict:
    if "=" not in item:
        raise RunConfigError(f"--set expects key=value, got {item!r}")
    key = item.split("=", 1)[0].strip()
    parsed = parse_config(item, "--set")
    return {key: getattr(parsed, key)}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _stamp(cfg: RunConfig) -> dict:
    return {"tool_version": __version__, "config_hash": cfg.hash(), "seed": cfg.seed}


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


def _load_benchmark(name: str, cfg: RunConfig, view_cfg: ViewConfig, jobs: int):
    """(benchmark label, train, dev, test task lists)."""
    if name == SYNTHETIC:
        train, dev, test = make_suite(SyntheticSuiteConfig(seed=cfg.seed), view_cfg)
        return SYNTHETIC, train, dev, test
    path = Path(name)
    if not path.is_file():
        raise CliError(f"benchmark manifest {path} not found")
    manifest = BenchmarkManifest.load(path)
    root = cfg.resolved_data_dir()
    if not root:
        raise RunConfigError("no data directory: set data_dir or METAVIEW_DATA_DIR")
    samples = load_samples(root, manifest, view_cfg, jobs=jobs)
    splits = [tasks_from_manifest(manifest, samples, s) for s in ("train", "dev", "test")]
    return manifest.name, *splits


def _build_model(cfg: RunConfig, views: str | None = None):
    enc_cfg = cfg.encoder_config() if views is None else replace(cfg, views=views).encoder_config()
    rng = np.random.default_rng(derive_seed(cfg.seed, 0))
    encoder = MultiViewEncoder(cfg.view_config(), enc_cfg, rng)
    relation = RelationModule(enc_cfg.d_h, rng) if cfg.head == "relation" else None
    return encoder, relation


def train_and_evaluate(cfg, train, dev, test, label, views=None):
    encoder, relation = _build_model(cfg, views)
    result = meta_train(encoder, train, cfg.train_config(), dev, relation)
    report = evaluate(encoder, test, cfg.eval_config(), relation, benchmark=label, config_hash=cfg.hash())
    return encoder, relation, result, report


# -- subcommands --------------------------------------------------------------------


def cmd_benchbuild(args) -> int:
    cfg = _config(args)
    root = args.data or cfg.resolved_data_dir()
    if not root:
        raise RunConfigError("no data directory: pass --data or set METAVIEW_DATA_DIR")
    sources = [s for s in args.source.split(",") if s]
    targets = [t for t in (args.target or "").split(",") if t]
    split_map = published_split_of_origin(args.target_domain) if args.published else None
    manifest = build_benchmark(
        root, sources, targets, seed=cfg.seed, name=args.name, source_domain=args.source_domain,
        target_domain=args.target_domain, dev_size=args.dev_size, test_size=args.test_size,
        split_of_origin=split_map,
    )
    manifest.config_hash = cfg.hash()
    path = manifest.save(_out_dir(args) / f"{args.name}.manifest.json")
    counts = manifest.counts
    print(f"{path}  train={counts['train']} dev={counts['dev']} test={counts['test']}  "
          f"warnings={len(manifest.warnings)}  sha256={manifest.hash()}")
    return 0


def _dataset_location(dataset: str, root: str) -> tuple[Path, str]:
    """A dataset directory (name read off its indicator file) or a name under ``root``."""
    path = Path(dataset)
    if path.is_dir():
        found = sorted(path.glob("*_graph_indicator.txt"))
        if len(found) != 1:
            raise CliError(f"{path} must hold exactly one *_graph_indicator.txt, found {len(found)}")
        return path, found[0].name[: -len("_graph_indicator.txt")]
    if not root:
        raise RunConfigError(f"{dataset} is not a directory and no data root is set (METAVIEW_DATA_DIR)")
    return dataset_directory(root, dataset), dataset


def cmd_spectra(args) -> int:
    cfg = _config(args)
    over = {"diffusion_kind": args.kind}
    if args.alpha is not None:
        over["alpha"] = args.alpha
    if args.t is not None:
        over["heat_t"] = args.t
    if args.k is not None:
        over["d_z"] = args.k
    cfg = cfg.with_overrides(**over)
    directory, name = _dataset_location(args.dataset, args.data or cfg.resolved_data_dir())
    data = read_tudataset(directory, name)
    vcfg = cfg.view_config()
    stamp = _stamp(cfg)
    lines = [f"# metaview {stamp['tool_version']} config_hash={stamp['config_hash']} seed={stamp['seed']} "
             f"kind={vcfg.diffusion_kind} alpha={vcfg.alpha!r} t={vcfg.heat_t!r} k={vcfg.d_z}"]
    skipped = []
    for g in data.graphs:
        if g.n_edges == 0 or not g.is_connected():
            skipped.append(g.origin_id)
            continue
        z = diffusion_spectrum(g, vcfg)
        lines.append(", ".join([g.origin_id] + [f"{v:.12g}" for v in z]))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if skipped:
        log.warning("%d graphs without a connected edge set skipped", len(skipped))
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    label, train, dev, _ = _load_benchmark(args.benchmark, cfg, cfg.view_config(), args.jobs)
    encoder, relation = _build_model(cfg)
    result = meta_train(encoder, train, cfg.train_config(), dev, relation)
    out = _out_dir(args)
    meta = {**_stamp(cfg), "benchmark": label, "config": cfg.to_dict(),
            "best_epoch": result.best_epoch, "best_dev_accuracy": result.best_dev_accuracy}
    ckpt = save_checkpoint(out / "checkpoint.npz", trainable_parameters(encoder, relation), meta=meta)
    _write_json(out / "history.json", {**_stamp(cfg), "benchmark": label, "history": result.history,
                                       "best_epoch": result.best_epoch, "stopped_early": result.stopped_early})
    print(f"{ckpt}  epochs={len(result.history)} best_epoch={result.best_epoch} "
          f"best_dev={result.best_dev_accuracy:.4f}")
    return 0


def cmd_eval(args) -> int:
    path = Path(args.checkpoint)
    if not path.is_file():
        raise CliError(f"checkpoint {path} not found")
    params, _, meta = load_checkpoint(path)
    if args.config:
        cfg = _config(args)
    else:
        cfg = RunConfig(**meta["config"])
        if args.seed is not None or args.set:
            cfg = cfg.with_overrides(**_overrides_only(args))
    label, _, _, test = _load_benchmark(args.benchmark, cfg, cfg.view_config(), args.jobs)
    encoder, relation = _build_model(cfg)
    own = trainable_parameters(encoder, relation)
    if set(own) != set(params):
        raise CliError("checkpoint parameters do not match the configured model")
    for name, tensor in own.items():
        if tensor.data.shape != params[name].shape:
            raise CliError(f"checkpoint parameter {name} has shape {params[name].shape}")
        tensor.data = params[name]
    report = evaluate(encoder, test, cfg.eval_config(), relation, benchmark=label, config_hash=cfg.hash())
    _write_json(_out_dir(args) / "report.json", report)
    print(render_table(report))
    return 0


def _overrides_only(args) -> dict:
    over = {}
    for item in args.set or []:
        over.update(_one(item))
    if args.seed is not None:
        over["seed"] = args.seed
    return over


def cmd_ablate(args) -> int:
    cfg = _config(args)
    view_sets = args.views or list(ABLATION_VIEWS)
    label, train, dev, test = _load_benchmark(args.benchmark, cfg, cfg.view_config(), args.jobs)
    rows = []
    for views in view_sets:
        _, _, result, report = train_and_evaluate(cfg, train, dev, test, label, views)
        rows.append({"views": views, "mean": report["aggregate"]["mean"], "std": report["aggregate"]["std"],
                     "best_epoch": result.best_epoch, "report": report})
    doc = {**_stamp(cfg), "benchmark": label, "rows": rows}
    _write_json(_out_dir(args) / "ablation.json", doc)
    width = max(len(r["views"]) for r in rows)
    print(f"{label} head={cfg.head} shots={cfg.eval_shots} seed={cfg.seed}")
    print(f"{'views'.ljust(width)}  {'acc %':>7}  {'std %':>7}")
    for r in rows:
        print(f"{r['views'].ljust(width)}  {100 * r['mean']:7.2f}  {100 * r['std']:7.2f}")
    return 0


def cmd_verify(args) -> int:
    results = run_suites(args.suite, seed=args.seed or 0)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} suites passed")
    if args.out:
        doc = {"tool_version": __version__, "seed": args.seed or 0,
               "suites": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]}
        _write_json(_out_dir(args) / "verify.json", doc)
    return 1 if failed else 0


# -- parser -----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    base = argparse.ArgumentParser(add_help=False)
    base.add_argument("--config", help="key = value configuration file")
    base.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    base.add_argument("--seed", type=int, help="global seed (overrides the config)")
    base.add_argument("--jobs", type=int, default=1, help="parallel workers for view construction")
    base.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False, parents=[base])
    common.add_argument("--out", default="out", help="output directory")

    p = _Parser(prog="metaview", description="Benchmark building, spectra, meta-training, evaluation and self-tests.")
    p.add_argument("--version", action="version", version=f"metaview {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("benchbuild", parents=[common], help="build a benchmark manifest")
    b.add_argument("--data", help="dataset root (default: data_dir or $METAVIEW_DATA_DIR)")
    b.add_argument("--source", required=True, help="comma-separated source dataset names")
    b.add_argument("--target", default="", help="comma-separated target dataset names")
    b.add_argument("--source-domain", default="molecules")
    b.add_argument("--target-domain", default="")
    b.add_argument("--dev-size", type=int, default=0)
    b.add_argument("--test-size", type=int, default=0, help="source tasks moved to test")
    b.add_argument("--published", action="store_true", help="use the published molecule split table")
    b.add_argument("--name", default="benchmark")
    b.set_defaults(func=cmd_benchbuild)

    s = sub.add_parser("spectra", parents=[base], help="diffusion spectra of one dataset")
    s.add_argument("--data", help="dataset root used when --dataset is a name")
    s.add_argument("--dataset", required=True, help="dataset directory, or a name under the data root")
    s.add_argument("--kind", choices=("ppr", "heat"), default="ppr")
    s.add_argument("--alpha", type=float)
    s.add_argument("--t", type=float)
    s.add_argument("--k", type=int, help="spectrum length d_z")
    s.add_argument("--out", help="file to write (default: stdout)")
    s.set_defaults(func=cmd_spectra)

    t = sub.add_parser("train", parents=[common], help="meta-train an encoder")
    t.add_argument("--benchmark", default=SYNTHETIC, help="manifest path or 'synthetic'")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on meta-test tasks")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--benchmark", default=SYNTHETIC, help="manifest path or 'synthetic'")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", parents=[common], help="train and evaluate per view set")
    a.add_argument("--benchmark", default=SYNTHETIC, help="manifest path or 'synthetic'")
    a.add_argument("--views", action="append", help="view set such as X,U (repeatable)")
    a.set_defaults(func=cmd_ablate)

    v = sub.add_parser("verify", parents=[common], help="run the property self-test suites")
    v.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    v.set_defaults(func=cmd_verify, out=None)
    return p


def _error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "tool_version": __version__}) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _error("usage", str(exc))
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RunConfigError as exc:
        _error("config", str(exc))
        return 2
    except (CliError, BenchmarkError, DatasetError, ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        _error(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
