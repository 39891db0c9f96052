"""Run configuration: a flat ``key = value`` file covering every stage.

Lines are ``key = value``; blank lines and ``#`` comments are ignored. Every
key has a default, so an empty file is valid. Booleans accept
true/false/yes/no/1/0. Unknown keys and unparsable values are rejected.

Keys and defaults::

    # views
    contextual_mode = pad        # pad | deepset | hetero_concat
    d_pad = 100
    d_u = 32
    d_z = 128
    diffusion_kind = ppr         # ppr | heat
    alpha = 0.2
    heat_t = 5.0
    series_truncation = 64
    hetero_dim = 16
    augment_seed = 0
    # encoder
    d_h = 256
    gnn_layers = 2
    mlp_layers = 2
    dropout_p = 0.6
    use_fwt = true
    fwt_sd_gamma = 0.3
    fwt_sd_beta = 0.5
    views = X,U,Z
    # meta-training
    head = proto                 # proto | match | relation
    way = 2
    n_shot = 20
    n_query = 50
    meta_batch = 16
    epochs = 1000
    patience = 30
    lr = 0.001
    task_steps = 50
    adapt_steps = 50
    task_lr = 0.01
    adapt_lr = 0.01
    tau = 10.0
    preset_domain =              # molecules | bioinformatics | social: load the tuned preset
    # meta-test
    eval_runs = 10
    eval_shots = 5
    eval_queries = 50
    adapt = true
    # paths and seeds
    data_dir =                   # falls back to $METAVIEW_DATA_DIR
    manifest =
    seed = 0
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .encoder import EncoderConfig
from .meta.evaluate import EvalConfig
from .meta.train import TUNED_PRESETS, TrainConfig
from .views import ViewConfig


class RunConfigError(ValueError):
    """Bad configuration file or value; the CLI maps it to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    contextual_mode: str = "pad"
    d_pad: int = 100
    d_u: int = 32
    d_z: int = 128
    diffusion_kind: str = "ppr"
    alpha: float = 0.2
    heat_t: float = 5.0
    series_truncation: int = 64
    hetero_dim: int = 16
    augment_seed: int = 0
    d_h: int = 256
    gnn_layers: int = 2
    mlp_layers: int = 2
    dropout_p: float = 0.6
    use_fwt: bool = True
    fwt_sd_gamma: float = 0.3
    fwt_sd_beta: float = 0.5
    views: str = "X,U,Z"
    head: str = "proto"
    way: int = 2
    n_shot: int = 20
    n_query: int = 50
    meta_batch: int = 16
    epochs: int = 1000
    patience: int = 30
    lr: float = 1e-3
    task_steps: int = 50
    adapt_steps: int = 50
    task_lr: float = 0.01
    adapt_lr: float = 0.01
    tau: float = 10.0
    preset_domain: str = ""
    eval_runs: int = 10
    eval_shots: int = 5
    eval_queries: int = 50
    adapt: bool = True
    data_dir: str = ""
    manifest: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.preset_domain and (self.preset_domain, self.head) not in TUNED_PRESETS:
            raise RunConfigError(f"no tuned preset for domain {self.preset_domain!r}")
        try:
            self.view_config()
            self.encoder_config()
            self.train_config()
            self.eval_config()
        except ValueError as exc:
            raise RunConfigError(str(exc)) from exc

    # -- stage configs ------------------------------------------------------

    def view_config(self) -> ViewConfig:
        names = {f.name for f in fields(ViewConfig)}
        return ViewConfig(**{k: v for k, v in asdict(self).items() if k in names})

    def _preset(self):
        if not self.preset_domain:
            return None
        return TUNED_PRESETS[(self.preset_domain, self.head)]

    def encoder_config(self) -> EncoderConfig:
        layers = self._preset()[4] if self._preset() else self.gnn_layers
        return EncoderConfig.with_views(
            self.views, d_h=self.d_h, gnn_layers=layers, mlp_layers=self.mlp_layers,
            dropout_p=self.dropout_p, use_fwt=self.use_fwt,
            fwt_sd_gamma=self.fwt_sd_gamma, fwt_sd_beta=self.fwt_sd_beta,
        )

    def train_config(self) -> TrainConfig:
        cfg = TrainConfig(
            way=self.way, n_shot=self.n_shot, n_query=self.n_query, meta_batch=self.meta_batch,
            epochs=self.epochs, patience=self.patience, lr=self.lr, head=self.head,
            task_steps=self.task_steps, adapt_steps=self.adapt_steps, task_lr=self.task_lr,
            adapt_lr=self.adapt_lr, layers=self.gnn_layers, tau=self.tau, seed=self.seed,
        )
        t4 = self._preset()
        if t4:
            cfg = replace(cfg, task_steps=t4[0], adapt_steps=t4[1], task_lr=t4[2], adapt_lr=t4[3], layers=t4[4])
        return cfg

    def eval_config(self) -> EvalConfig:
        t = self.train_config()
        return EvalConfig(
            runs=self.eval_runs, n_shot=self.eval_shots, n_query=self.eval_queries, head=self.head,
            adapt=self.adapt, adapt_steps=t.adapt_steps, adapt_lr=t.adapt_lr, tau=self.tau, seed=self.seed,
        )

    # -- identity -----------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        """sha256 of the canonical JSON of every field except paths."""
        doc = {k: v for k, v in asdict(self).items() if k not in _PATH_KEYS}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    def resolved_data_dir(self) -> str:
        return self.data_dir or os.environ.get("METAVIEW_DATA_DIR", "")

    def dumps(self) -> str:
        return "".join(f"{k} = {_format(v)}\n" for k, v in asdict(self).items())

    def with_overrides(self, **kw) -> "RunConfig":
        unknown = sorted(set(kw) - _FIELD_TYPES.keys())
        if unknown:
            raise RunConfigError(f"unknown configuration keys: {unknown}")
        return replace(self, **kw)


_PATH_KEYS = {"data_dir", "manifest"}
_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _coerce(key: str, raw: str, where: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "bool":
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise ValueError(raw)
            return low in _TRUE
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise RunConfigError(f"{where}: {key} expects {kind}, got {raw!r}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise RunConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (p.strip() for p in body.split("=", 1))
        if key not in _FIELD_TYPES:
            raise RunConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise RunConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, raw, f"{source}:{lineno}")
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise RunConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))
