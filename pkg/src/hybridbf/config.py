"""Run configuration: INI file sections merged with command-line overrides.

Precedence, lowest to highest: dataclass defaults, the ``--config`` file,
explicit flags. Every field of a section can be set in the file under the
same name, e.g.::

    [channel]
    n_tx = 16
    n_rx = 2

    [eval]
    snr_grid_db = 0:2:8
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import InvalidConfig
from .evalsim import EvalConfig, parse_snr_grid
from .hdnn import DIRECTIONS, PRESETS
from .io import config_hash
from .trainer import TrainConfig

METRICS = ("ber", "se", "nmse")
NON_RESULT_SETTINGS = ("out", "threads")


def _grid(value) -> tuple[float, ...]:
    if isinstance(value, str):
        return tuple(parse_snr_grid(value))
    return tuple(float(v) for v in value)


def _names(value) -> tuple[str, ...]:
    if isinstance(value, str):
        return tuple(v.strip() for v in value.split(",") if v.strip())
    return tuple(value)


@dataclass(frozen=True)
class ChannelSection:
    n_tx: int | None = field(default=None, metadata={"parse": int})
    n_rx: int | None = field(default=None, metadata={"parse": int})
    n_clusters: int = 5
    n_rays: int = 10
    spread_deg: float = 10.0
    n_channels: int = 1
    seed: int = 0


@dataclass(frozen=True)
class ModelSection:
    preset: str = "standard"
    direction: str = "downlink"
    n_s: int | None = field(default=None, metadata={"parse": int})
    n_rf: int | None = field(default=None, metadata={"parse": int})


@dataclass(frozen=True)
class TrainSection:
    n_samples: int = 100_000
    batch_size: int = 50
    epochs: int = 5
    learning_rate: float = 1e-3


@dataclass(frozen=True)
class EvalSection:
    snr_grid_db: tuple[float, ...] = field(default=(0.0, 4.0, 8.0), metadata={"parse": _grid})
    n_symbol_trials: int = 50_000
    metrics: tuple[str, ...] = field(default=METRICS, metadata={"parse": _names})
    scale: str = "desk"


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    threads: int = 1
    out: str = "."


SECTIONS = {
    "channel": ChannelSection,
    "model": ModelSection,
    "train": TrainSection,
    "eval": EvalSection,
    "run": RunSection,
}


def _coerce(section: str, f, value):
    parse = f.metadata.get("parse") or type(f.default)
    try:
        return parse(value)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"{section}.{f.name}: cannot parse {value!r} ({exc})", field=f.name) from exc


def _build_section(name: str, values: dict):
    cls = SECTIONS[name]
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in known:
            raise InvalidConfig(f"unknown setting {name}.{key}", field=key)
        if value is None:
            continue
        kwargs[key] = _coerce(name, known[key], value)
    return cls(**kwargs)


@dataclass(frozen=True)
class RunConfig:
    channel: ChannelSection = ChannelSection()
    model: ModelSection = ModelSection()
    train: TrainSection = TrainSection()
    eval: EvalSection = EvalSection()
    run: RunSection = RunSection()

    def to_dict(self) -> dict:
        out = {name: asdict(getattr(self, name)) for name in SECTIONS}
        out["eval"]["snr_grid_db"] = list(self.eval.snr_grid_db)
        out["eval"]["metrics"] = list(self.eval.metrics)
        return out

    @property
    def hash(self) -> str:
        """Hash of every setting that can change a result.

        The output location and worker count are excluded: outputs do not
        depend on them.
        """
        d = self.to_dict()
        for key in NON_RESULT_SETTINGS:
            d["run"].pop(key)
        return config_hash(d)

    def train_config(self) -> TrainConfig:
        t = self.train
        return TrainConfig(t.n_samples, t.batch_size, t.epochs, t.learning_rate, self.run.seed)

    def eval_config(self) -> EvalConfig:
        e = self.eval
        return EvalConfig(
            snr_grid_db=e.snr_grid_db,
            n_symbol_trials=e.n_symbol_trials,
            n_channels=self.channel.n_channels,
            seed=self.run.seed,
            scale=e.scale,
        )

    def require(self, *names: str) -> "RunConfig":
        """Raise :class:`InvalidConfig` naming the first unset ``section.field``."""
        for dotted in names:
            section, name = dotted.split(".")
            if getattr(getattr(self, section), name) is None:
                raise InvalidConfig(f"missing required setting {dotted}", field=name)
        return self

    def validate(self) -> "RunConfig":
        c, m, t, e, r = self.channel, self.model, self.train, self.eval, self.run
        positive = {
            "n_tx": c.n_tx, "n_rx": c.n_rx, "n_clusters": c.n_clusters, "n_rays": c.n_rays,
            "n_channels": c.n_channels, "n_s": m.n_s, "n_rf": m.n_rf,
            "n_samples": t.n_samples, "batch_size": t.batch_size, "epochs": t.epochs,
            "n_symbol_trials": e.n_symbol_trials, "threads": r.threads,
        }
        for name, value in positive.items():
            if value is not None and value < 1:
                raise InvalidConfig(f"{name} must be >= 1, got {value}", field=name)
        if t.batch_size > t.n_samples:
            raise InvalidConfig("batch_size exceeds n_samples", field="batch_size")
        if not (t.learning_rate > 0 and math.isfinite(t.learning_rate)):
            raise InvalidConfig("learning_rate must be positive", field="learning_rate")
        if not c.spread_deg > 0:
            raise InvalidConfig("spread_deg must be positive", field="spread_deg")
        if m.preset not in PRESETS:
            raise InvalidConfig(f"unknown preset {m.preset!r}", field="preset")
        if m.direction not in DIRECTIONS:
            raise InvalidConfig(f"unknown direction {m.direction!r}", field="direction")
        if not e.snr_grid_db or not all(math.isfinite(s) for s in e.snr_grid_db):
            raise InvalidConfig("SNR grid must be a nonempty list of finite values", field="snr_grid_db")
        bad = set(e.metrics) - set(METRICS)
        if bad:
            raise InvalidConfig(f"unknown metrics {sorted(bad)}", field="metrics")
        if e.scale not in ("desk", "paper"):
            raise InvalidConfig(f"unknown scale {e.scale!r}", field="scale")
        for name, seed in (("seed", r.seed), ("seed", c.seed)):
            if not 0 <= seed < 2**64:
                raise InvalidConfig("seeds must be 64-bit unsigned integers", field=name)
        return self


def read_ini(path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    unknown = set(parser.sections()) - set(SECTIONS)
    if unknown:
        raise InvalidConfig(f"unknown config sections {sorted(unknown)}")
    return {name: dict(parser[name]) for name in parser.sections()}


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge ``{section: {field: value}}`` layers; ``None`` overrides are ignored."""
    merged: dict[str, dict] = {name: {} for name in SECTIONS}
    for layer in (file_values or {}, overrides or {}):
        for section, values in layer.items():
            if section not in SECTIONS:
                raise InvalidConfig(f"unknown config section {section!r}")
            merged[section].update({k: v for k, v in values.items() if v is not None})
    cfg = RunConfig(**{name: _build_section(name, vals) for name, vals in merged.items()})
    return cfg.validate()


def with_overrides(cfg: RunConfig, section: str, **values) -> RunConfig:
    return replace(cfg, **{section: replace(getattr(cfg, section), **values)}).validate()
