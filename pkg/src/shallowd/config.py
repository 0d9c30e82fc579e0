"""Pipeline configuration loaded from a TOML file."""

from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass, field, replace

from .crf import CrfConfig
from .decision_tree import C45Config
from .errors import ConfigError
from .neural import TrainConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SEED_ENV = "SHALLOWD_SEED"


@dataclass(frozen=True)
class ConvNetConfig:
    n_filters: int = 128
    widths: tuple = (3, 4, 5)
    alpha: float = 1.0
    dropout: float = 0.5
    percentile: float = 99.5
    default_limits: tuple = (60, 61)
    negative_ratio: float = 1.0
    dev_fraction: float = 0.1
    train: TrainConfig = field(default_factory=TrainConfig)


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    lexicon: str | None = None
    head_rules: str | None = None
    explicit_senses: str | None = None
    nonexplicit_senses: str | None = None
    embeddings: str | None = None
    model_dir: str | None = None
    c45: C45Config = field(default_factory=C45Config)
    crf: CrfConfig = field(default_factory=CrfConfig)
    convnet: ConvNetConfig = field(default_factory=ConvNetConfig)
    trim_train_on: str = "predicted"
    cross_paragraph: bool = False

    def __post_init__(self):
        if self.trim_train_on not in ("predicted", "gold"):
            raise ConfigError("trim_train_on must be 'predicted' or 'gold'")

    def snapshot(self):
        """JSON-friendly view stored alongside trained models. The output
        directory is left out so a bundle does not depend on where it lives."""
        out = asdict(self)
        del out["model_dir"]
        return out

    def with_seed(self, seed):
        """Same configuration with every learner reseeded from ``seed``."""
        return replace(
            self,
            seed=seed,
            crf=replace(self.crf, seed=seed),
            convnet=replace(self.convnet, train=replace(self.convnet.train, seed=seed)),
        )


_PATH_KEYS = ("lexicon", "head_rules", "explicit_senses", "nonexplicit_senses", "embeddings", "model_dir")


def _take(section, cls, name):
    known = set(cls.__dataclass_fields__)
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from None


def load_config(path=None, overrides=None):
    """Read a config file; ``overrides`` (e.g. CLI flags) win over the file, and
    the ``SHALLOWD_SEED`` environment variable wins over both for the seed."""
    data = {}
    base = os.getcwd()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad config {path}: {exc}") from None
        base = os.path.dirname(os.path.abspath(path))
    top = {}
    paths = dict(data.pop("paths", {}))
    for key in _PATH_KEYS:
        if paths.get(key):
            top[key] = os.path.normpath(os.path.join(base, paths.pop(key)))
    if paths:
        raise ConfigError(f"unknown key(s) in [paths]: {', '.join(sorted(paths))}")
    c45 = _take(data.pop("c45", {}), C45Config, "c45")
    crf = _take(data.pop("crf", {}), CrfConfig, "crf")
    conv = dict(data.pop("convnet", {}))
    train_keys = set(TrainConfig.__dataclass_fields__)
    train = _take({k: conv.pop(k) for k in list(conv) if k in train_keys}, TrainConfig, "convnet")
    for key in ("widths", "default_limits"):
        if key in conv:
            conv[key] = tuple(conv[key])
    convnet = _take({**conv, "train": train}, ConvNetConfig, "convnet")
    pipe = dict(data.pop("pipeline", {}))
    seed = data.pop("seed", 0)
    if data:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(data))}")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in _PATH_KEYS:
            top[key] = value
        elif key == "seed":
            seed = value
        else:
            pipe[key] = value
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            seed = int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    try:
        cfg = PipelineConfig(c45=c45, crf=crf, convnet=convnet, **top, **pipe)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.with_seed(int(seed))
