"""Experiment configuration files (JSON).

Relative paths are resolved against the directory holding the config file.
The seed is mandatory; the ``GAZLAB_SEED`` environment variable overrides it.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .corpus import Dataset, check_scheme, CorpusError, load_dataset
from .features import FEATURE_MODES
from .gazetteer import DEFAULT_DIM, Gazetteer, load_gazetteer
from .tagger import TrainConfig

logger = logging.getLogger(__name__)

SEED_ENV = "GAZLAB_SEED"
_TRAIN_KEYS = {"l2", "epochs", "eta0", "t0", "dense_init"}


class ConfigError(ValueError):
    pass


@dataclass
class DatasetPaths:
    train: Path
    dev: Path
    test: Path
    scheme: str = "BIO"
    name: str | None = None


@dataclass
class GazetteerPaths:
    lexicon: Path
    embeddings: Path | None = None
    name: str | None = None
    dim: int = DEFAULT_DIM


@dataclass
class ExperimentConfig:
    dataset: DatasetPaths
    gazetteer: GazetteerPaths | None
    features: str
    seed: int
    train: dict[str, Any] = field(default_factory=dict)
    output_dir: Path = Path("out")
    name: str = "experiment"

    def train_config(self, mode: str | None = None) -> TrainConfig:
        try:
            return TrainConfig(seed=self.seed, mode=mode or self.features, **self.train)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad train settings: {exc}") from None

    def load_dataset(self) -> Dataset:
        d = self.dataset
        return load_dataset(d.train, d.dev, d.test, d.scheme, d.name)

    def load_gazetteer(self) -> Gazetteer:
        if self.gazetteer is None:
            raise ConfigError("config has no gazetteer section")
        g = self.gazetteer
        return load_gazetteer(g.lexicon, g.embeddings, g.name, g.dim)


def _path(base: Path, value: Any, what: str) -> Path:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{what}: expected a path string")
    path = Path(value)
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ConfigError(f"{what}: no such file {path}")
    return path


def parse_config(data: dict, base: Path) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "seed" not in data:
        raise ConfigError("config must set 'seed'")
    seed = data["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    env_seed = os.environ.get(SEED_ENV)
    if env_seed:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
        logger.warning("seed overridden by %s=%d", SEED_ENV, seed)

    ds = data.get("dataset")
    if not isinstance(ds, dict):
        raise ConfigError("config must have a 'dataset' object")
    try:
        scheme = check_scheme(ds.get("scheme", "BIO"))
    except CorpusError as exc:
        raise ConfigError(str(exc)) from None
    dataset = DatasetPaths(
        train=_path(base, ds.get("train"), "dataset.train"),
        dev=_path(base, ds.get("dev"), "dataset.dev"),
        test=_path(base, ds.get("test"), "dataset.test"),
        scheme=scheme,
        name=ds.get("name"),
    )

    features = data.get("features", "baseline")
    if features not in FEATURE_MODES:
        raise ConfigError(f"unknown feature mode {features!r}; expected one of {sorted(FEATURE_MODES)}")

    gazetteer = None
    gz = data.get("gazetteer")
    if gz is not None:
        if not isinstance(gz, dict):
            raise ConfigError("'gazetteer' must be an object")
        emb = gz.get("embeddings")
        gazetteer = GazetteerPaths(
            lexicon=_path(base, gz.get("lexicon"), "gazetteer.lexicon"),
            embeddings=None if emb is None else _path(base, emb, "gazetteer.embeddings"),
            name=gz.get("name"),
            dim=int(gz.get("dim", DEFAULT_DIM)),
        )
    elif features != "baseline":
        raise ConfigError(f"feature mode {features!r} needs a 'gazetteer' section")

    train = dict(data.get("train", {}))
    unknown = set(train) - _TRAIN_KEYS
    if unknown:
        raise ConfigError(f"unknown train setting(s): {', '.join(sorted(unknown))}")

    out = Path(data.get("output_dir", "out"))
    if not out.is_absolute():
        out = base / out
    config = ExperimentConfig(dataset, gazetteer, features, seed, train, out, data.get("name", "experiment"))
    config.train_config()
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(data, path.resolve().parent)
