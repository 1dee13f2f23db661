"""One train/evaluate run: gazetteer -> matcher -> featurizer -> CRF -> test F1."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace

from .corpus import Dataset
from .evaluation import EvalReport, evaluate
from .features import BASELINE, FEATURE_MODES, build_featurizer
from .gazetteer import Gazetteer
from .matcher import LexemeMatcher, build_matcher
from .tagger import CrfModel, TrainConfig, train


@dataclass
class RunResult:
    model: CrfModel
    matcher: LexemeMatcher | None
    report: EvalReport


def fingerprint(gazetteer: Gazetteer | None, config: TrainConfig, **extra) -> str:
    """Short hash identifying a run: gazetteer, seed, templates, hyperparameters."""
    payload = {
        "gazetteer": None if gazetteer is None else gazetteer.name,
        "gazetteer_hash": None if gazetteer is None else gazetteer.fingerprint(),
        "templates": list(FEATURE_MODES[config.mode]),
        "train": asdict(config),
        **extra,
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.blake2b(blob, digest_size=8).hexdigest()


def fit(dataset: Dataset, gazetteer: Gazetteer | None, config: TrainConfig) -> tuple[CrfModel, LexemeMatcher | None]:
    if config.mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {config.mode!r}")
    matcher = None
    if config.mode != BASELINE:
        if gazetteer is None:
            raise ValueError(f"feature mode {config.mode!r} needs a gazetteer")
        matcher = build_matcher(gazetteer)
    featurizer = build_featurizer(config.mode, matcher, dataset.train, seed=config.seed)
    model = train(dataset.train, featurizer, config)
    return model, matcher


def run(dataset: Dataset, gazetteer: Gazetteer | None, config: TrainConfig) -> RunResult:
    model, matcher = fit(dataset, gazetteer, config)
    return RunResult(model, matcher, evaluate(model, dataset.test, matcher))


def with_mode(config: TrainConfig, mode: str) -> TrainConfig:
    return replace(config, mode=mode)
