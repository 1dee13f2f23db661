"""Gazetteer analysis: matched-lexeme sets, masking effects, and ablations.

Lexeme sets over one (gazetteer, dataset) pair:

    A  lexemes matched in the training split
    B  lexemes matched in the test split
    I  A & B                 (seen at training time)
    S  (A | B) - A == B - A  (test-only)
    E  members of B equal to some gold entity surface in train/dev/test
    N  B - E

Masking removes a set's lexemes from test-time matching only; the trained
model is fixed, so ``effect = base_f1 - masked_f1`` isolates what the model
draws from those lexemes.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Dataset, Sentence, extract_spans
from .evaluation import evaluate
from .features import GAZ_DENSE
from .gazetteer import Gazetteer, GazetteerError, strip_embeddings, subsample
from .matcher import LexemeMatcher
from .pipeline import fingerprint, run
from .tagger import CrfModel, TrainConfig

logger = logging.getLogger(__name__)

MASKED_SETS = ("I", "S", "E", "N")
EFFECT_COLUMNS = ("dataset", "gazetteer", "model", "masked_set", "base_f1", "masked_f1", "effect")
ABLATION_COLUMNS = ("dataset", "gazetteer", "model", "axis", "point", "num_lexemes", "f1", "fingerprint")


class FingerprintMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LexemeSets:
    A: frozenset[str]
    B: frozenset[str]
    I: frozenset[str]
    S: frozenset[str]
    E: frozenset[str]
    N: frozenset[str]
    gazetteer_fingerprint: str = ""

    def counts(self) -> dict[str, int]:
        return {name: len(getattr(self, name)) for name in MASKED_SETS}

    def check(self) -> None:
        """Raise AssertionError if a set identity fails."""
        assert self.I | self.S == self.B
        assert not self.I & self.S
        assert self.E | self.N == self.B
        assert not self.E & self.N
        assert self.I <= self.A
        assert self.S == (self.A | self.B) - self.A

    def to_dict(self) -> dict:
        out: dict = {name: sorted(getattr(self, name)) for name in ("A", "B", *MASKED_SETS)}
        out["counts"] = self.counts()
        out["gazetteer_fingerprint"] = self.gazetteer_fingerprint
        return out


def _matched(matcher: LexemeMatcher, sentences: Iterable[Sentence]) -> frozenset[str]:
    found: set[str] = set()
    for sent in sentences:
        found.update(matcher.matched_lexemes(sent.chars))
    return frozenset(found)


def compute_sets(matcher: LexemeMatcher, dataset: Dataset) -> LexemeSets:
    a = _matched(matcher, dataset.train)
    b = _matched(matcher, dataset.test)
    surfaces = {span.surface for sent in dataset.all_sentences() for span in extract_spans(sent)}
    i = a & b
    s = (a | b) - a
    e = frozenset(lex for lex in b if lex in surfaces)
    return LexemeSets(a, b, i, s, e, b - e, matcher.gazetteer.fingerprint())


@dataclass
class CausalEffectReport:
    base_f1: float
    masked_f1: dict[str, float]
    effect: dict[str, float]
    sizes: dict[str, int]
    dataset: str = ""
    gazetteer: str = ""
    model: str = ""
    fingerprint: str = ""

    def rows(self) -> list[dict]:
        return [
            {
                "dataset": self.dataset,
                "gazetteer": self.gazetteer,
                "model": self.model,
                "masked_set": name,
                "base_f1": self.base_f1,
                "masked_f1": self.masked_f1[name],
                "effect": self.effect[name],
            }
            for name in MASKED_SETS
            if name in self.masked_f1
        ]

    def to_dict(self) -> dict:
        return {"kind": "causal_effects", **asdict(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "CausalEffectReport":
        data = {k: v for k, v in data.items() if k != "kind"}
        return cls(**data)


def causal_effects(
    model: CrfModel,
    test_split: Sequence[Sentence],
    matcher: LexemeMatcher,
    sets: LexemeSets,
    dataset: str = "",
    fingerprint: str = "",
) -> CausalEffectReport:
    """F1 drop from masking each of I, S, E, N at test time."""
    if sets.gazetteer_fingerprint and sets.gazetteer_fingerprint != matcher.gazetteer.fingerprint():
        raise FingerprintMismatch("lexeme sets were computed for a different gazetteer")
    base = evaluate(model, test_split, matcher).f1
    masked, effect = {}, {}
    for name in MASKED_SETS:
        f1 = evaluate(model, test_split, matcher, mask=getattr(sets, name)).f1
        masked[name] = f1
        effect[name] = base - f1
    return CausalEffectReport(
        base_f1=base,
        masked_f1=masked,
        effect=effect,
        sizes=sets.counts(),
        dataset=dataset,
        gazetteer=matcher.gazetteer.name,
        model=model.config.get("featurizer", {}).get("mode", ""),
        fingerprint=fingerprint,
    )


@dataclass
class AblationPoint:
    point: str
    f1: float
    num_lexemes: int
    fingerprint: str
    precision: float = 0.0
    recall: float = 0.0


@dataclass
class AblationReport:
    axis: str
    seed: int
    points: list[AblationPoint] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    dataset: str = ""
    gazetteer: str = ""
    model: str = ""

    def f1(self, point: str) -> float:
        for p in self.points:
            if p.point == point:
                return p.f1
        raise KeyError(point)

    @property
    def delta(self) -> float | None:
        """``stripped - pretrained`` F1 for embedding ablations, None if either is missing."""
        if self.axis != "embeddings":
            return None
        try:
            return self.f1("stripped") - self.f1("pretrained")
        except KeyError:
            return None

    def rows(self) -> list[dict]:
        return [
            {
                "dataset": self.dataset,
                "gazetteer": self.gazetteer,
                "model": self.model,
                "axis": self.axis,
                "point": p.point,
                "num_lexemes": p.num_lexemes,
                "f1": p.f1,
                "fingerprint": p.fingerprint,
            }
            for p in self.points
        ]

    def to_dict(self) -> dict:
        out = {"kind": "ablation", **asdict(self)}
        if self.axis == "embeddings":
            out["delta"] = self.delta
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "AblationReport":
        data = {k: v for k, v in data.items() if k not in ("kind", "delta")}
        data["points"] = [AblationPoint(**p) for p in data.get("points", [])]
        return cls(**data)


def subsample_seed(seed: int, fraction: float) -> int:
    """Subsample seed for one ablation point, derived from (seed, fraction)."""
    ss = np.random.SeedSequence([seed, round(fraction * 1_000_000)])
    return int(ss.generate_state(1)[0])


def size_ablation(
    dataset: Dataset,
    gazetteer: Gazetteer,
    fractions: Sequence[float],
    seed: int,
    config: TrainConfig,
) -> AblationReport:
    """Train and evaluate once per gazetteer fraction.

    Points whose subsample would be empty are skipped and listed in
    ``report.skipped``. No trend across fractions is implied.
    """
    fractions = list(fractions)
    if not fractions:
        raise ValueError("no fractions given")
    if any(not 0 < f <= 1 for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    if fractions != sorted(fractions):
        raise ValueError("fractions must be sorted ascending")
    report = AblationReport("size", seed, dataset=dataset.name, gazetteer=gazetteer.name, model=config.mode)
    for f in fractions:
        sub_seed = subsample_seed(seed, f)
        try:
            sub = subsample(gazetteer, f, sub_seed)
        except GazetteerError as exc:
            logger.warning("fraction %g skipped: %s", f, exc)
            report.skipped.append(f"{f:g}")
            continue
        result = run(dataset, sub, config)
        report.points.append(
            AblationPoint(
                point=f"{f:g}",
                f1=result.report.f1,
                num_lexemes=len(sub),
                fingerprint=fingerprint(sub, config, fraction=f, subsample_seed=sub_seed),
                precision=result.report.precision,
                recall=result.report.recall,
            )
        )
    return report


def embedding_ablation(dataset: Dataset, gazetteer: Gazetteer, config: TrainConfig) -> AblationReport:
    """Pre-trained vectors vs. seeded random vectors, all else equal.

    Always runs the dense feature mode, the only one that reads vectors.
    """
    if not gazetteer.pretrained:
        raise GazetteerError(f"gazetteer {gazetteer.name!r} has no pre-trained embeddings")
    if config.mode != GAZ_DENSE:
        logger.info("embedding ablation uses feature mode %s", GAZ_DENSE)
        config = replace(config, mode=GAZ_DENSE)
    report = AblationReport("embeddings", config.seed, dataset=dataset.name, gazetteer=gazetteer.name, model=config.mode)
    for label, g in (("pretrained", gazetteer), ("stripped", strip_embeddings(gazetteer))):
        result = run(dataset, g, config)
        report.points.append(
            AblationPoint(
                point=label,
                f1=result.report.f1,
                num_lexemes=len(g),
                fingerprint=fingerprint(g, config, embeddings=label),
                precision=result.report.precision,
                recall=result.report.recall,
            )
        )
    return report


def emit_report(report: CausalEffectReport | AblationReport, path: str | Path, format: str = "json") -> None:
    path = Path(path)
    if format == "json":
        path.write_text(
            json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    elif format == "csv":
        columns = EFFECT_COLUMNS if isinstance(report, CausalEffectReport) else ABLATION_COLUMNS
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(report.rows())
    else:
        raise ValueError(f"unknown report format {format!r} (expected json or csv)")


def load_report(path: str | Path) -> CausalEffectReport | AblationReport:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("kind") == "causal_effects":
        return CausalEffectReport.from_dict(data)
    if data.get("kind") == "ablation":
        return AblationReport.from_dict(data)
    raise ValueError(f"{path}: unknown report kind {data.get('kind')!r}")
