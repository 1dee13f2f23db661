"""Exact-match span precision/recall/F1, micro-averaged over entity types."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import AbstractSet, Iterable, Sequence

from .corpus import EntitySpan, Sentence, extract_spans
from .features import Featurizer
from .matcher import LexemeMatcher
from .tagger import CrfModel, check_gazetteer, decode


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "Score":
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        return cls(p, r, f1, tp, fp, fn)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


@dataclass(frozen=True)
class EvalReport(Score):
    per_type: dict[str, Score] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["per_type"] = {t: s.to_dict() for t, s in sorted(self.per_type.items())}
        return out

    def format_table(self) -> str:
        rows = [f"{'type':<12}{'P':>8}{'R':>8}{'F1':>8}{'TP':>7}{'FP':>7}{'FN':>7}"]
        items = sorted(self.per_type.items()) + [("ALL (micro)", self)]
        for name, s in items:
            rows.append(
                f"{name:<12}{s.precision:>8.4f}{s.recall:>8.4f}{s.f1:>8.4f}"
                f"{s.tp:>7d}{s.fp:>7d}{s.fn:>7d}"
            )
        return "\n".join(rows)


def score_spans(
    gold: Iterable[Iterable[EntitySpan]], pred: Iterable[Iterable[EntitySpan]]
) -> EvalReport:
    """Score predicted spans against gold, sentence by sentence."""
    tp: Counter[str] = Counter()
    fp: Counter[str] = Counter()
    fn: Counter[str] = Counter()
    for g_spans, p_spans in zip(gold, pred, strict=True):
        g = {s.key for s in g_spans}
        p = {s.key for s in p_spans}
        for _, _, t in g & p:
            tp[t] += 1
        for _, _, t in p - g:
            fp[t] += 1
        for _, _, t in g - p:
            fn[t] += 1
    types = sorted(set(tp) | set(fp) | set(fn))
    per_type = {t: Score.from_counts(tp[t], fp[t], fn[t]) for t in types}
    micro = Score.from_counts(sum(tp.values()), sum(fp.values()), sum(fn.values()))
    return EvalReport(**micro.__dict__, per_type=per_type)


def predict(
    model: CrfModel,
    sentences: Sequence[Sentence],
    matcher: LexemeMatcher | None = None,
    mask: AbstractSet[str] | None = None,
) -> list[Sentence]:
    """Decode ``sentences``; predicted tags are repaired into valid BIOES."""
    featurizer = Featurizer.from_snapshot(model.config["featurizer"], matcher)
    out = []
    for sent in sentences:
        tags = decode(model, sent, featurizer(sent.chars, mask))
        pred = Sentence(sent.chars, tags)
        out.append(pred)
    return out


def evaluate(
    model: CrfModel,
    split: Sequence[Sentence],
    matcher: LexemeMatcher | None = None,
    mask: AbstractSet[str] | None = None,
) -> EvalReport:
    """Span micro-F1 of ``model`` on ``split``.

    ``mask`` removes the listed lexemes from matching while featurizing this
    split only; the model and its training-time statistics are untouched.
    """
    if matcher is not None:
        check_gazetteer(model, matcher.gazetteer.name)
    preds = predict(model, split, matcher, mask)
    return score_spans(
        (extract_spans(s) for s in split), (extract_spans(p) for p in preds)
    )
