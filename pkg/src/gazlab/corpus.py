"""Character-level tagged corpora: loading, tag schemes, span extraction.

Sentences are stored in the canonical BIOES scheme. BIO files are converted
at load time. Decoding from tags to spans is lenient so that it doubles as
the repair rule for malformed sequences (dangling ``I-X`` opens a new span).
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

SCHEMES = {
    "BIO": frozenset("BI"),
    "BIOES": frozenset("BIES"),
}
CANONICAL_SCHEME = "BIOES"

_TAG_RE = re.compile(r"^([A-Z])-(\S+)$")


class CorpusError(ValueError):
    """Raised for malformed or unusable corpus input."""


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    etype: str
    surface: str = ""

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.etype)


@dataclass(frozen=True)
class Sentence:
    chars: tuple[str, ...]
    tags: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "chars", tuple(self.chars))
        object.__setattr__(self, "tags", tuple(self.tags))
        if not self.chars:
            raise CorpusError("empty sentence")
        if len(self.chars) != len(self.tags):
            raise CorpusError(
                f"length mismatch: {len(self.chars)} chars vs {len(self.tags)} tags"
            )

    @property
    def text(self) -> str:
        return "".join(self.chars)

    def __len__(self) -> int:
        return len(self.chars)


@dataclass(frozen=True)
class SplitCounts:
    name: str
    total: int
    train: int
    dev: int
    test: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "total": self.total,
            "train": self.train,
            "dev": self.dev,
            "test": self.test,
        }


@dataclass(frozen=True)
class Dataset:
    train: tuple[Sentence, ...]
    dev: tuple[Sentence, ...]
    test: tuple[Sentence, ...]
    name: str = "dataset"
    scheme: str = CANONICAL_SCHEME
    repairs: int = 0
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def splits(self) -> dict[str, tuple[Sentence, ...]]:
        return {"train": self.train, "dev": self.dev, "test": self.test}

    def all_sentences(self) -> Iterable[Sentence]:
        yield from self.train
        yield from self.dev
        yield from self.test


def split_tag(tag: str) -> tuple[str, str | None]:
    """Return ``(prefix, type)``; ``("O", None)`` for the outside tag."""
    if tag == "O":
        return "O", None
    m = _TAG_RE.match(tag)
    if m is None:
        raise CorpusError(f"malformed tag {tag!r}")
    return m.group(1), m.group(2)


def check_scheme(scheme: str) -> str:
    scheme = scheme.upper()
    if scheme not in SCHEMES:
        raise CorpusError(f"unknown tag scheme {scheme!r} (expected BIO or BIOES)")
    return scheme


def _decode(tags: Sequence[str]) -> list[tuple[int, int, str]]:
    spans: list[tuple[int, int, str]] = []
    open_start: int | None = None
    open_type: str | None = None

    def close(end: int) -> None:
        nonlocal open_start, open_type
        if open_start is not None:
            spans.append((open_start, end, open_type))
        open_start = open_type = None

    for i, tag in enumerate(tags):
        prefix, etype = split_tag(tag)
        if prefix == "O":
            close(i)
        elif prefix == "B":
            close(i)
            open_start, open_type = i, etype
        elif prefix == "I":
            if open_type != etype:
                close(i)
                open_start, open_type = i, etype
        elif prefix == "E":
            if open_type == etype:
                close(i + 1)
            else:
                close(i)
                spans.append((i, i + 1, etype))
        elif prefix == "S":
            close(i)
            spans.append((i, i + 1, etype))
        else:
            raise CorpusError(f"unknown tag prefix in {tag!r}")
    close(len(tags))
    return spans


def extract_spans(sentence: Sentence) -> list[EntitySpan]:
    """Entity spans of ``sentence``, sorted by start.

    Works on BIO and BIOES tags alike. Malformed transitions are resolved the
    same way :func:`normalize_tags` repairs them.
    """
    return [
        EntitySpan(s, e, t, "".join(sentence.chars[s:e]))
        for s, e, t in _decode(sentence.tags)
    ]


def tags_from_spans(
    length: int, spans: Iterable[EntitySpan | tuple[int, int, str]], scheme: str = CANONICAL_SCHEME
) -> list[str]:
    scheme = check_scheme(scheme)
    tags = ["O"] * length
    last_end = 0
    keys = sorted(s.key if isinstance(s, EntitySpan) else tuple(s) for s in spans)
    for start, end, etype in keys:
        if not 0 <= start < end <= length:
            raise CorpusError(f"span ({start}, {end}) out of range for length {length}")
        if start < last_end:
            raise CorpusError(f"overlapping span at ({start}, {end})")
        last_end = end
        if scheme == "BIO":
            tags[start] = f"B-{etype}"
            for i in range(start + 1, end):
                tags[i] = f"I-{etype}"
        elif end - start == 1:
            tags[start] = f"S-{etype}"
        else:
            tags[start] = f"B-{etype}"
            for i in range(start + 1, end - 1):
                tags[i] = f"I-{etype}"
            tags[end - 1] = f"E-{etype}"
    return tags


def normalize_tags(tags: Sequence[str], scheme: str = CANONICAL_SCHEME) -> list[str]:
    """Repair ``tags`` into a well-formed sequence under ``scheme``."""
    return tags_from_spans(len(tags), _decode(tags), scheme)


def convert_tag_scheme(sentence: Sentence, target_scheme: str) -> Sentence:
    return Sentence(sentence.chars, tuple(normalize_tags(sentence.tags, target_scheme)))


def is_well_formed(tags: Sequence[str], scheme: str) -> bool:
    return list(tags) == normalize_tags(tags, scheme)


def _read_conll(path: Path, scheme: str) -> tuple[list[Sentence], int]:
    alphabet = SCHEMES[scheme]
    sentences: list[Sentence] = []
    repairs = 0
    chars: list[str] = []
    tags: list[str] = []

    def flush() -> None:
        nonlocal repairs, chars, tags
        if chars:
            fixed = normalize_tags(tags, scheme)
            repairs += sum(a != b for a, b in zip(fixed, tags))
            sentences.append(Sentence(chars, normalize_tags(fixed, CANONICAL_SCHEME)))
        chars, tags = [], []

    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip():
            flush()
            continue
        cols = line.split()
        if len(cols) != 2:
            raise CorpusError(f"{path}:{lineno}: expected 2 columns, got {len(cols)}")
        char, tag = cols
        if len(char) != 1:
            raise CorpusError(f"{path}:{lineno}: token {char!r} is not a single character")
        try:
            prefix, _ = split_tag(tag)
        except CorpusError:
            raise CorpusError(f"{path}:{lineno}: malformed tag {tag!r}") from None
        if prefix != "O" and prefix not in alphabet:
            raise CorpusError(f"{path}:{lineno}: tag {tag!r} outside the {scheme} alphabet")
        chars.append(char)
        tags.append(tag)
    flush()
    return sentences, repairs


def load_dataset(
    train_path: str | Path,
    dev_path: str | Path,
    test_path: str | Path,
    scheme: str = "BIO",
    name: str | None = None,
) -> Dataset:
    """Load three CoNLL-style files (char, whitespace, tag) into a Dataset."""
    scheme = check_scheme(scheme)
    splits: dict[str, list[Sentence]] = {}
    repairs = 0
    warnings: list[str] = []
    for split, path in (("train", train_path), ("dev", dev_path), ("test", test_path)):
        path = Path(path)
        sents, fixed = _read_conll(path, scheme)
        if not sents:
            raise CorpusError(f"empty split: {split}")
        if fixed:
            warnings.append(f"{split}: repaired {fixed} malformed tag(s)")
            logger.warning("%s: repaired %d malformed tag(s) in %s", split, fixed, path)
        repairs += fixed
        splits[split] = sents
    return Dataset(
        train=tuple(splits["train"]),
        dev=tuple(splits["dev"]),
        test=tuple(splits["test"]),
        name=name or Path(train_path).parent.name or "dataset",
        scheme=CANONICAL_SCHEME,
        repairs=repairs,
        warnings=tuple(warnings),
    )


def write_conll(sentences: Iterable[Sentence], path: str | Path, scheme: str = "BIO") -> None:
    lines: list[str] = []
    for sent in sentences:
        for char, tag in zip(sent.chars, normalize_tags(sent.tags, scheme)):
            lines.append(f"{char} {tag}")
        lines.append("")
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def dataset_stats(dataset: Dataset) -> SplitCounts:
    train, dev, test = len(dataset.train), len(dataset.dev), len(dataset.test)
    return SplitCounts(dataset.name, train + dev + test, train, dev, test)


def entity_types(sentences: Iterable[Sentence]) -> list[str]:
    types = {span.etype for sent in sentences for span in extract_spans(sent)}
    return sorted(types)
