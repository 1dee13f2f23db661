"""Gazetteers: lexeme lists with optional pre-trained embeddings."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_DIM = 50


class GazetteerError(ValueError):
    pass


def _lexeme_hash(lexeme: str) -> int:
    return int.from_bytes(hashlib.blake2b(lexeme.encode("utf-8"), digest_size=8).digest(), "little")


def random_init(lexeme: str, dim: int, seed: int) -> np.ndarray:
    """Seeded uniform vector in [-0.5/dim, 0.5/dim].

    Depends only on ``(seed, lexeme)``, so the result does not change with
    iteration order or with which other lexemes are present.
    """
    rng = np.random.default_rng([seed, _lexeme_hash(lexeme)])
    bound = 0.5 / dim
    return rng.uniform(-bound, bound, size=dim)


@dataclass(frozen=True, eq=False)
class Gazetteer:
    lexemes: tuple[str, ...]
    embeddings: Mapping[str, np.ndarray] = field(default_factory=dict)
    dim: int = DEFAULT_DIM
    pretrained: bool = False
    name: str = "gazetteer"
    duplicates: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "lexemes", tuple(self.lexemes))
        if len(set(self.lexemes)) != len(self.lexemes):
            raise GazetteerError("lexemes must be unique")
        for lex in self.lexemes:
            if not lex or any(ch.isspace() for ch in lex):
                raise GazetteerError(f"invalid lexeme {lex!r}")
        if not self.pretrained and self.embeddings:
            raise GazetteerError("a non-pretrained gazetteer cannot carry embeddings")
        for lex, vec in self.embeddings.items():
            if vec.shape != (self.dim,) or not np.all(np.isfinite(vec)):
                raise GazetteerError(f"bad embedding for {lex!r}")

    def __len__(self) -> int:
        return len(self.lexemes)

    def __contains__(self, lexeme: object) -> bool:
        return lexeme in self._index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gazetteer):
            return NotImplemented
        if (self.lexemes, self.dim, self.pretrained, self.name) != (
            other.lexemes, other.dim, other.pretrained, other.name
        ):
            return False
        if self.embeddings.keys() != other.embeddings.keys():
            return False
        return all(np.array_equal(v, other.embeddings[k]) for k, v in self.embeddings.items())

    __hash__ = None  # type: ignore[assignment]

    @property
    def _index(self) -> frozenset[str]:
        cached = self.__dict__.get("_lexeme_set")
        if cached is None:
            cached = frozenset(self.lexemes)
            object.__setattr__(self, "_lexeme_set", cached)
        return cached

    def vector(self, lexeme: str, seed: int = 0) -> np.ndarray:
        """Pre-trained vector of ``lexeme`` if present, else its seeded random init."""
        vec = self.embeddings.get(lexeme)
        if vec is not None:
            return vec
        return random_init(lexeme, self.dim, seed)

    def fingerprint(self) -> str:
        h = hashlib.blake2b(digest_size=8)
        h.update(self.name.encode("utf-8"))
        h.update(b"\0%d\0%d\0" % (self.dim, self.pretrained))
        for lex in self.lexemes:
            h.update(lex.encode("utf-8") + b"\n")
        return h.hexdigest()


@dataclass(frozen=True)
class GazetteerStats:
    name: str
    num: int
    dim: int
    pretrained: bool
    coverage_ratio: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "num": self.num,
            "dim": self.dim,
            "pretrained": self.pretrained,
            "coverage_ratio": self.coverage_ratio,
        }


def _read_lexicon(path: Path) -> tuple[list[str], int]:
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise GazetteerError(f"cannot read {path}: {exc}") from exc
    lexemes: list[str] = []
    seen: set[str] = set()
    duplicates = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        lex = raw.strip()
        if not lex:
            continue
        if any(ch.isspace() for ch in lex):
            raise GazetteerError(f"{path}:{lineno}: lexeme {lex!r} contains whitespace")
        if lex in seen:
            duplicates += 1
            continue
        seen.add(lex)
        lexemes.append(lex)
    return lexemes, duplicates


def _read_word2vec(path: Path, wanted: set[str]) -> tuple[int, dict[str, np.ndarray]]:
    vectors: dict[str, np.ndarray] = {}
    try:
        fh = path.open(encoding="utf-8")
    except OSError as exc:
        raise GazetteerError(f"cannot read {path}: {exc}") from exc
    with fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise GazetteerError(f"{path}:1: header must be 'count dim'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise GazetteerError(f"{path}:1: header must be 'count dim'") from None
        if dim <= 0:
            raise GazetteerError(f"{path}:1: dimension must be positive")
        rows = 0
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            rows += 1
            if len(parts) != dim + 1:
                raise GazetteerError(
                    f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}"
                )
            token = parts[0]
            if token not in wanted:
                continue
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError:
                raise GazetteerError(f"{path}:{lineno}: non-numeric value") from None
            if not np.all(np.isfinite(vec)):
                raise GazetteerError(f"{path}:{lineno}: non-finite value")
            if token not in vectors:
                vectors[token] = vec
    if rows != count:
        raise GazetteerError(f"{path}: header announces {count} vectors, found {rows}")
    return dim, vectors


def load_gazetteer(
    lexicon_path: str | Path,
    embedding_path: str | Path | None = None,
    name: str | None = None,
    dim: int = DEFAULT_DIM,
) -> Gazetteer:
    """Load a lexicon (one lexeme per line) and optional word2vec text vectors.

    ``dim`` is only used when no embedding file is given; it fixes the size of
    the seeded random vectors used in place of pre-trained ones.
    """
    lexicon_path = Path(lexicon_path)
    lexemes, duplicates = _read_lexicon(lexicon_path)
    if not lexemes:
        raise GazetteerError(f"empty lexicon: {lexicon_path}")
    if duplicates:
        logger.warning("%s: dropped %d duplicate lexeme(s)", lexicon_path, duplicates)
    embeddings: dict[str, np.ndarray] = {}
    pretrained = embedding_path is not None
    if pretrained:
        dim, embeddings = _read_word2vec(Path(embedding_path), set(lexemes))
        uncovered = len(lexemes) - len(embeddings)
        if uncovered:
            logger.info("%d lexeme(s) have no pre-trained vector", uncovered)
    return Gazetteer(
        lexemes=tuple(lexemes),
        embeddings=embeddings,
        dim=dim,
        pretrained=pretrained,
        name=name or lexicon_path.stem,
        duplicates=duplicates,
    )


def gazetteer_stats(g: Gazetteer) -> GazetteerStats:
    num = len(g.lexemes)
    coverage = len(g.embeddings) / num if num else 0.0
    return GazetteerStats(g.name, num, g.dim, g.pretrained, coverage)


def subsample(g: Gazetteer, fraction: float, seed: int) -> Gazetteer:
    """Uniform sample of ``round(fraction * num)`` lexemes, original order kept."""
    if not 0 < fraction <= 1:
        raise GazetteerError(f"fraction must be in (0, 1], got {fraction}")
    k = round(fraction * len(g.lexemes))
    if k == 0:
        raise GazetteerError("empty subsample")
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(g.lexemes), size=k, replace=False))
    lexemes = tuple(g.lexemes[i] for i in keep)
    embeddings = {lex: g.embeddings[lex] for lex in lexemes if lex in g.embeddings}
    return Gazetteer(lexemes, embeddings, g.dim, g.pretrained, g.name)


def strip_embeddings(g: Gazetteer) -> Gazetteer:
    return Gazetteer(g.lexemes, {}, g.dim, False, g.name)


def write_lexicon(g: Gazetteer, path: str | Path) -> None:
    Path(path).write_text("".join(lex + "\n" for lex in g.lexemes), encoding="utf-8")


def write_word2vec(g: Gazetteer, path: str | Path) -> None:
    lines = [f"{len(g.embeddings)} {g.dim}"]
    for lex in g.lexemes:
        vec = g.embeddings.get(lex)
        if vec is not None:
            lines.append(lex + " " + " ".join(repr(float(v)) for v in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
