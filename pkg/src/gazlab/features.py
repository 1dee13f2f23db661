"""Per-token gazetteer features: BMES lexeme sets, pooled vectors, CRF feature ids."""
from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Iterable, Mapping, Sequence

import numpy as np

from .corpus import Sentence
from .gazetteer import Gazetteer
from .matcher import LexemeMatcher, MatchSpan

PAD = "⊥"
POSITIONS = ("B", "M", "E", "S")

CHAR_TEMPLATES = ("bias", "c-1", "c0", "c+1", "c-1c0", "c0c+1")
GAZ_TEMPLATES = tuple(f"gaz.{p}.present" for p in POSITIONS) + tuple(
    f"gaz.{p}.top" for p in POSITIONS
)
KNOWN_TEMPLATES = frozenset(CHAR_TEMPLATES + GAZ_TEMPLATES)

BASELINE = "baseline"
GAZ_DISCRETE = "baseline+gaz-discrete"
GAZ_DENSE = "baseline+gaz-dense"
FEATURE_MODES = {
    BASELINE: CHAR_TEMPLATES,
    GAZ_DISCRETE: CHAR_TEMPLATES + GAZ_TEMPLATES,
    GAZ_DENSE: CHAR_TEMPLATES,
}

DEFAULT_VOCAB_SIZE = 10000


@dataclass(frozen=True)
class BmesSets:
    """Lexeme-id sets per token, one tuple per position class."""

    B: tuple[frozenset[int], ...]
    M: tuple[frozenset[int], ...]
    E: tuple[frozenset[int], ...]
    S: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.B)

    def at(self, i: int) -> tuple[frozenset[int], ...]:
        return (self.B[i], self.M[i], self.E[i], self.S[i])

    def membership_count(self) -> int:
        return sum(len(s) for sets in (self.B, self.M, self.E, self.S) for s in sets)


class FrequencyTable(Mapping[str, int]):
    """Training-split match counts per lexeme; absent lexemes count 0."""

    def __init__(self, counts: Mapping[str, int] | None = None) -> None:
        self._counts = {k: int(v) for k, v in (counts or {}).items() if v}

    def __getitem__(self, lexeme: str) -> int:
        return self._counts.get(lexeme, 0)

    def __iter__(self):
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __contains__(self, lexeme: object) -> bool:
        return lexeme in self._counts

    def __eq__(self, other: object) -> bool:
        if isinstance(other, FrequencyTable):
            return self._counts == other._counts
        return NotImplemented

    def top(self, n: int) -> list[str]:
        """The ``n`` most frequent lexemes; ties broken by lexeme string."""
        ranked = sorted(self._counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return [lex for lex, _ in ranked[:n]]

    def to_dict(self) -> dict[str, int]:
        return dict(sorted(self._counts.items()))


def bmes_sets(chars: Sequence[str], matches: Iterable[MatchSpan]) -> BmesSets:
    n = len(chars)
    sets: dict[str, list[set[int]]] = {p: [set() for _ in range(n)] for p in POSITIONS}
    for m in matches:
        if not 0 <= m.start < m.end <= n:
            raise ValueError(f"match ({m.start}, {m.end}) out of range for length {n}")
        if m.end - m.start == 1:
            sets["S"][m.start].add(m.lexeme_id)
            continue
        sets["B"][m.start].add(m.lexeme_id)
        sets["E"][m.end - 1].add(m.lexeme_id)
        for i in range(m.start + 1, m.end - 1):
            sets["M"][i].add(m.lexeme_id)
    return BmesSets(*(tuple(frozenset(s) for s in sets[p]) for p in POSITIONS))


def lexeme_frequency(matcher: LexemeMatcher, train_split: Iterable[Sentence]) -> FrequencyTable:
    """Count matched occurrences per lexeme. Pass the training split only."""
    counts: dict[str, int] = {}
    for sent in train_split:
        for m in matcher.match_all(sent.chars):
            counts[m.surface] = counts.get(m.surface, 0) + 1
    return FrequencyTable(counts)


def _pool(ids: AbstractSet[int], vectors, freq: Mapping[str, int], lexemes, dim: int) -> np.ndarray:
    if not ids:
        return np.zeros(dim)
    total = np.zeros(dim)
    weight_sum = 0.0
    for lid in sorted(ids):
        w = freq.get(lexemes[lid], 0) + 1.0
        total += w * vectors(lid)
        weight_sum += w
    return total / weight_sum


def pool_embeddings(
    bmes: BmesSets,
    freq: Mapping[str, int],
    gazetteer: Gazetteer,
    seed: int = 0,
    vectors=None,
) -> np.ndarray:
    """Frequency-weighted mean embedding of each BMES set, concatenated.

    Each member lexeme is weighted by its training frequency plus one; an
    empty set pools to zeros. Returns an array of shape ``(T, 4 * dim)``.
    ``vectors`` optionally maps a lexeme id to its vector (used for caching).
    """
    dim = gazetteer.dim
    lexemes = gazetteer.lexemes
    if vectors is None:
        def vectors(lid: int) -> np.ndarray:
            return gazetteer.vector(lexemes[lid], seed)
    out = np.zeros((len(bmes), 4 * dim))
    for i in range(len(bmes)):
        for k, ids in enumerate(bmes.at(i)):
            if ids:
                out[i, k * dim : (k + 1) * dim] = _pool(ids, vectors, freq, lexemes, dim)
    return out


def discrete_features(
    chars: Sequence[str],
    bmes: BmesSets | None,
    templates: Sequence[str],
    freq: Mapping[str, int] | None = None,
    lexemes: Sequence[str] = (),
    vocab: AbstractSet[str] | None = None,
    gazetteer_channel: bool = True,
) -> list[list[str]]:
    """Feature-id strings per token.

    ``gaz.*`` templates read ``bmes``; they emit nothing when the gazetteer
    channel is off or no sets are given. ``gaz.X.top`` names the most frequent
    lexeme of set X (ties: lowest lexeme id) if it is in ``vocab``.
    """
    unknown = [t for t in templates if t not in KNOWN_TEMPLATES]
    if unknown:
        raise ValueError(f"unknown template(s): {', '.join(unknown)}")
    use_gaz = gazetteer_channel and bmes is not None
    freq = freq or {}
    padded = [PAD, *chars, PAD]
    feats: list[list[str]] = []
    for i in range(len(chars)):
        prev, cur, nxt = padded[i], padded[i + 1], padded[i + 2]
        sets = bmes.at(i) if use_gaz else None
        row = []
        for t in templates:
            if t == "bias":
                row.append("bias")
            elif t == "c-1":
                row.append(f"c-1={prev}")
            elif t == "c0":
                row.append(f"c0={cur}")
            elif t == "c+1":
                row.append(f"c+1={nxt}")
            elif t == "c-1c0":
                row.append(f"c-1c0={prev}{cur}")
            elif t == "c0c+1":
                row.append(f"c0c+1={cur}{nxt}")
            elif sets is not None:
                _, pos, kind = t.split(".")
                ids = sets[POSITIONS.index(pos)]
                if not ids:
                    continue
                if kind == "present":
                    row.append(f"gaz.{pos}=1")
                else:
                    best = min(ids, key=lambda lid: (-freq.get(lexemes[lid], 0), lid))
                    lex = lexemes[best]
                    if vocab is None or lex in vocab:
                        row.append(f"gaz.{pos}.top={lex}")
        feats.append(row)
    return feats


@dataclass
class SentenceFeatures:
    discrete: list[list[str]]
    dense: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.discrete)


class Featurizer:
    """Turns character sequences into CRF inputs for one feature mode.

    Gazetteer-dependent state (frequency table, vocabulary cap, random-init
    seed) is frozen at construction so that test-time featurization always
    uses training statistics, masked or not.
    """

    def __init__(
        self,
        mode: str = BASELINE,
        matcher: LexemeMatcher | None = None,
        freq: FrequencyTable | None = None,
        seed: int = 0,
        vocab_size: int = DEFAULT_VOCAB_SIZE,
    ) -> None:
        if mode not in FEATURE_MODES:
            raise ValueError(f"unknown feature mode {mode!r}; expected one of {sorted(FEATURE_MODES)}")
        self.mode = mode
        self.templates = FEATURE_MODES[mode]
        self.uses_gazetteer = mode != BASELINE
        if self.uses_gazetteer and matcher is None:
            raise ValueError(f"feature mode {mode!r} needs a matcher")
        self.matcher = matcher if self.uses_gazetteer else None
        self.freq = freq if freq is not None else FrequencyTable()
        self.seed = seed
        self.vocab_size = vocab_size
        self.vocab = frozenset(self.freq.top(vocab_size))
        self._vectors: dict[int, np.ndarray] = {}

    @property
    def gazetteer(self) -> Gazetteer | None:
        return self.matcher.gazetteer if self.matcher is not None else None

    @property
    def dense_dim(self) -> int:
        if self.mode != GAZ_DENSE:
            return 0
        return 4 * self.gazetteer.dim

    def _vector(self, lid: int) -> np.ndarray:
        vec = self._vectors.get(lid)
        if vec is None:
            vec = self.gazetteer.vector(self.matcher.lexemes[lid], self.seed)
            self._vectors[lid] = vec
        return vec

    def __call__(self, chars: Sequence[str], mask: AbstractSet[str] | None = None) -> SentenceFeatures:
        if not self.uses_gazetteer:
            return SentenceFeatures(discrete_features(chars, None, self.templates))
        bmes = bmes_sets(chars, self.matcher.match_all(chars, mask))
        discrete = discrete_features(
            chars, bmes, self.templates, self.freq, self.matcher.lexemes, self.vocab
        )
        dense = None
        if self.mode == GAZ_DENSE:
            dense = pool_embeddings(bmes, self.freq, self.gazetteer, self.seed, self._vector)
        return SentenceFeatures(discrete, dense)

    def snapshot(self) -> dict:
        gaz = self.gazetteer
        return {
            "mode": self.mode,
            "templates": list(self.templates),
            "seed": self.seed,
            "vocab_size": self.vocab_size,
            "gazetteer": None if gaz is None else gaz.name,
            "gazetteer_fingerprint": None if gaz is None else gaz.fingerprint(),
            "dim": None if gaz is None else gaz.dim,
            "frequencies": self.freq.to_dict(),
        }

    @classmethod
    def from_snapshot(cls, snap: Mapping, matcher: LexemeMatcher | None) -> "Featurizer":
        return cls(
            snap["mode"],
            matcher,
            FrequencyTable(snap.get("frequencies", {})),
            snap.get("seed", 0),
            snap.get("vocab_size", DEFAULT_VOCAB_SIZE),
        )


def build_featurizer(
    mode: str,
    matcher: LexemeMatcher | None,
    train_split: Iterable[Sentence],
    seed: int = 0,
    vocab_size: int = DEFAULT_VOCAB_SIZE,
) -> Featurizer:
    """Featurizer whose frequency table is counted on ``train_split``."""
    freq = FrequencyTable()
    if mode != BASELINE:
        if matcher is None:
            raise ValueError(f"feature mode {mode!r} needs a matcher")
        freq = lexeme_frequency(matcher, train_split)
    return Featurizer(mode, matcher, freq, seed, vocab_size)
