"""Synthetic Chinese-like NER corpora with a partially covering gazetteer.

Background text comes from a first-order character Markov chain over a small
CJK alphabet; entity surfaces are built from the same characters plus a few
type cue characters, so characters alone are ambiguous evidence. A fraction
of entity mentions use gazetteer lexemes; some gazetteer entities are held
out of the training split so that test-only lexemes exist. The gazetteer also
contains ordinary words that occur in background text.

Pre-trained vectors place every entity lexeme along one shared direction plus
a per-type direction; ordinary words get noise only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Dataset, Sentence, tags_from_spans, write_conll
from .gazetteer import Gazetteer, write_lexicon, write_word2vec

TYPES = ("PER", "LOC", "ORG")
_CJK_START = 0x4E00
_CJK_SIZE = 0x9FA5 - 0x4E00


@dataclass
class SyntheticConfig:
    n_train: int = 2000
    n_dev: int = 200
    n_test: int = 400
    gazetteer_size: int = 200
    coverage: float = 0.6  # share of entity mentions whose surface is a gazetteer lexeme
    entity_share: float = 0.7  # share of gazetteer lexemes that are entity surfaces
    heldout: float = 0.2  # share of gazetteer entities never used in the training split
    alphabet_size: int = 60
    word_rate: float = 0.25  # chance a background step emits a whole gazetteer word
    dim: int = 16
    seed: int = 0


@dataclass
class SyntheticCorpus:
    dataset: Dataset
    gazetteer: Gazetteer
    entity_lexemes: dict[str, str]  # gazetteer entity surface -> type
    heldout_lexemes: frozenset[str]
    word_lexemes: tuple[str, ...]
    seed: int = 0


class _Generator:
    def __init__(self, cfg: SyntheticConfig) -> None:
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        codes = self.rng.choice(_CJK_SIZE, size=cfg.alphabet_size, replace=False)
        self.alphabet = [chr(_CJK_START + int(c)) for c in codes]
        v = cfg.alphabet_size
        self.trans = self.rng.dirichlet(np.full(v, 0.3), size=v)
        cues = self.rng.choice(v, size=14, replace=False)
        self.surnames = [int(c) for c in cues[:6]]
        self.loc_suffix = [int(c) for c in cues[6:10]]
        self.org_suffix = [int(c) for c in cues[10:]]

    def walk(self, n: int, start: int | None = None) -> list[int]:
        state = int(self.rng.integers(self.cfg.alphabet_size)) if start is None else start
        out = []
        for _ in range(n):
            state = int(self.rng.choice(self.cfg.alphabet_size, p=self.trans[state]))
            out.append(state)
        return out

    def text(self, ids: list[int]) -> str:
        return "".join(self.alphabet[i] for i in ids)

    def entity(self, etype: str) -> str:
        rng = self.rng
        if etype == "PER":
            head = int(rng.choice(self.surnames))
            ids = [head] + self.walk(int(rng.integers(1, 3)), head)
        elif etype == "LOC":
            ids = self.walk(int(rng.integers(1, 3))) + [int(rng.choice(self.loc_suffix))]
        else:
            ids = self.walk(int(rng.integers(2, 4))) + [int(rng.choice(self.org_suffix))]
        return self.text(ids)

    def word(self) -> str:
        return self.text(self.walk(int(self.rng.integers(2, 4))))


def generate(cfg: SyntheticConfig | None = None) -> SyntheticCorpus:
    cfg = cfg or SyntheticConfig()
    gen = _Generator(cfg)
    rng = gen.rng

    n_ent = round(cfg.gazetteer_size * cfg.entity_share)
    n_word = cfg.gazetteer_size - n_ent
    entity_lexemes: dict[str, str] = {}
    while len(entity_lexemes) < n_ent:
        etype = TYPES[int(rng.integers(len(TYPES)))]
        surface = gen.entity(etype)
        if surface not in entity_lexemes:
            entity_lexemes[surface] = etype
    words: list[str] = []
    while len(words) < n_word:
        w = gen.word()
        if w not in entity_lexemes and w not in words:
            words.append(w)

    ent_list = list(entity_lexemes)
    n_held = round(n_ent * cfg.heldout)
    held = frozenset(ent_list[:n_held])
    seen = ent_list[n_held:]

    def background() -> str:
        parts: list[str] = []
        length = int(rng.integers(3, 9))
        state = None
        while sum(map(len, parts)) < length:
            if rng.random() < cfg.word_rate:
                parts.append(words[int(rng.integers(len(words)))])
                state = None
            else:
                state = gen.walk(1, state)[0]
                parts.append(gen.alphabet[state])
        return "".join(parts)

    def mention(pool: list[str]) -> tuple[str, str]:
        if rng.random() < cfg.coverage:
            surface = pool[int(rng.integers(len(pool)))]
            return surface, entity_lexemes[surface]
        etype = TYPES[int(rng.integers(len(TYPES)))]
        while True:
            surface = gen.entity(etype)
            if surface not in entity_lexemes:
                return surface, etype

    def sentence(pool: list[str]) -> Sentence:
        text = background()
        spans = []
        for _ in range(int(rng.integers(1, 3))):
            surface, etype = mention(pool)
            spans.append((len(text), len(text) + len(surface), etype))
            text += surface + background()
        return Sentence(tuple(text), tuple(tags_from_spans(len(text), spans)))

    train = tuple(sentence(seen) for _ in range(cfg.n_train))
    dev = tuple(sentence(ent_list) for _ in range(cfg.n_dev))
    test = tuple(sentence(ent_list) for _ in range(cfg.n_test))

    lexemes = tuple(ent_list + words)
    order = rng.permutation(len(lexemes))
    lexemes = tuple(lexemes[i] for i in order)

    def unit(n: int) -> np.ndarray:
        v = rng.normal(size=n)
        return v / np.linalg.norm(v)

    shared = unit(cfg.dim)
    type_dirs = {t: unit(cfg.dim) for t in TYPES}
    embeddings = {}
    for lex in lexemes:
        noise = 0.3 * rng.normal(size=cfg.dim) / np.sqrt(cfg.dim)
        if lex in entity_lexemes:
            embeddings[lex] = shared + 0.7 * type_dirs[entity_lexemes[lex]] + noise
        else:
            embeddings[lex] = noise
    gazetteer = Gazetteer(lexemes, embeddings, cfg.dim, True, f"synthetic-{cfg.seed}")
    dataset = Dataset(train, dev, test, name=f"synthetic-{cfg.seed}")
    return SyntheticCorpus(dataset, gazetteer, entity_lexemes, held, tuple(words), cfg.seed)


def write_corpus(
    corpus: SyntheticCorpus,
    directory: str | Path,
    features: str = "baseline+gaz-discrete",
    epochs: int = 5,
) -> Path:
    """Write CoNLL splits, lexicon, vectors and a ready-to-run config.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for split, sents in corpus.dataset.splits().items():
        write_conll(sents, directory / f"{split}.txt", "BIO")
    write_lexicon(corpus.gazetteer, directory / "lexicon.txt")
    write_word2vec(corpus.gazetteer, directory / "vectors.txt")
    config = {
        "name": corpus.dataset.name,
        "seed": int(corpus.seed),
        "dataset": {
            "name": corpus.dataset.name,
            "train": "train.txt",
            "dev": "dev.txt",
            "test": "test.txt",
            "scheme": "BIO",
        },
        "gazetteer": {
            "name": corpus.gazetteer.name,
            "lexicon": "lexicon.txt",
            "embeddings": "vectors.txt",
        },
        "features": features,
        "train": {"epochs": epochs, "l2": 1.0, "eta0": 0.1},
        "output_dir": "out",
    }
    path = directory / "config.json"
    path.write_text(json.dumps(config, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path
