from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gazlab.corpus import Sentence, load_dataset
from gazlab.features import SentenceFeatures
from gazlab.gazetteer import load_gazetteer
from gazlab.tagger import CrfModel

FIXTURES = Path(__file__).parent / "fixtures"
TOY = FIXTURES / "toy"


@pytest.fixture
def toy_dir() -> Path:
    return TOY


@pytest.fixture
def toy_manifest() -> dict:
    return json.loads((TOY / "manifest.json").read_text(encoding="utf-8"))


@pytest.fixture
def toy_dataset():
    return load_dataset(TOY / "train.txt", TOY / "dev.txt", TOY / "test.txt", "BIO", "toy")


@pytest.fixture
def toy_gazetteer():
    return load_gazetteer(TOY / "lexicon.txt", TOY / "vectors.txt", "toy-gaz")


def sent(text: str, tags: str) -> Sentence:
    return Sentence(tuple(text), tuple(tags.split()))


def random_instance(rng: np.random.Generator, n_tokens: int, n_labels: int, dense_dim: int = 0):
    """A random CRF, a gold sentence and aligned features over a tiny vocabulary."""
    labels = ["O"] + [f"S-T{i}" for i in range(n_labels - 1)]
    vocab = [f"f{i}" for i in range(6)]
    model = CrfModel.zeros(labels, vocab, dense_dim)
    model.weights = rng.normal(size=model.weights.shape)
    model.transitions = rng.normal(size=model.transitions.shape)
    if dense_dim:
        model.projection = rng.normal(size=model.projection.shape)
    discrete = [
        [vocab[j] for j in rng.choice(len(vocab), size=rng.integers(1, 4), replace=False)] + ["unseen"]
        for _ in range(n_tokens)
    ]
    dense = rng.normal(size=(n_tokens, dense_dim)) if dense_dim else None
    gold = rng.integers(n_labels, size=n_tokens)
    sentence = Sentence(tuple("x" * n_tokens), tuple(labels[y] for y in gold))
    return model, sentence, SentenceFeatures(discrete, dense)


@pytest.fixture(scope="session")
def small_synthetic():
    from gazlab.synthetic import SyntheticConfig, generate

    return generate(SyntheticConfig(n_train=200, n_dev=40, n_test=80, seed=0))


@pytest.fixture(scope="session")
def small_trained(small_synthetic):
    """(model, matcher) in gaz-discrete mode on the small synthetic corpus."""
    from gazlab.features import GAZ_DISCRETE
    from gazlab.pipeline import fit
    from gazlab.tagger import TrainConfig

    return fit(small_synthetic.dataset, small_synthetic.gazetteer, TrainConfig(epochs=3, seed=0, mode=GAZ_DISCRETE))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
