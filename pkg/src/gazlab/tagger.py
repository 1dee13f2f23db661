"""Linear-chain CRF over sparse feature ids plus optional dense inputs.

Emission score of label ``y`` at token ``t`` is the sum of the weights of the
token's known feature ids for ``y`` plus ``dense[t] @ projection[:, y]``.
Transition scores ``transitions[y_prev, y]`` have no start/stop states.
Training is averaged SGD with a decaying step and an implicit L2 step.
"""
from __future__ import annotations

import json
import logging
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import Sentence, entity_types
from .features import Featurizer, SentenceFeatures

logger = logging.getLogger(__name__)

MAGIC = "GAZLAB-CRF"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file has the wrong header, version, or layout."""


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    l2: float = 1.0
    epochs: int = 10
    eta0: float = 0.1
    t0: float | None = None  # None: 10 * |train|
    seed: int = 0
    mode: str = "baseline"
    dense_init: float = 0.01

    def __post_init__(self) -> None:
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.epochs < 0 or int(self.epochs) != self.epochs:
            raise ValueError("epochs must be a non-negative integer")
        if self.eta0 <= 0:
            raise ValueError("eta0 must be > 0")
        if self.t0 is not None and self.t0 <= 0:
            raise ValueError("t0 must be > 0")


@dataclass
class CrfGradient:
    weights: np.ndarray
    transitions: np.ndarray
    projection: np.ndarray | None = None


@dataclass
class CrfModel:
    labels: list[str]
    feature_index: dict[str, int]
    weights: np.ndarray
    transitions: np.ndarray
    projection: np.ndarray | None = None
    config: dict = field(default_factory=dict)
    train_log: list[dict] = field(default_factory=list)

    @classmethod
    def zeros(cls, labels: Sequence[str], features: Sequence[str], dense_dim: int = 0) -> "CrfModel":
        k = len(labels)
        return cls(
            labels=list(labels),
            feature_index={f: i for i, f in enumerate(features)},
            weights=np.zeros((len(features), k)),
            transitions=np.zeros((k, k)),
            projection=np.zeros((dense_dim, k)) if dense_dim else None,
        )

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def dense_dim(self) -> int:
        return 0 if self.projection is None else self.projection.shape[0]

    def label_index(self, tag: str) -> int:
        try:
            return self.labels.index(tag)
        except ValueError:
            raise KeyError(f"tag {tag!r} is not in the model's label set") from None

    def copy(self) -> "CrfModel":
        return CrfModel(
            list(self.labels),
            dict(self.feature_index),
            self.weights.copy(),
            self.transitions.copy(),
            None if self.projection is None else self.projection.copy(),
            json.loads(json.dumps(self.config)),
            [dict(e) for e in self.train_log],
        )


@dataclass
class _Encoded:
    ids: np.ndarray
    pos: np.ndarray
    dense: np.ndarray | None
    length: int


def _encode(model: CrfModel, features: SentenceFeatures) -> _Encoded:
    ids: list[int] = []
    pos: list[int] = []
    index = model.feature_index
    for t, row in enumerate(features.discrete):
        for f in row:
            j = index.get(f)
            if j is not None:
                ids.append(j)
                pos.append(t)
    dense = features.dense
    if model.projection is not None:
        if dense is None or dense.shape != (len(features), model.dense_dim):
            raise ValueError("dense features do not match the model's projection")
    else:
        dense = None
    return _Encoded(np.asarray(ids, dtype=np.intp), np.asarray(pos, dtype=np.intp), dense, len(features))


def _emissions(model: CrfModel, enc: _Encoded) -> np.ndarray:
    scores = np.zeros((enc.length, model.num_labels))
    if enc.ids.size:
        np.add.at(scores, enc.pos, model.weights[enc.ids])
    if enc.dense is not None:
        scores += enc.dense @ model.projection
    return scores


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    m = x.max(axis=axis)
    return m + np.log(np.exp(x - np.expand_dims(m, axis)).sum(axis=axis))


def _forward(emit: np.ndarray, trans: np.ndarray) -> np.ndarray:
    alpha = np.empty_like(emit)
    alpha[0] = emit[0]
    for t in range(1, len(emit)):
        x = alpha[t - 1][:, None] + trans
        m = x.max(axis=0)
        alpha[t] = m + np.log(np.exp(x - m).sum(axis=0)) + emit[t]
    return alpha


def _backward(emit: np.ndarray, trans: np.ndarray) -> np.ndarray:
    beta = np.zeros_like(emit)
    for t in range(len(emit) - 2, -1, -1):
        x = trans + (emit[t + 1] + beta[t + 1])
        m = x.max(axis=1)
        beta[t] = m + np.log(np.exp(x - m[:, None]).sum(axis=1))
    return beta


def _path_score(emit: np.ndarray, trans: np.ndarray, path: Sequence[int]) -> float:
    score = emit[0, path[0]]
    for t in range(1, len(path)):
        score += trans[path[t - 1], path[t]] + emit[t, path[t]]
    return float(score)


def _marginals(emit: np.ndarray, trans: np.ndarray):
    """Return ``(logZ, node marginals (T, K), summed edge marginals (K, K))``."""
    alpha = _forward(emit, trans)
    beta = _backward(emit, trans)
    log_z = float(_logsumexp(alpha[-1], axis=0))
    nodes = np.exp(alpha + beta - log_z)
    if len(emit) > 1:
        pair = alpha[:-1, :, None] + trans + (emit[1:] + beta[1:])[:, None, :]
        edges = np.exp(pair - log_z).sum(axis=0)
    else:
        edges = np.zeros_like(trans)
    return log_z, nodes, edges


def _gold_ids(model: CrfModel, sentence: Sentence) -> np.ndarray:
    return np.array([model.label_index(tag) for tag in sentence.tags], dtype=np.intp)


def sequence_score(model: CrfModel, features: SentenceFeatures, path: Sequence[int]) -> float:
    """Unnormalized log score of a label-index path."""
    emit = _emissions(model, _encode(model, features))
    return _path_score(emit, model.transitions, path)


def log_partition(model: CrfModel, features: SentenceFeatures) -> float:
    emit = _emissions(model, _encode(model, features))
    return float(_logsumexp(_forward(emit, model.transitions)[-1], axis=0))


def _parameter_norm(model: CrfModel) -> float:
    total = float(np.sum(model.weights**2) + np.sum(model.transitions**2))
    if model.projection is not None:
        total += float(np.sum(model.projection**2))
    return total


def score_and_gradient(
    model: CrfModel,
    sentence: Sentence,
    features: SentenceFeatures,
    l2: float = 0.0,
    index: int | None = None,
) -> tuple[float, CrfGradient]:
    """Log-likelihood of the gold path and its gradient w.r.t. every weight.

    With ``l2 > 0`` the returned value is ``loglik - l2/2 * ||theta||^2`` and
    the gradient includes ``-l2 * theta``.
    """
    if len(features) != len(sentence):
        raise ValueError("features are not aligned with the sentence")
    enc = _encode(model, features)
    emit = _emissions(model, enc)
    gold = _gold_ids(model, sentence)
    log_z, nodes, edges = _marginals(emit, model.transitions)
    value = _path_score(emit, model.transitions, gold) - log_z
    if not np.isfinite(value):
        where = "" if index is None else f" (sentence {index})"
        raise FloatingPointError(f"non-finite log-likelihood{where}")

    diff = -nodes
    diff[np.arange(len(gold)), gold] += 1.0
    g_w = np.zeros_like(model.weights)
    if enc.ids.size:
        np.add.at(g_w, enc.ids, diff[enc.pos])
    g_t = -edges
    np.add.at(g_t, (gold[:-1], gold[1:]), 1.0)
    g_p = None
    if model.projection is not None:
        g_p = enc.dense.T @ diff
    if l2:
        value -= 0.5 * l2 * _parameter_norm(model)
        g_w -= l2 * model.weights
        g_t -= l2 * model.transitions
        if g_p is not None:
            g_p -= l2 * model.projection
    return value, CrfGradient(g_w, g_t, g_p)


def _viterbi(emit: np.ndarray, trans: np.ndarray) -> list[int]:
    n, k = emit.shape
    delta = emit[0].copy()
    back = np.zeros((n, k), dtype=np.intp)
    for t in range(1, n):
        cand = delta[:, None] + trans
        # argmax returns the first maximum: ties go to the lowest label index
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(k)] + emit[t]
    best = int(np.argmax(delta))
    path = [best]
    for t in range(n - 1, 0, -1):
        best = int(back[t, best])
        path.append(best)
    return path[::-1]


def decode_indices(model: CrfModel, features: SentenceFeatures) -> list[int]:
    emit = _emissions(model, _encode(model, features))
    return _viterbi(emit, model.transitions)


def decode(model: CrfModel, sentence: Sentence | Sequence[str] | None, features: SentenceFeatures) -> list[str]:
    """Highest-scoring tag sequence. The output may be ill-formed BIOES."""
    return [model.labels[i] for i in decode_indices(model, features)]


def label_set(sentences: Sequence[Sentence]) -> list[str]:
    labels = ["O"]
    for etype in entity_types(sentences):
        labels.extend(f"{p}-{etype}" for p in "BIES")
    return labels


def initial_model(
    labels: Sequence[str], features: Sequence[str], dense_dim: int, config: TrainConfig
) -> CrfModel:
    model = CrfModel.zeros(labels, features, dense_dim)
    if dense_dim:
        rng = np.random.default_rng([config.seed, 1])
        model.projection = rng.uniform(-config.dense_init, config.dense_init, size=(dense_dim, len(labels)))
    return model


def train(
    train_split: Sequence[Sentence],
    featurizer: Featurizer,
    config: TrainConfig | None = None,
) -> CrfModel:
    """Fit a CRF on ``train_split`` by averaged SGD.

    Deterministic given data, featurizer and ``config.seed``. The returned
    weights are the average of the iterates over all updates.
    """
    config = config or TrainConfig(mode=featurizer.mode)
    if not train_split:
        raise ValueError("empty training split")
    feats = [featurizer(s.chars) for s in train_split]
    vocab = sorted({f for sf in feats for row in sf.discrete for f in row})
    labels = label_set(train_split)
    model = initial_model(labels, vocab, featurizer.dense_dim, config)
    model.config = {"featurizer": featurizer.snapshot(), "train": asdict(config)}
    if config.epochs == 0:
        return model

    encoded = [_encode(model, sf) for sf in feats]
    golds = [_gold_ids(model, s) for s in train_split]
    n = len(train_split)
    t0 = config.t0 if config.t0 is not None else 10.0 * n
    reg = config.l2 / n
    rng = np.random.default_rng(config.seed)

    w, tr, p = model.weights, model.transitions, model.projection
    w_sum, tr_sum = np.zeros_like(w), np.zeros_like(tr)
    p_sum = None if p is None else np.zeros_like(p)
    steps = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_ll = 0.0
        for idx in order:
            eta = config.eta0 / (1.0 + steps / t0)
            enc, gold = encoded[idx], golds[idx]
            emit = _emissions(model, enc)
            log_z, nodes, edges = _marginals(emit, tr)
            ll = _path_score(emit, tr, gold) - log_z
            if not np.isfinite(ll):
                raise TrainingDiverged(f"non-finite log-likelihood in epoch {epoch + 1}")
            epoch_ll += ll
            diff = -nodes
            diff[np.arange(len(gold)), gold] += 1.0
            g_t = -edges
            np.add.at(g_t, (gold[:-1], gold[1:]), 1.0)

            # implicit L2 step: w <- (w + eta * g) / (1 + eta * reg)
            shrink = 1.0 / (1.0 + eta * reg)
            step = eta * shrink
            if reg:
                w *= shrink
                tr *= shrink
            if enc.ids.size:
                np.add.at(w, enc.ids, step * diff[enc.pos])
            tr += step * g_t
            if p is not None:
                if reg:
                    p *= shrink
                p += step * (enc.dense.T @ diff)
                p_sum += p
            w_sum += w
            tr_sum += tr
            steps += 1
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(tr))):
            raise TrainingDiverged(f"non-finite weights after epoch {epoch + 1}")
        model.train_log.append({"epoch": epoch + 1, "log_likelihood": epoch_ll, "eta": eta})
        logger.debug("epoch %d: train log-likelihood %.4f", epoch + 1, epoch_ll)

    model.weights = w_sum / steps
    model.transitions = tr_sum / steps
    if p is not None:
        model.projection = p_sum / steps
    return model


def count_parameters(model: CrfModel) -> int:
    return int(model.weights.size + model.transitions.size + (0 if model.projection is None else model.projection.size))


def measure_train_time(pipeline: Callable[[], object]) -> float:
    """Wall-clock seconds taken by ``pipeline()``."""
    start = time.perf_counter()
    pipeline()
    return time.perf_counter() - start


def check_gazetteer(model: CrfModel, gazetteer_name: str | None) -> None:
    """Warn when the model was trained against a different gazetteer."""
    snap = model.config.get("featurizer", {})
    expected = snap.get("gazetteer")
    if expected is not None and gazetteer_name is not None and expected != gazetteer_name:
        warnings.warn(
            f"model was trained with gazetteer {expected!r} but {gazetteer_name!r} was supplied",
            stacklevel=2,
        )


def _matrix(a: np.ndarray | None):
    return None if a is None else [[float(v) for v in row] for row in a]


def model_to_dict(model: CrfModel) -> dict:
    features = sorted(model.feature_index, key=model.feature_index.__getitem__)
    return {
        "magic": MAGIC,
        "version": FORMAT_VERSION,
        "labels": model.labels,
        "features": features,
        "weights": _matrix(model.weights),
        "transitions": _matrix(model.transitions),
        "projection": _matrix(model.projection),
        "config": model.config,
        "train_log": model.train_log,
    }


def save_model(model: CrfModel, path: str | Path) -> None:
    """Write ``model`` as JSON. Layout is documented in docs/model-format.md."""
    text = json.dumps(model_to_dict(model), ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path: str | Path) -> CrfModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from exc
    if not isinstance(data, dict) or data.get("magic") != MAGIC:
        raise ModelFormatError(f"{path}: not a {MAGIC} model file (bad magic header)")
    if data.get("version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model version {data.get('version')!r} (expected {FORMAT_VERSION})"
        )
    try:
        labels = list(data["labels"])
        features = list(data["features"])
        k = len(labels)
        weights = np.array(data["weights"], dtype=np.float64).reshape(len(features), k)
        transitions = np.array(data["transitions"], dtype=np.float64).reshape(k, k)
        projection = data.get("projection")
        if projection is not None:
            projection = np.array(projection, dtype=np.float64).reshape(-1, k)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from exc
    return CrfModel(
        labels=labels,
        feature_index={f: i for i, f in enumerate(features)},
        weights=weights,
        transitions=transitions,
        projection=projection,
        config=data.get("config", {}),
        train_log=data.get("train_log", []),
    )
