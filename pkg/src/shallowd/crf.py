"""Linear-chain CRF over sequences of indicator-feature bags.

Scores are ``sum_t emit[t, y_t] + start[y_0] + sum_t trans[y_{t-1}, y_t] +
end[y_T]`` where ``emit[t]`` sums the emission weight rows of the features
active at position ``t``. Inference runs in log space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ModelFormatError

BIAS = "bias"
FORMAT = "shallowd.crf"
VERSION = 1


@dataclass(frozen=True)
class CrfSequence:
    observations: tuple

    def __post_init__(self):
        obs = tuple(tuple(sorted(set(bag) | {BIAS})) for bag in self.observations)
        if not obs:
            raise ValueError("a CRF sequence needs at least one position")
        object.__setattr__(self, "observations", obs)

    def __len__(self):
        return len(self.observations)


@dataclass(frozen=True)
class CrfConfig:
    lam: float = 0.1
    epochs: int = 50
    step: float = 0.1
    batch_size: int = 8
    seed: int = 0


@dataclass(eq=False)
class CrfModel:
    labels: tuple
    vocab: dict
    emission: np.ndarray
    transition: np.ndarray
    start: np.ndarray
    end: np.ndarray
    history: list = field(default_factory=list)

    @classmethod
    def zeros(cls, labels, features):
        vocab = {f: i for i, f in enumerate(sorted(set(features) | {BIAS}))}
        k = len(labels)
        return cls(
            tuple(labels), vocab, np.zeros((len(vocab), k)), np.zeros((k, k)), np.zeros(k), np.zeros(k)
        )

    @property
    def n_labels(self):
        return len(self.labels)

    def params(self):
        return {"emission": self.emission, "transition": self.transition, "start": self.start, "end": self.end}

    def copy(self):
        return CrfModel(
            self.labels, dict(self.vocab), self.emission.copy(), self.transition.copy(),
            self.start.copy(), self.end.copy(), list(self.history),
        )

    def encode(self, seq):
        """Feature rows per position; features outside the vocabulary are dropped."""
        return [np.array([self.vocab[f] for f in bag if f in self.vocab], dtype=np.int64) for bag in seq.observations]

    def emission_matrix(self, encoded):
        return np.stack([self.emission[rows].sum(axis=0) for rows in encoded])

    def label_ids(self, labels):
        index = {y: i for i, y in enumerate(self.labels)}
        return np.array([index[y] for y in labels], dtype=np.int64)

    def equals(self, other):
        return (
            self.labels == other.labels
            and self.vocab == other.vocab
            and all(np.array_equal(a, b) for a, b in zip(self.params().values(), other.params().values()))
        )


@dataclass
class Marginals:
    log_z: float
    node_marginals: np.ndarray  # (T, K)
    edge_marginals: np.ndarray  # (T-1, K, K)


def _lattice(model, emit):
    alpha, log_z = kernels.crf_forward(emit, model.transition, model.start, model.end)
    beta = kernels.crf_backward(emit, model.transition, model.end)
    node = np.exp(alpha + beta - log_z)
    edge = np.exp(
        alpha[:-1, :, None] + model.transition[None, :, :] + (emit[1:] + beta[1:])[:, None, :] - log_z
    )
    return Marginals(log_z, node, edge)


def forward_backward(model, seq):
    return _lattice(model, model.emission_matrix(model.encode(seq)))


def viterbi(model, seq):
    emit = model.emission_matrix(model.encode(seq))
    path, score = kernels.crf_viterbi(emit, model.transition, model.start, model.end)
    return [model.labels[i] for i in path], score


def sequence_score(model, seq, labels):
    emit = model.emission_matrix(model.encode(seq))
    return _path_score(model, emit, model.label_ids(labels))


def _path_score(model, emit, y):
    s = model.start[y[0]] + model.end[y[-1]] + emit[np.arange(len(y)), y].sum()
    if len(y) > 1:
        s += model.transition[y[:-1], y[1:]].sum()
    return float(s)


def _penalty(model, lam):
    return 0.5 * lam * sum(float((p * p).sum()) for p in model.params().values())


def _data_gradient(model, encoded, y, grads):
    """Add the unpenalized NLL gradient of one sequence into ``grads``; return its NLL."""
    emit = model.emission_matrix(encoded)
    marg = _lattice(model, emit)
    k = model.n_labels
    onehot = np.zeros((len(y), k))
    onehot[np.arange(len(y)), y] = 1.0
    diff = marg.node_marginals - onehot
    for t, rows in enumerate(encoded):
        if len(rows):
            np.add.at(grads["emission"], rows, np.broadcast_to(diff[t], (len(rows), k)))
    grads["start"] += diff[0]
    grads["end"] += diff[-1]
    if len(y) > 1:
        grads["transition"] += marg.edge_marginals.sum(axis=0)
        np.add.at(grads["transition"], (y[:-1], y[1:]), -1.0)
    return marg.log_z - _path_score(model, emit, y)


def _zero_grads(model):
    return {k: np.zeros_like(v) for k, v in model.params().items()}


def nll_and_gradient(model, seq, gold, lam=0.0):
    """Penalized negative log-likelihood of ``gold`` and its gradient."""
    if len(gold) != len(seq):
        raise ValueError(f"gold has {len(gold)} labels for a sequence of length {len(seq)}")
    grads = _zero_grads(model)
    nll = _data_gradient(model, model.encode(seq), model.label_ids(gold), grads)
    for name, p in model.params().items():
        grads[name] += lam * p
    return nll + _penalty(model, lam), grads


def mean_nll(model, data, lam=0.0):
    total = 0.0
    for seq, gold in data:
        emit = model.emission_matrix(model.encode(seq))
        log_z = kernels.crf_forward(emit, model.transition, model.start, model.end)[1]
        total += log_z - _path_score(model, emit, model.label_ids(gold))
    return total / len(data) + _penalty(model, lam)


def train_crf(data, config=None, labels=None):
    """Seeded mini-batch gradient descent on the mean penalized NLL."""
    if not data:
        raise ValueError("cannot train a CRF on an empty dataset")
    config = config or CrfConfig()
    if labels is None:
        labels = sorted({y for _, gold in data for y in gold})
    features = {f for seq, _ in data for bag in seq.observations for f in bag}
    for seq, gold in data:
        if len(seq) != len(gold):
            raise ValueError("gold label count differs from sequence length")
    model = CrfModel.zeros(labels, features)
    encoded = [(model.encode(seq), model.label_ids(gold)) for seq, gold in data]
    rng = np.random.default_rng(config.seed)
    model.history.append(mean_nll(model, data, config.lam))
    n = len(encoded)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for b in range(0, n, config.batch_size):
            batch = order[b : b + config.batch_size]
            grads = _zero_grads(model)
            for i in batch:
                _data_gradient(model, encoded[i][0], encoded[i][1], grads)
            scale = 1.0 / len(batch)
            # the L2 shrink is applied in closed (proximal) form so large
            # penalties stay stable at any step size
            shrink = 1.0 / (1.0 + config.step * config.lam)
            for name, p in model.params().items():
                p -= config.step * scale * grads[name]
                p *= shrink
        model.history.append(mean_nll(model, data, config.lam))
    return model


def token_accuracy(model, data):
    right = total = 0
    for seq, gold in data:
        pred, _ = viterbi(model, seq)
        right += sum(p == g for p, g in zip(pred, gold))
        total += len(gold)
    return right / total if total else 0.0


def dumps(model):
    features = sorted(model.vocab, key=model.vocab.get)
    return json.dumps(
        {
            "format": FORMAT,
            "version": VERSION,
            "labels": list(model.labels),
            "features": features,
            "emission": model.emission.tolist(),
            "transition": model.transition.tolist(),
            "start": model.start.tolist(),
            "end": model.end.tolist(),
        },
        sort_keys=True,
    )


def loads(text):
    obj = json.loads(text)
    if obj.get("format") != FORMAT or obj.get("version") != VERSION:
        raise ModelFormatError("not a supported CRF model file")
    k = len(obj["labels"])
    emission = np.array(obj["emission"], dtype=float).reshape(len(obj["features"]), k)
    return CrfModel(
        tuple(obj["labels"]),
        {f: i for i, f in enumerate(obj["features"])},
        emission,
        np.array(obj["transition"], dtype=float).reshape(k, k),
        np.array(obj["start"], dtype=float),
        np.array(obj["end"], dtype=float),
    )


def save(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model) + "\n")


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
