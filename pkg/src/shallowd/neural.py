"""Sentence-pair ConvNet: embedding lookup, narrow convolutions of several
widths, ELU, max-over-time pooling, dropout, softmax, trained with Adam.

Parameters are float64 in memory and float32 on disk.
"""

from __future__ import annotations

import copy
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import kernels
from .embeddings import OOV_ROW, PAD, PAD_ROW, EmbeddingMatrix
from .errors import ModelFormatError

DEFAULT_LIMITS = (60, 61)
MAGIC = b"SHDNET\x00\x01"
VERSION = 1


# --- elementwise pieces -----------------------------------------------------------


def elu(x, alpha=1.0):
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, x, alpha * np.expm1(np.minimum(x, 0.0)))
    return out if out.ndim else float(out)


def elu_grad(x, alpha=1.0):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, 1.0, alpha * np.exp(np.minimum(x, 0.0)))


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def conv_forward(q, filt, bias, alpha=1.0):
    """Feature map of one filter (w x d) over ``q`` (l x d): length l - w + 1."""
    q = np.asarray(q, dtype=float)
    filt = np.asarray(filt, dtype=float)
    w = filt.shape[0]
    if w > q.shape[0]:
        raise ValueError(f"filter width {w} exceeds input length {q.shape[0]}")
    win = sliding_window_view(q, w, axis=0)  # (l-w+1, d, w)
    z = np.einsum("ndw,wd->n", win, filt) + bias
    return elu(z, alpha)


def max_over_time(c):
    """Return ``(max, argmax)``; ties go to the first position."""
    c = np.asarray(c)
    if c.size == 0:
        raise ValueError("cannot pool an empty feature map")
    i = int(np.argmax(c))
    return float(c[i]), i


# --- inputs ---------------------------------------------------------------------------


def build_input(arg1_words, arg2_words, limits, emb):
    """Row indices for one argument pair: each argument lowercased, cut to its
    first ``L`` words, left-padded to exactly ``L``, then Arg1 before Arg2."""
    out = []
    for words, cap in zip((arg1_words, arg2_words), limits):
        if cap <= 0:
            raise ValueError("length limits must be positive")
        kept = [w.lower() for w in words[:cap]]
        out.extend([PAD_ROW] * (cap - len(kept)))
        out.extend(emb.vocab.get(w, OOV_ROW) for w in kept)
    return np.array(out, dtype=np.int64)


def length_limits(arg1_lengths, arg2_lengths, percentile=99.5):
    """Per-argument caps at the given percentile of observed lengths."""
    caps = []
    for lengths in (arg1_lengths, arg2_lengths):
        lengths = np.asarray(list(lengths), dtype=float)
        caps.append(max(1, int(math.ceil(np.percentile(lengths, percentile)))) if lengths.size else 1)
    return tuple(caps)


# --- model ----------------------------------------------------------------------------


@dataclass(eq=False)
class ConvNet:
    classes: tuple
    embedding: EmbeddingMatrix
    widths: tuple
    filters: dict  # width -> (n_f, w, d)
    biases: dict  # width -> (n_f,)
    out_w: np.ndarray  # (K, |W| * n_f)
    out_b: np.ndarray  # (K,)
    limits: tuple = DEFAULT_LIMITS
    alpha: float = 1.0
    dropout: float = 0.5

    @classmethod
    def init(cls, classes, embedding, n_filters=128, widths=(3, 4, 5), limits=DEFAULT_LIMITS,
             alpha=1.0, dropout=0.5, seed=0):
        if len(classes) < 2:
            raise ValueError("a classifier needs at least two classes")
        rng = np.random.default_rng(seed)
        d = embedding.dim
        filters, biases = {}, {}
        for w in widths:
            filters[w] = rng.normal(0.0, math.sqrt(2.0 / (w * d)), size=(n_filters, w, d))
            biases[w] = np.zeros(n_filters)
        fan_in = len(widths) * n_filters
        bound = math.sqrt(6.0 / (fan_in + len(classes)))
        out_w = rng.uniform(-bound, bound, size=(len(classes), fan_in))
        emb = EmbeddingMatrix(dict(embedding.vocab), embedding.vectors.copy(), embedding.trainable)
        return cls(tuple(classes), emb, tuple(widths), filters, biases, out_w, np.zeros(len(classes)),
                   tuple(limits), alpha, dropout)

    @property
    def input_length(self):
        return int(sum(self.limits))

    @property
    def n_filters(self):
        return self.filters[self.widths[0]].shape[0]

    def params(self):
        p = {"emb": self.embedding.vectors}
        for w in self.widths:
            p[f"h{w}"] = self.filters[w]
            p[f"b{w}"] = self.biases[w]
        p["W"] = self.out_w
        p["c"] = self.out_b
        return p

    def copy(self):
        return copy.deepcopy(self)

    def encode(self, arg1_words, arg2_words):
        return build_input(arg1_words, arg2_words, self.limits, self.embedding)


@dataclass
class Cache:
    idx: np.ndarray
    q: np.ndarray
    argmax: dict
    zmax: dict
    u: np.ndarray
    mask: np.ndarray | None
    u_drop: np.ndarray
    probs: np.ndarray


def forward_batch(model, idx, train=False, rng=None):
    idx = np.atleast_2d(np.asarray(idx, dtype=np.int64))
    if idx.shape[1] != model.input_length:
        raise ValueError(f"input length {idx.shape[1]} != model input length {model.input_length}")
    q = model.embedding.vectors[idx]  # (B, l, d)
    b, l, d = q.shape
    pooled, argmax, zmax = [], {}, {}
    for w in model.widths:
        h = model.filters[w]
        nf = h.shape[0]
        win = sliding_window_view(q, w, axis=1)  # (B, n, d, w)
        n = l - w + 1
        flat = np.ascontiguousarray(win.transpose(0, 1, 3, 2)).reshape(b * n, w * d)
        z = (flat @ h.reshape(nf, w * d).T).reshape(b, n, nf) + model.biases[w]
        c = elu(z, model.alpha)
        am = np.argmax(c, axis=1)  # (B, nf)
        argmax[w] = am
        zmax[w] = np.take_along_axis(z, am[:, None, :], axis=1)[:, 0, :]
        pooled.append(np.take_along_axis(c, am[:, None, :], axis=1)[:, 0, :])
    u = np.concatenate(pooled, axis=1)
    mask = None
    u_drop = u
    if train and model.dropout > 0:
        if rng is None:
            raise ValueError("train-mode dropout needs an rng")
        keep = 1.0 - model.dropout
        mask = (rng.random(u.shape) < keep) / keep
        u_drop = u * mask
    probs = softmax(u_drop @ model.out_w.T + model.out_b)
    return probs, Cache(idx, q, argmax, zmax, u, mask, u_drop, probs)


def forward(model, x, mode="eval", rng=None):
    probs, cache = forward_batch(model, x, train=(mode == "train"), rng=rng)
    return probs[0], cache


def cross_entropy(probs, y):
    p = probs[np.arange(len(y)), y]
    return float(-np.log(np.maximum(p, 1e-300)).mean())


def backward(model, cache, y):
    """Gradients of the mean cross-entropy; also returns the touched embedding rows."""
    b = len(y)
    dlogits = cache.probs.copy()
    dlogits[np.arange(b), y] -= 1.0
    dlogits /= b
    grads = {"W": dlogits.T @ cache.u_drop, "c": dlogits.sum(axis=0)}
    du = dlogits @ model.out_w
    if cache.mask is not None:
        du = du * cache.mask
    dq = np.zeros_like(cache.q)
    nf = model.n_filters
    for j, w in enumerate(model.widths):
        g = du[:, j * nf : (j + 1) * nf]
        gpre = g * elu_grad(cache.zmax[w], model.alpha)
        grads[f"b{w}"] = gpre.sum(axis=0)
        dh = np.zeros_like(model.filters[w])
        for i in range(b):
            kernels.pool_backward(cache.q[i], model.filters[w], cache.argmax[w][i], gpre[i], dh, dq[i])
        grads[f"h{w}"] = dh
    demb = np.zeros_like(model.embedding.vectors)
    d = dq.shape[2]
    kernels.scatter_add_rows(demb, cache.idx.ravel(), dq.reshape(-1, d))
    demb[PAD_ROW] = 0.0
    grads["emb"] = demb
    rows = np.unique(cache.idx)
    rows = rows[rows != PAD_ROW]
    return grads, rows


class Adam:
    def __init__(self, step=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.step = step
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = {}
        self.v = {}
        self.t = 0

    def update(self, params, grads, sparse_rows=None):
        """One bias-corrected step. ``sparse_rows`` maps a parameter name to the
        rows the batch touched; only those rows (and their moments) move."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        sparse_rows = sparse_rows or {}
        for name, p in params.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m, v = self.m[name], self.v[name]
            rows = sparse_rows.get(name)
            if rows is not None:
                gr = g[rows]
                m[rows] = self.beta1 * m[rows] + (1 - self.beta1) * gr
                v[rows] = self.beta2 * v[rows] + (1 - self.beta2) * gr * gr
                p[rows] -= self.step * (m[rows] / bc1) / (np.sqrt(v[rows] / bc2) + self.epsilon)
            else:
                m *= self.beta1
                m += (1 - self.beta1) * g
                v *= self.beta2
                v += (1 - self.beta2) * g * g
                p -= self.step * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)


def loss_and_grads(model, idx, y, train=False, rng=None):
    y = np.asarray(y, dtype=np.int64)
    probs, cache = forward_batch(model, idx, train=train, rng=rng)
    grads, rows = backward(model, cache, y)
    return cross_entropy(probs, y), grads, rows


def train_step(model, batch, adam, rng=None):
    """One Adam update on a batch of ``(indices, class_id)``; returns the mean loss."""
    if not batch:
        raise ValueError("empty batch")
    idx = np.stack([x for x, _ in batch])
    y = np.array([c for _, c in batch], dtype=np.int64)
    train = model.dropout > 0
    if train and rng is None:
        rng = np.random.default_rng(0)
    loss, grads, rows = loss_and_grads(model, idx, y, train=train, rng=rng)
    adam.update(model.params(), grads, sparse_rows={"emb": rows} if model.embedding.trainable else None)
    return loss


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 50
    epochs: int = 25
    step: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    early_stop_patience: int = 5

    def __post_init__(self):
        if self.batch_size <= 0 or self.epochs <= 0 or self.step <= 0 or self.epsilon <= 0:
            raise ValueError("batch_size, epochs, step and epsilon must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.early_stop_patience < 0:
            raise ValueError("patience must be >= 0")


@dataclass
class History:
    train_loss: list = field(default_factory=list)
    dev_loss: list = field(default_factory=list)
    best_epoch: int = -1


def evaluate_loss(model, data, batch_size=256):
    total = 0.0
    for start in range(0, len(data), batch_size):
        chunk = data[start : start + batch_size]
        probs, _ = forward_batch(model, np.stack([x for x, _ in chunk]))
        y = np.array([c for _, c in chunk], dtype=np.int64)
        total += cross_entropy(probs, y) * len(chunk)
    return total / len(data)


def predict_proba(model, data_idx, batch_size=256):
    data_idx = np.atleast_2d(np.asarray(data_idx, dtype=np.int64))
    out = []
    for start in range(0, len(data_idx), batch_size):
        out.append(forward_batch(model, data_idx[start : start + batch_size])[0])
    return np.concatenate(out) if out else np.zeros((0, len(model.classes)))


def accuracy(model, data):
    probs = predict_proba(model, np.stack([x for x, _ in data]))
    return float((probs.argmax(axis=1) == np.array([c for _, c in data])).mean())


def train(model, dataset, dev_set=None, config=None):
    """Mini-batch training with early stopping; returns ``(best_model, history)``.

    The dev loss decides when to stop and which epoch's parameters to keep;
    with no dev set the eval-mode training loss stands in.
    """
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    config = config or TrainConfig()
    rng = np.random.default_rng(config.seed)
    adam = Adam(config.step, config.beta1, config.beta2, config.epsilon)
    monitor = dev_set if dev_set else dataset
    history = History()
    best, best_loss, bad = model.copy(), float("inf"), 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(dataset))
        losses = []
        for start in range(0, len(dataset), config.batch_size):
            batch = [dataset[i] for i in order[start : start + config.batch_size]]
            losses.append(train_step(model, batch, adam, rng) * len(batch))
        history.train_loss.append(sum(losses) / len(dataset))
        dev_loss = evaluate_loss(model, monitor)
        history.dev_loss.append(dev_loss)
        if dev_loss < best_loss:
            best, best_loss, bad = model.copy(), dev_loss, 0
            history.best_epoch = epoch
        else:
            bad += 1
        if bad >= config.early_stop_patience:
            break
    return best, history


# --- serialization ----------------------------------------------------------------


def _tensor_names(model):
    return list(model.params())


def save(model, path):
    """Binary container: magic, u32 manifest length, JSON manifest, f32 LE tensors."""
    params = model.params()
    tensors, blobs, offset = [], [], 0
    for name in _tensor_names(model):
        arr = np.ascontiguousarray(params[name], dtype="<f4")
        raw = arr.tobytes()
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    manifest = {
        "version": VERSION,
        "classes": list(model.classes),
        "widths": list(model.widths),
        "limits": list(model.limits),
        "alpha": model.alpha,
        "dropout": model.dropout,
        "trainable": model.embedding.trainable,
        "vocab": model.embedding.words(),
        "tensors": tensors,
    }
    head = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        for raw in blobs:
            fh.write(raw)


def load(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"{path}: not a ConvNet model file")
    (n,) = struct.unpack_from("<I", data, len(MAGIC))
    start = len(MAGIC) + 4
    manifest = json.loads(data[start : start + n].decode("utf-8"))
    if manifest.get("version") != VERSION:
        raise ModelFormatError(f"{path}: unsupported ConvNet version {manifest.get('version')}")
    body = data[start + n :]
    arrays = {}
    for t in manifest["tensors"]:
        raw = body[t["offset"] : t["offset"] + t["nbytes"]]
        if len(raw) != t["nbytes"]:
            raise ModelFormatError(f"{path}: tensor {t['name']} truncated")
        arrays[t["name"]] = np.frombuffer(raw, dtype="<f4").astype(float).reshape(t["shape"])
    widths = tuple(manifest["widths"])
    vocab = {w: i for i, w in enumerate(manifest["vocab"])}
    if vocab.get(PAD) != PAD_ROW:
        raise ModelFormatError(f"{path}: embedding vocabulary lacks the padding row")
    emb = EmbeddingMatrix(vocab, arrays["emb"], manifest.get("trainable", True))
    return ConvNet(
        tuple(manifest["classes"]),
        emb,
        widths,
        {w: arrays[f"h{w}"] for w in widths},
        {w: arrays[f"b{w}"] for w in widths},
        arrays["W"],
        arrays["c"],
        tuple(manifest["limits"]),
        float(manifest["alpha"]),
        float(manifest["dropout"]),
    )
