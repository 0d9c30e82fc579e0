"""C4.5-style decision trees over categorical features.

Categorical features split multiway, one branch per value seen at the node.
Integer-valued features split in two at the midpoint threshold with the best
gain ratio. Missing values are the ordinary category ``"<ABSENT>"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta

from .errors import ModelFormatError

ABSENT = "<ABSENT>"
LE = "<="
GT = ">"
FORMAT = "shallowd.c45"
VERSION = 1


@dataclass(frozen=True)
class Instance:
    features: dict
    label: str = None


@dataclass(frozen=True)
class C45Config:
    min_leaf: int = 2
    confidence: float = 0.25
    max_depth: int | None = None
    prune: bool = True

    def __post_init__(self):
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if not 0.0 < self.confidence <= 1.0:
            raise ValueError("confidence must lie in (0, 1]")


@dataclass(frozen=True)
class Leaf:
    class_counts: dict

    @property
    def size(self):
        return sum(self.class_counts.values())


@dataclass(frozen=True)
class Split:
    feature: str
    branches: dict
    default_value: str
    threshold: float | None = None

    @property
    def default_branch(self):
        return self.branches[self.default_value]


def _entropy(counts):
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n <= 0:
        return 0.0
    p = counts[counts > 0] / n
    return float(-(p * np.log2(p)).sum())


def _ratio_from_table(table):
    """Gain ratio of a (branch x class) count table."""
    n = table.sum()
    sizes = table.sum(axis=1)
    split_info = _entropy(sizes)
    if split_info <= 1e-12:
        return 0.0, 0.0
    cond = sum(sizes[v] / n * _entropy(table[v]) for v in range(table.shape[0]) if sizes[v])
    gain = max(_entropy(table.sum(axis=0)) - cond, 0.0)
    if gain < 1e-12:
        gain = 0.0
    return gain / split_info, split_info


def _is_number(v):
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


class _Columns:
    """Dataset encoded column-wise for fast counting."""

    def __init__(self, data):
        names = sorted({k for inst in data for k in inst.features})
        self.names = names
        self.classes = sorted({inst.label for inst in data})
        cls_index = {c: i for i, c in enumerate(self.classes)}
        self.y = np.array([cls_index[inst.label] for inst in data], dtype=np.int64)
        self.numeric = {}
        self.codes = {}
        self.values = {}
        for name in names:
            raw = [inst.features.get(name, ABSENT) for inst in data]
            if all(_is_number(v) for v in raw):
                self.numeric[name] = np.array(raw, dtype=float)
            else:
                strs = [str(v) for v in raw]
                vals = sorted(set(strs))
                index = {v: i for i, v in enumerate(vals)}
                self.values[name] = vals
                self.codes[name] = np.array([index[s] for s in strs], dtype=np.int64)

    def class_counts(self, idx):
        return np.bincount(self.y[idx], minlength=len(self.classes))


def _best_threshold(x, y, k, min_leaf):
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), ys] = 1.0
    left_cum = np.cumsum(onehot, axis=0)
    total = left_cum[-1]
    best = (0.0, None)
    for i in range(n - 1):
        if xs[i] == xs[i + 1]:
            continue
        nl = i + 1
        if nl < min_leaf or n - nl < min_leaf:
            continue
        table = np.vstack([left_cum[i], total - left_cum[i]])
        ratio, _ = _ratio_from_table(table)
        thr = (xs[i] + xs[i + 1]) / 2.0
        if best[1] is None or ratio > best[0] + 1e-12:
            best = (ratio, thr)
    return best


def gain_ratio(data, feature):
    """Gain ratio (bits) of splitting ``data`` on ``feature``."""
    if len(data) < 2:
        return 0.0
    cols = _Columns(data)
    k = len(cols.classes)
    idx = np.arange(len(data))
    if feature in cols.numeric:
        return _best_threshold(cols.numeric[feature], cols.y, k, 1)[0]
    if feature not in cols.codes:
        return 0.0
    return _categorical_ratio(cols, feature, idx, k)[0]


def _categorical_table(cols, feature, idx, k):
    codes = cols.codes[feature][idx]
    nv = len(cols.values[feature])
    flat = np.bincount(codes * k + cols.y[idx], minlength=nv * k).reshape(nv, k)
    return flat[flat.sum(axis=1) > 0]


def _categorical_ratio(cols, feature, idx, k):
    table = _categorical_table(cols, feature, idx, k)
    return _ratio_from_table(table)


def _leaf(cols, idx):
    counts = cols.class_counts(idx)
    return Leaf({c: int(n) for c, n in zip(cols.classes, counts)})


def _default_value(sizes):
    # largest branch; ties go to the lexicographically smallest value
    return min(sizes, key=lambda v: (-sizes[v], v))


def train_c45(data, config=None, **overrides):
    if not data:
        raise ValueError("cannot train a decision tree on an empty dataset")
    config = config or C45Config()
    if overrides:
        config = C45Config(**{**config.__dict__, **overrides})
    cols = _Columns(data)
    k = len(cols.classes)

    def build(idx, depth):
        counts = cols.class_counts(idx)
        n = len(idx)
        if (
            np.count_nonzero(counts) <= 1
            or (config.max_depth is not None and depth >= config.max_depth)
            or n < config.min_leaf
        ):
            return _leaf(cols, idx)
        best = None  # (ratio, split_info, name, threshold)
        for name in cols.names:
            if name in cols.numeric:
                ratio, thr = _best_threshold(cols.numeric[name][idx], cols.y[idx], k, config.min_leaf)
                if thr is None:
                    continue
                left = cols.numeric[name][idx] <= thr
                table = np.vstack([np.bincount(cols.y[idx][m], minlength=k) for m in (left, ~left)])
                split_info = _ratio_from_table(table)[1]
                cand = (ratio, split_info, name, thr)
            else:
                table = _categorical_table(cols, name, idx, k)
                if (table.sum(axis=1) >= config.min_leaf).sum() < 2:
                    continue
                ratio, split_info = _ratio_from_table(table)
                cand = (ratio, split_info, name, None)
            if best is None or _better(cand, best):
                best = cand
        if best is None:
            return _leaf(cols, idx)
        # A zero-gain split is still taken at an impure node: interactions such
        # as XOR are invisible one feature at a time. Pruning removes splits
        # that never pay off.
        _, _, name, thr = best
        branches = {}
        sizes = {}
        if thr is not None:
            x = cols.numeric[name][idx]
            for key, mask in ((LE, x <= thr), (GT, x > thr)):
                branches[key] = build(idx[mask], depth + 1)
                sizes[key] = int(mask.sum())
        else:
            codes = cols.codes[name][idx]
            for code in np.unique(codes):
                value = cols.values[name][code]
                sub = idx[codes == code]
                branches[value] = build(sub, depth + 1)
                sizes[value] = len(sub)
        return Split(name, branches, _default_value(sizes), thr)

    root = build(np.arange(len(data)), 0)
    if config.prune:
        root = _prune(root, config.confidence)[0]
    return root


def _better(cand, best):
    """Higher gain ratio wins, then larger split info, then feature name."""
    if cand[0] > best[0] + 1e-12:
        return True
    if cand[0] < best[0] - 1e-12:
        return False
    if cand[1] > best[1] + 1e-12:
        return True
    if cand[1] < best[1] - 1e-12:
        return False
    return cand[2] < best[2]


def pessimistic_errors(n, errors, confidence):
    """Upper confidence bound on the errors at a leaf of ``n`` cases."""
    if n <= 0:
        return 0.0
    if errors >= n:
        return float(n)
    upper = float(beta.ppf(1.0 - confidence, errors + 1, n - errors))
    return n * max(upper, errors / n)


def _merge_counts(node):
    if isinstance(node, Leaf):
        return dict(node.class_counts)
    total = {}
    for child in node.branches.values():
        for c, v in _merge_counts(child).items():
            total[c] = total.get(c, 0) + v
    return total


def _prune(node, confidence):
    """Bottom-up subtree replacement; returns (node, estimated errors)."""
    if isinstance(node, Leaf):
        n = node.size
        return node, pessimistic_errors(n, n - max(node.class_counts.values()), confidence)
    branches = {}
    subtree_err = 0.0
    for value, child in node.branches.items():
        pruned, err = _prune(child, confidence)
        branches[value] = pruned
        subtree_err += err
    counts = _merge_counts(node)
    n = sum(counts.values())
    leaf_err = pessimistic_errors(n, n - max(counts.values()), confidence)
    if leaf_err <= subtree_err + 0.1:
        return Leaf({c: counts[c] for c in sorted(counts)}), leaf_err
    return Split(node.feature, branches, node.default_value, node.threshold), subtree_err


def _route(node, features):
    while isinstance(node, Split):
        v = features.get(node.feature, ABSENT)
        if node.threshold is not None:
            key = (LE if v <= node.threshold else GT) if _is_number(v) else node.default_value
        else:
            key = str(v)
        node = node.branches.get(key, node.default_branch)
    return node


def predict(tree, x):
    """Return ``(label, distribution)`` for a feature map or :class:`Instance`."""
    features = x.features if isinstance(x, Instance) else x
    leaf = _route(tree, features)
    counts = leaf.class_counts
    label = min(counts, key=lambda c: (-counts[c], c))
    total = sum(counts.values()) + len(counts)
    dist = {c: (counts[c] + 1) / total for c in sorted(counts)}
    return label, dist


def depth_of(node):
    if isinstance(node, Leaf):
        return 0
    return 1 + max(depth_of(c) for c in node.branches.values())


def _node_to_json(node):
    if isinstance(node, Leaf):
        return {"kind": "leaf", "counts": {c: node.class_counts[c] for c in sorted(node.class_counts)}}
    return {
        "kind": "split",
        "feature": node.feature,
        "threshold": node.threshold,
        "default": node.default_value,
        "branches": {v: _node_to_json(node.branches[v]) for v in sorted(node.branches)},
    }


def _node_from_json(obj):
    kind = obj.get("kind")
    if kind == "leaf":
        return Leaf({c: int(v) for c, v in obj["counts"].items()})
    if kind == "split":
        branches = {v: _node_from_json(c) for v, c in obj["branches"].items()}
        if obj["default"] not in branches:
            raise ModelFormatError("split default names a missing branch")
        return Split(obj["feature"], branches, obj["default"], obj.get("threshold"))
    raise ModelFormatError(f"unknown tree node kind {kind!r}")


def dumps(tree):
    return json.dumps({"format": FORMAT, "version": VERSION, "root": _node_to_json(tree)}, sort_keys=True)


def loads(text):
    obj = json.loads(text)
    if obj.get("format") != FORMAT:
        raise ModelFormatError("not a decision tree model file")
    if obj.get("version") != VERSION:
        raise ModelFormatError(f"unsupported decision tree version {obj.get('version')}")
    return _node_from_json(obj["root"])


def save(tree, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(tree) + "\n")


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
