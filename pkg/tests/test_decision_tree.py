import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shallowd import decision_tree as dt
from shallowd.decision_tree import ABSENT, C45Config, Instance, Leaf, Split


def I(label, **features):
    return Instance(features, label)


def entropy(labels):
    n = len(labels)
    return -sum(labels.count(c) / n * math.log2(labels.count(c) / n) for c in set(labels))


def oracle_gain_ratio(data, feature):
    """Textbook gain ratio over the categorical values of ``feature``."""
    labels = [d.label for d in data]
    groups = {}
    for d in data:
        groups.setdefault(str(d.features.get(feature, ABSENT)), []).append(d.label)
    n = len(data)
    split = -sum(len(g) / n * math.log2(len(g) / n) for g in groups.values())
    if split == 0:
        return 0.0
    gain = entropy(labels) - sum(len(g) / n * entropy(g) for g in groups.values())
    return max(gain, 0.0) / split


def training_accuracy(tree, data):
    return sum(dt.predict(tree, d)[0] == d.label for d in data) / len(data)


# --- gain ratio ---------------------------------------------------------------------


def test_gain_ratio_examples():
    same = [I("a", f="x"), I("a", f="y"), I("b", f="x"), I("b", f="y")]
    assert dt.gain_ratio(same, "f") == pytest.approx(0.0, abs=1e-12)
    ident = [I("a", f="a"), I("a", f="a"), I("b", f="b"), I("b", f="b")]
    assert dt.gain_ratio(ident, "f") == pytest.approx(1.0, abs=1e-12)
    const = [I("a", f="k"), I("b", f="k"), I("b", f="k")]
    assert dt.gain_ratio(const, "f") == 0.0


@st.composite
def datasets(draw, n_features=3, max_n=30):
    n = draw(st.integers(2, max_n))
    rows = []
    for _ in range(n):
        feats = {f"f{j}": draw(st.sampled_from("pqr")) for j in range(n_features)}
        rows.append(Instance(feats, draw(st.sampled_from("ab"))))
    return rows


@settings(max_examples=150, deadline=None)
@given(datasets())
def test_gain_ratio_matches_textbook_formula(data):
    for f in ("f0", "f1", "f2"):
        got = dt.gain_ratio(data, f)
        assert got >= 0.0
        assert got == pytest.approx(oracle_gain_ratio(data, f), abs=1e-9)


# --- training ---------------------------------------------------------------------------


def test_pure_data_gives_single_leaf():
    tree = dt.train_c45([I("a", f="x"), I("a", f="y")])
    assert isinstance(tree, Leaf) and tree.class_counts == {"a": 2}


def test_perfect_separator_is_chosen():
    data = [I("a", f="x", g="1"), I("a", f="x", g="2"), I("b", f="y", g="1"), I("b", f="y", g="2")]
    tree = dt.train_c45(data, C45Config(min_leaf=1, prune=False))
    assert isinstance(tree, Split) and tree.feature == "f"
    assert training_accuracy(tree, data) == 1.0


def test_xor_needs_depth_two():
    data = [I(str(a ^ b), x=str(a), y=str(b)) for a in (0, 1) for b in (0, 1)]
    tree = dt.train_c45(data, C45Config(min_leaf=1, prune=False))
    assert dt.depth_of(tree) == 2
    assert training_accuracy(tree, data) == 1.0


def test_numeric_feature_binary_threshold():
    data = [I("short", path_len=n) for n in (1, 2, 3)] + [I("long", path_len=n) for n in (6, 7, 8)]
    tree = dt.train_c45(data, C45Config(min_leaf=1, prune=False))
    assert tree.feature == "path_len" and tree.threshold == 4.5
    assert set(tree.branches) == {dt.LE, dt.GT}
    assert dt.predict(tree, {"path_len": 5})[0] == "long"
    assert dt.predict(tree, {"path_len": 4})[0] == "short"


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        dt.train_c45([])


def test_max_depth_limits_tree():
    data = [I(str(a ^ b), x=str(a), y=str(b)) for a in (0, 1) for b in (0, 1)]
    tree = dt.train_c45(data, C45Config(min_leaf=1, prune=False, max_depth=1))
    assert dt.depth_of(tree) <= 1


@st.composite
def conflict_free(draw):
    n = draw(st.integers(1, 40))
    seen = {}
    for _ in range(n):
        key = tuple(draw(st.sampled_from("pqrs")) for _ in range(4))
        seen.setdefault(key, draw(st.sampled_from("abc")))
    return [Instance({f"f{j}": v for j, v in enumerate(k)}, y) for k, y in seen.items()]


@settings(max_examples=150, deadline=None)
@given(conflict_free())
def test_full_training_accuracy_without_pruning(data):
    tree = dt.train_c45(data, C45Config(min_leaf=1, prune=False))
    assert training_accuracy(tree, data) == 1.0


@settings(max_examples=100, deadline=None)
@given(datasets())
def test_training_is_deterministic_and_serializable(data):
    a = dt.train_c45(data)
    b = dt.train_c45(list(data))
    assert dt.dumps(a) == dt.dumps(b)
    assert dt.loads(dt.dumps(a)) == a


@settings(max_examples=100, deadline=None)
@given(datasets(), st.dictionaries(st.sampled_from(["f0", "f1", "f9"]), st.sampled_from("pqrz")))
def test_distribution_sums_to_one(data, x):
    _, dist = dt.predict(dt.train_c45(data), x)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)


# --- prediction ---------------------------------------------------------------------------


def test_laplace_distribution_and_tie_break():
    label, dist = dt.predict(Leaf({"a": 3, "b": 1}), {})
    assert label == "a"
    assert dist == pytest.approx({"a": 4 / 6, "b": 2 / 6})
    assert dt.predict(Leaf({"b": 2, "a": 2}), {})[0] == "a"


def test_unseen_value_routes_to_default_branch():
    tree = Split("f", {"x": Leaf({"a": 5, "b": 0}), "y": Leaf({"a": 0, "b": 2})}, "x")
    assert dt.predict(tree, {"f": "never-seen"})[0] == "a"
    assert dt.predict(tree, {})[0] == "a"


def test_default_branch_is_largest():
    data = [I("a", f="x")] * 3 + [I("b", f="y")] * 2 + [I("c", f="z")] * 2
    tree = dt.train_c45(data, C45Config(min_leaf=1, prune=False))
    assert tree.default_value == "x"


# --- pruning --------------------------------------------------------------------------------


@pytest.mark.parametrize("n,u", [(6, 0.206), (9, 0.143), (1, 0.750)])
def test_pessimistic_bound_error_free_leaves(n, u):
    # with no errors the bound has the closed form 1 - CF ** (1 / n)
    assert dt.pessimistic_errors(n, 0, 0.25) / n == pytest.approx(u, abs=1e-3)
    assert dt.pessimistic_errors(n, 0, 0.25) / n == pytest.approx(1 - 0.25 ** (1 / n), abs=1e-12)


def binomial_upper(n, e, cf):
    """p at which P(X <= e | n, p) = cf, by bisection on the exact CDF."""
    lo, hi = e / n, 1.0
    for _ in range(200):
        mid = (lo + hi) / 2
        cdf = sum(math.comb(n, k) * mid ** k * (1 - mid) ** (n - k) for k in range(e + 1))
        lo, hi = (mid, hi) if cdf > cf else (lo, mid)
    return (lo + hi) / 2


@pytest.mark.parametrize("n,e", [(16, 1), (10, 3), (40, 7), (5, 4)])
def test_pessimistic_bound_is_exact_binomial_limit(n, e):
    assert dt.pessimistic_errors(n, e, 0.25) / n == pytest.approx(binomial_upper(n, e, 0.25), abs=1e-9)


def test_pruning_collapses_noise_split():
    rng = random.Random(0)
    data = [I("a" if rng.random() < 0.9 else "b", noise=str(rng.randrange(10))) for _ in range(60)]
    pruned = dt.train_c45(data, C45Config(min_leaf=2))
    unpruned = dt.train_c45(data, C45Config(min_leaf=2, prune=False))
    assert isinstance(pruned, Leaf)
    assert isinstance(unpruned, Split)


def test_file_round_trip(tmp_path):
    data = [I(str(a ^ b), x=str(a), y=str(b)) for a in (0, 1) for b in (0, 1)]
    tree = dt.train_c45(data, C45Config(min_leaf=1, prune=False))
    dt.save(tree, tmp_path / "t.json")
    assert dt.load(tmp_path / "t.json") == tree
