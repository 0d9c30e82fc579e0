import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force, crf_fd_check, random_crf, random_sequence, rule_corpus
from shallowd import crf
from shallowd.crf import BIAS, CrfConfig, CrfModel, CrfSequence


def zero_model(labels=("A", "B", "C"), features=()):
    return CrfModel.zeros(labels, features)


# --- closed forms -------------------------------------------------------------------


def test_zero_weights_uniform():
    m = zero_model()
    marg = crf.forward_backward(m, CrfSequence(((), ())))
    assert marg.log_z == pytest.approx(math.log(9), abs=1e-12)
    assert np.allclose(marg.node_marginals, 1 / 3, atol=1e-12)
    assert np.allclose(marg.edge_marginals, 1 / 9, atol=1e-12)


def test_single_position_softmax():
    m = zero_model(features=["x"])
    m.emission[m.vocab["x"], 0] = 1.0
    marg = crf.forward_backward(m, CrfSequence((("x",),)))
    e = math.e
    assert marg.node_marginals[0, 0] == pytest.approx(e / (e + 2), abs=1e-12)
    assert marg.edge_marginals.shape == (0, 3, 3)


def test_bias_feature_always_present():
    seq = CrfSequence(((), ("a", "a")))
    assert all(BIAS in bag for bag in seq.observations)
    assert seq.observations[1] == ("a", BIAS)
    with pytest.raises(ValueError):
        CrfSequence(())


def test_viterbi_tie_break_first_label():
    labels, _ = crf.viterbi(zero_model(), CrfSequence(((), (), ())))
    assert labels == ["A", "A", "A"]


def test_viterbi_follows_forcing_emissions():
    m = zero_model(("Arg1", "Arg2", "Non"), ["p1", "p2", "pn"])
    for f, y in (("p1", 0), ("pn", 2), ("p2", 1)):
        m.emission[m.vocab[f], y] = 5.0
    labels, score = crf.viterbi(m, CrfSequence((("p1",), ("pn",), ("p2",))))
    assert labels == ["Arg1", "Non", "Arg2"]
    assert score == pytest.approx(15.0)


def test_zero_model_nll_is_log_labels():
    nll, _ = crf.nll_and_gradient(zero_model(), CrfSequence(((),)), ["B"])
    assert nll == pytest.approx(math.log(3), abs=1e-12)


def test_saturated_model_has_near_zero_loss():
    m = zero_model(features=["a", "b", "c"])
    for i, f in enumerate("abc"):
        m.emission[m.vocab[f], i] = 50.0
    seq = CrfSequence((("a",), ("c",), ("b",), ("a",)))
    nll, grads = crf.nll_and_gradient(m, seq, ["A", "C", "B", "A"])
    assert nll < 1e-12
    assert math.sqrt(sum(float((g * g).sum()) for g in grads.values())) < 1e-6


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        crf.nll_and_gradient(zero_model(), CrfSequence(((),)), ["A", "B"])


def test_penalty_term_added():
    m = zero_model(features=["a"])
    m.transition[:] = 1.0
    seq = CrfSequence(((),))
    base, _ = crf.nll_and_gradient(m, seq, ["A"], lam=0.0)
    pen, grads = crf.nll_and_gradient(m, seq, ["A"], lam=0.5)
    assert pen - base == pytest.approx(0.5 * 0.5 * 9)
    assert np.allclose(grads["transition"], 0.5)


# --- brute-force oracle ---------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(2, 3))
def test_inference_matches_enumeration(seed, length, n_labels):
    rng = np.random.default_rng(seed)
    model = random_crf(rng, n_labels)
    seq = random_sequence(rng, length)
    log_z, node, edge, best, best_score = brute_force(model, seq)
    marg = crf.forward_backward(model, seq)
    assert abs(marg.log_z - log_z) < 1e-8
    assert np.abs(marg.node_marginals - node).max() < 1e-8
    assert marg.edge_marginals.shape == edge.shape
    assert np.all(np.abs(marg.edge_marginals - edge) < 1e-8)
    assert np.allclose(marg.node_marginals.sum(axis=1), 1.0, atol=1e-9)
    labels, score = crf.viterbi(model, seq)
    assert labels == best
    assert abs(score - best_score) < 1e-8
    assert crf.sequence_score(model, seq, labels) == pytest.approx(score, abs=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    model = random_crf(rng, int(rng.integers(2, 4)))
    seq = random_sequence(rng, int(rng.integers(1, 6)))
    gold = [model.labels[i] for i in rng.integers(0, model.n_labels, size=len(seq))]
    assert crf_fd_check(model, seq, gold, lam=0.1) < 1e-4


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5), st.floats(-20, 20))
def test_constant_shift_at_one_position_keeps_argmax(seed, length, c):
    rng = np.random.default_rng(seed)
    model = random_crf(rng, 3)
    seq = random_sequence(rng, length)
    before, score = crf.viterbi(model, seq)
    t = int(rng.integers(0, length))
    shifted = CrfModel.zeros(model.labels, list(model.vocab) + ["shift"])
    for f, i in model.vocab.items():
        shifted.emission[shifted.vocab[f]] = model.emission[i]
    shifted.emission[shifted.vocab["shift"]] = c
    for name in ("transition", "start", "end"):
        shifted.params()[name][...] = model.params()[name]
    bags = list(seq.observations)
    bags[t] = bags[t] + ("shift",)
    after, score2 = crf.viterbi(shifted, CrfSequence(tuple(bags)))
    assert after == before
    assert score2 == pytest.approx(score + c, abs=1e-9)


# --- training ----------------------------------------------------------------------------


def test_single_sequence_is_learned():
    seq = CrfSequence((("w=the",), ("w=cat",), ("w=sat",)))
    model = crf.train_crf([(seq, ["Non", "Arg1", "Arg2"])], CrfConfig(lam=0.0, epochs=50))
    assert crf.viterbi(model, seq)[0] == ["Non", "Arg1", "Arg2"]


def test_rule_corpus_reaches_high_accuracy():
    data = rule_corpus(np.random.default_rng(3))
    model = crf.train_crf(data, CrfConfig(lam=0.01, epochs=30))
    assert crf.token_accuracy(model, data) >= 0.95
    assert model.history[-1] <= model.history[0]


def test_huge_penalty_shrinks_to_uniform():
    data = rule_corpus(np.random.default_rng(4), n=20)
    model = crf.train_crf(data, CrfConfig(lam=1e6, epochs=5))
    assert max(float(np.abs(p).max()) for p in model.params().values()) < 1e-5
    seq, gold = data[0]
    nll, _ = crf.nll_and_gradient(model, seq, gold)
    assert nll == pytest.approx(len(seq) * math.log(model.n_labels), abs=1e-3)


def test_training_deterministic_given_seed():
    data = rule_corpus(np.random.default_rng(5), n=40)
    a = crf.train_crf(data, CrfConfig(epochs=5, seed=9))
    b = crf.train_crf(data, CrfConfig(epochs=5, seed=9))
    assert a.equals(b) and a.history == b.history
    c = crf.train_crf(data, CrfConfig(epochs=5, seed=10))
    assert not a.equals(c)


def test_empty_training_set_rejected():
    with pytest.raises(ValueError):
        crf.train_crf([])


def test_unseen_features_are_dropped():
    data = rule_corpus(np.random.default_rng(6), n=10)
    model = crf.train_crf(data, CrfConfig(epochs=2))
    seq = CrfSequence((("kind=x", "never-seen"),))
    assert [len(r) for r in model.encode(seq)] == [2]
    crf.viterbi(model, seq)


# --- serialization --------------------------------------------------------------------------


def test_json_round_trip(tmp_path):
    model = crf.train_crf(rule_corpus(np.random.default_rng(7), n=10), CrfConfig(epochs=2))
    crf.save(model, tmp_path / "m.json")
    again = crf.load(tmp_path / "m.json")
    assert again.equals(model)
    assert crf.dumps(again) == crf.dumps(model)


def test_bad_model_file_rejected():
    from shallowd.errors import ModelFormatError

    with pytest.raises(ModelFormatError):
        crf.loads('{"format": "something-else", "version": 1}')
