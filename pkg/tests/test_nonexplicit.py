import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_doc, rel
from shallowd import neural
from shallowd import nonexplicit as nx
from shallowd.corpus import RelType
from shallowd.embeddings import random_embeddings
from shallowd.neural import ConvNet
from shallowd.nonexplicit import BINARY_CLASSES, ENTREL, NonExplicitModels

S1 = "(S (NP (PRP It)) (VP (VBD rained)) (. .))"
S2 = "(S (NP (PRP We)) (VP (VBD stayed) (ADVP (RB inside))) (. .))"
S3 = "(S (NP (DT The) (NN roof)) (VP (VBD leaked)) (. .))"
WORDS = ["it", "rained", "we", "stayed", "inside", "the", "roof", "leaked", "."]


def net(classes, seed=0, zero=False):
    emb = random_embeddings(WORDS, 4, seed=seed)
    model = ConvNet.init(classes, emb, n_filters=3, widths=(2,), limits=(4, 4), dropout=0.0, seed=seed)
    if zero:
        model.out_w[:] = 0.0
        model.out_b[:] = 0.0
    return model


def saturate(model, x, target, steps=200):
    adam = neural.Adam(step=0.05)
    for _ in range(steps):
        neural.train_step(model, [(x, target)], adam)
    return model


def test_three_sentences_give_two_pairs():
    doc = make_doc([S1, S2, S3])
    pairs = nx.candidate_pairs(doc, [])
    assert [(p.sent1, p.sent2) for p in pairs] == [(0, 1), (1, 2)]
    # trailing period trimmed from both sides
    assert pairs[0].arg1 == (0, 1) and pairs[0].arg2 == (3, 4, 5)


def test_paragraph_boundary_respected_unless_flag():
    doc = make_doc([S1, S2, S3], paragraphs=[0, 0, 1])
    assert [(p.sent1, p.sent2) for p in nx.candidate_pairs(doc, [])] == [(0, 1)]
    both = nx.candidate_pairs(doc, [], cross_paragraph=True)
    assert [(p.sent1, p.sent2) for p in both] == [(0, 1), (1, 2)]


def test_pair_covered_by_explicit_is_excluded():
    doc = make_doc([S1, S2, S3])
    explicit = rel(doc, 0, "Explicit", [0, 1], [3, 4, 5], "Expansion.Conjunction", conn=[6])
    assert [(p.sent1, p.sent2) for p in nx.candidate_pairs(doc, [explicit])] == [(1, 2)]
    within = rel(doc, 1, "Explicit", [3], [5], "Expansion.Conjunction", conn=[4])
    assert len(nx.candidate_pairs(doc, [within])) == 2


PUNCT = st.sampled_from([".", ",", ":", ";", "''", "``"])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.one_of(PUNCT, st.just("NN")), min_size=0, max_size=8))
def test_trailing_trim_is_idempotent(tags):
    class T:
        def __init__(self, pos):
            self.pos = pos

    toks = [T(p) for p in tags]
    once = nx.trim_trailing_punct(toks)
    assert nx.trim_trailing_punct(once) == once
    assert not once or once[-1].pos not in nx.TRAILING_PUNCT


def test_zero_weight_nets_tie_rules():
    doc = make_doc([S1, S2])
    (pair,) = nx.candidate_pairs(doc, [])
    binary = net(BINARY_CLASSES, zero=True)
    assert nx.relation_probability(pair, binary, doc) == pytest.approx(0.5)
    assert nx.detect_relation(pair, binary, doc) is True
    multi = net(("Comparison.Contrast", ENTREL, "Expansion.Conjunction"), zero=True)
    assert nx.label_nonexplicit(pair, multi, doc) == "Comparison.Contrast"


@pytest.mark.parametrize("target,expected", [(1, True), (0, False)])
def test_saturated_binary_net(target, expected):
    doc = make_doc([S1, S2])
    (pair,) = nx.candidate_pairs(doc, [])
    binary = net(BINARY_CLASSES, seed=1)
    saturate(binary, nx.encode_pair(pair, doc, binary), target)
    assert nx.detect_relation(pair, binary, doc) is expected


@pytest.mark.parametrize("label", [ENTREL, "Expansion.Conjunction"])
def test_saturated_multiclass_net(label):
    doc = make_doc([S1, S2])
    (pair,) = nx.candidate_pairs(doc, [])
    classes = ("Comparison.Contrast", ENTREL, "Expansion.Conjunction")
    multi = net(classes, seed=2)
    saturate(multi, nx.encode_pair(pair, doc, multi), classes.index(label))
    assert nx.label_nonexplicit(pair, multi, doc) == label


def _fixed_nets(label):
    classes = ("Comparison.Contrast", ENTREL, "Expansion.Conjunction")
    multi = net(classes, zero=True)
    multi.out_b[classes.index(label)] = 5.0
    return NonExplicitModels(net(BINARY_CLASSES, zero=True), multi)


def test_annotate_maps_labels_to_types():
    doc = make_doc([S1, S2, S3])
    rels = nx.annotate_nonexplicit(doc, [], _fixed_nets(ENTREL), start_id=3)
    assert [r.relation_id for r in rels] == [3, 4]
    assert all(r.rel_type is RelType.ENTREL and r.senses == (ENTREL,) for r in rels)
    rels = nx.annotate_nonexplicit(doc, [], _fixed_nets("Expansion.Conjunction"))
    assert all(r.rel_type is RelType.IMPLICIT and r.senses == ("Expansion.Conjunction",) for r in rels)
    for r in rels:
        assert r.connective.token_refs == ()
        s1 = {doc.tokens[i].sent_index for i in r.arg1.token_refs}
        s2 = {doc.tokens[i].sent_index for i in r.arg2.token_refs}
        assert len(s1) == len(s2) == 1 and s2.pop() == s1.pop() + 1


def test_rejecting_binary_net_gives_nothing():
    doc = make_doc([S1, S2, S3])
    nets = _fixed_nets(ENTREL)
    nets.binary.out_b[:] = [3.0, -3.0]
    assert nx.annotate_nonexplicit(doc, [], nets) == []
