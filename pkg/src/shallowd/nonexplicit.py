"""Non-explicit relations between adjacent sentences: a binary ConvNet keeps
pairs that hold a relation and a multiclass ConvNet names its sense."""

from __future__ import annotations

from dataclasses import dataclass

from . import neural
from .corpus import Relation, RelType

NO_RELATION = "no-relation"
RELATION = "relation"
BINARY_CLASSES = (NO_RELATION, RELATION)
ENTREL = "EntRel"
TRAILING_PUNCT = frozenset({".", ",", ":", ";", "''", "``"})
THRESHOLD = 0.5


@dataclass(frozen=True)
class CandidatePair:
    doc_id: str
    sent1: int
    sent2: int
    arg1: tuple  # doc token indices
    arg2: tuple


def trim_trailing_punct(tokens):
    """Drop discourse punctuation from the end of a token list."""
    end = len(tokens)
    while end > 0 and tokens[end - 1].pos in TRAILING_PUNCT:
        end -= 1
    return tokens[:end]


def _covered_pairs(doc, explicit_rels):
    covered = set()
    for rel in explicit_rels:
        toks = rel.arg1.token_refs + rel.arg2.token_refs + rel.connective.token_refs
        sents = {doc.tokens[i].sent_index for i in toks}
        for s in sents:
            if s + 1 in sents:
                covered.add((s, s + 1))
    return covered


def candidate_pairs(doc, explicit_rels=(), cross_paragraph=False):
    """Adjacent sentence pairs (same paragraph unless ``cross_paragraph``)
    that no single explicit relation spans."""
    covered = _covered_pairs(doc, explicit_rels)
    out = []
    for i in range(len(doc.sentences) - 1):
        s1, s2 = doc.sentences[i], doc.sentences[i + 1]
        if not cross_paragraph and s1.paragraph_id != s2.paragraph_id:
            continue
        if (i, i + 1) in covered:
            continue
        a1 = trim_trailing_punct(s1.tokens)
        a2 = trim_trailing_punct(s2.tokens)
        if not a1 or not a2:
            continue
        out.append(
            CandidatePair(doc.doc_id, i, i + 1, tuple(t.doc_tok_index for t in a1),
                          tuple(t.doc_tok_index for t in a2))
        )
    return out


def pair_words(pair, doc):
    return [doc.tokens[i].surface for i in pair.arg1], [doc.tokens[i].surface for i in pair.arg2]


def encode_pair(pair, doc, net):
    return net.encode(*pair_words(pair, doc))


def relation_probability(pair, net, doc):
    probs, _ = neural.forward(net, encode_pair(pair, doc, net))
    return float(probs[net.classes.index(RELATION)])


def detect_relation(pair, net, doc):
    return relation_probability(pair, net, doc) >= THRESHOLD


def label_nonexplicit(pair, net, doc):
    probs, _ = neural.forward(net, encode_pair(pair, doc, net))
    return net.classes[int(probs.argmax())]


@dataclass
class NonExplicitModels:
    binary: object
    multiclass: object


def annotate_nonexplicit(doc, explicit_rels, nets, start_id=0, cross_paragraph=False):
    rels = []
    for pair in candidate_pairs(doc, explicit_rels, cross_paragraph):
        if not detect_relation(pair, nets.binary, doc):
            continue
        label = label_nonexplicit(pair, nets.multiclass, doc)
        rel_type = RelType.ENTREL if label == ENTREL else RelType.IMPLICIT
        rels.append(
            Relation(
                start_id + len(rels), doc.doc_id, rel_type, doc.span(()),
                doc.span(pair.arg1), doc.span(pair.arg2), (label,),
            )
        )
    return rels
