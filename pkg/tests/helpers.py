"""Builders shared by the test modules."""

import os
from importlib import resources

from shallowd.corpus import Document, Relation, RelType, Sentence, Token
from shallowd.syntax import parse_bracketed

TOY_DIR = os.fspath(resources.files("shallowd").joinpath("data/toy"))
TOY_PARSES = os.path.join(TOY_DIR, "parses.json")
TOY_RELATIONS = os.path.join(TOY_DIR, "relations.json")
TOY_RAW = os.path.join(TOY_DIR, "raw")
TOY_CONFIG = os.path.join(TOY_DIR, "config.toml")
GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


def make_doc(trees, doc_id="d0", paragraphs=None):
    """Document from bracketed trees; words are the tree leaves and the raw
    text puts single spaces between tokens and a blank line between paragraphs."""
    paragraphs = paragraphs or [0] * len(trees)
    raw, sents, k = "", [], 0
    for s_idx, (tree_str, para) in enumerate(zip(trees, paragraphs)):
        tree = parse_bracketed(tree_str)
        if s_idx:
            raw += "\n\n" if para != paragraphs[s_idx - 1] else " "
        toks = []
        for t_idx, leaf in enumerate(tree.leaves()):
            if t_idx:
                raw += " "
            begin = len(raw)
            raw += leaf.word
            toks.append(Token(leaf.word, leaf.label, begin, len(raw), s_idx, t_idx, k))
            k += 1
        sents.append(Sentence(tuple(toks), tree, para))
    return Document(doc_id, tuple(sents), raw)


def rel(doc, rid, rtype, arg1, arg2, sense, conn=()):
    return Relation(rid, doc.doc_id, RelType(rtype), doc.span(conn), doc.span(arg1), doc.span(arg2), (sense,))


ACCEPTANCE = []  # (criterion, verdict, detail), filled by test_acceptance


def record(criterion, ok, detail):
    """Log one criterion; ``ok=None`` marks it skipped."""
    verdict = "SKIP" if ok is None else "PASS" if ok else "FAIL"
    ACCEPTANCE.append((criterion, verdict, detail))
    print(f"{verdict} {criterion}: {detail}")
    return ok
