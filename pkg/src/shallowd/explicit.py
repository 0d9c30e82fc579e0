"""Explicit relations: connective detection, sense labeling, argument
segmentation over candidate constituents, and argument trimming."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from importlib import resources

from . import crf as crf_mod
from . import decision_tree as dt
from .corpus import Relation, RelType
from .syntax import (
    candidate_constituents,
    head_leaf,
    node_context,
    production_rule,
    self_cat,
    siblings,
    tree_path,
)

DISCOURSE = "discourse"
NON_DISCOURSE = "non-discourse"
ARG1 = "part-of-Arg1"
ARG2 = "part-of-Arg2"
NON = "Non"
SEGMENT_LABELS = (ARG1, ARG2, NON)
KEEP = "part-of-Argument"
DROP = "Not-part-of-Argument"
BOS = "<BOS>"
EOS = "<EOS>"
NULL = "null"
PUNCT_POS = frozenset({",", ".", ":", ";", "``", "''", "-LRB-", "-RRB-"})


# --- lexicon ------------------------------------------------------------------------


@dataclass(frozen=True)
class ConnectiveLexicon:
    patterns: tuple

    @classmethod
    def load(cls, path=None):
        if path is None:
            text = resources.files("shallowd").joinpath("data/connectives.txt").read_text("utf-8")
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        pats = []
        for line in text.splitlines():
            line = line.strip().lower()
            if line and not line.startswith("#"):
                pats.append(" ".join(line.split()))
        return cls(tuple(dict.fromkeys(pats)))

    def __len__(self):
        return len(self.patterns)

    def parts(self):
        """Each pattern as a tuple of word tuples; discontinuous ones have two."""
        return [
            (pat, tuple(tuple(p.split()) for p in pat.split("..")))
            for pat in self.patterns
        ]


@dataclass(frozen=True)
class ConnectiveCandidate:
    doc_id: str
    sent_index: int
    tok_indices: tuple  # within the sentence
    pattern: str
    discontinuous: bool

    def doc_indices(self, sentence):
        return tuple(sentence.tokens[i].doc_tok_index for i in self.tok_indices)

    def span(self, doc):
        return doc.span(self.doc_indices(doc.sentences[self.sent_index]))


def _find(words, seq, start):
    n = len(seq)
    for i in range(start, len(words) - n + 1):
        if tuple(words[i : i + n]) == seq:
            return i
    return -1


def match_connectives(sentence, lexicon, doc_id="", sent_index=None):
    """Lexicon matches in one sentence; the longest match claims its tokens."""
    words = [t.surface.lower() for t in sentence.tokens]
    if sent_index is None:
        sent_index = sentence.tokens[0].sent_index if sentence.tokens else 0
    found = []
    for pat, parts in lexicon.parts():
        first = parts[0]
        for i in range(len(words) - len(first) + 1):
            if tuple(words[i : i + len(first)]) != first:
                continue
            toks = list(range(i, i + len(first)))
            if len(parts) > 1:
                nxt = i + len(first)
                ok = True
                for part in parts[1:]:
                    j = _find(words, part, nxt)
                    if j < 0:
                        ok = False
                        break
                    toks.extend(range(j, j + len(part)))
                    nxt = j + len(part)
                if not ok:
                    continue
            found.append((tuple(toks), pat, len(parts) > 1))
    found.sort(key=lambda f: (-len(f[0]), f[0][0], f[1]))
    taken = set()
    out = []
    for toks, pat, disc in found:
        if taken.isdisjoint(toks):
            taken.update(toks)
            out.append(ConnectiveCandidate(doc_id, sent_index, toks, pat, disc))
    out.sort(key=lambda c: c.tok_indices[0])
    return out


def document_candidates(doc, lexicon):
    out = []
    for s_idx, sent in enumerate(doc.sentences):
        out.extend(match_connectives(sent, lexicon, doc.doc_id, s_idx))
    return out


# --- connective features ----------------------------------------------------------------


@dataclass(frozen=True)
class ConnectiveFeatures:
    conn_lower: str
    case_class: str
    selfcat_label: str
    selfcat_parent: str
    selfcat_left_sib: str
    selfcat_right_sib: str
    left_word: str
    left_pos: str
    right_word: str
    right_pos: str

    def as_dict(self):
        return asdict(self)


def case_class(words):
    text = " ".join(words)
    if text == text.lower():
        return "all-lowercase"
    if text[0].isupper() and text[1:] == text[1:].lower():
        return "initial-uppercase"
    return "other"


def _neighbour(toks, i, step):
    """Nearest word token beside position ``i``; punctuation is skipped."""
    i += step
    while 0 <= i < len(toks):
        if toks[i].pos not in PUNCT_POS:
            return toks[i]
        i += step
    return None


def extract_connective_features(cand, sentence):
    toks = sentence.tokens
    selfcat = self_cat(sentence.tree, cand.tok_indices)
    ctx = node_context(selfcat)
    first, last = cand.tok_indices[0], cand.tok_indices[-1]
    left = _neighbour(toks, first, -1)
    right = _neighbour(toks, last, 1)
    return ConnectiveFeatures(
        conn_lower=" ".join(toks[i].surface.lower() for i in cand.tok_indices),
        case_class=case_class([toks[i].surface for i in cand.tok_indices]),
        selfcat_label=ctx.label,
        selfcat_parent=ctx.parent_label,
        selfcat_left_sib=ctx.left_sibling_label,
        selfcat_right_sib=ctx.right_sibling_label,
        left_word=left.surface.lower() if left else BOS,
        left_pos=left.pos if left else BOS,
        right_word=right.surface.lower() if right else EOS,
        right_pos=right.pos if right else EOS,
    )


def detect_and_sense(doc, lexicon, detector, senser):
    out = []
    for cand in document_candidates(doc, lexicon):
        feats = extract_connective_features(cand, doc.sentences[cand.sent_index]).as_dict()
        if dt.predict(detector, feats)[0] != DISCOURSE:
            continue
        out.append((cand, dt.predict(senser, feats)[0]))
    return out


# --- argument segmentation ---------------------------------------------------------------


def argument_features(node, selfcat, conn_feats, sentence):
    """Indicator features of one candidate constituent for the CRF."""
    toks = sentence.tokens
    path = tree_path(node, selfcat)
    ctx = node_context(node)
    side = "left" if node.span[1] < selfcat.span[0] else "right"
    first, last = node.span
    head = toks[head_leaf(node).span[0]].surface.lower()
    feats = {f"conn.{k}={v}" for k, v in conn_feats.as_dict().items()}
    feats |= {
        "path=" + "/".join(n.label for n in path),
        f"path_len={len(path) - 1}",
        f"ctx.label={ctx.label}",
        f"ctx.parent={ctx.parent_label}",
        f"ctx.left={ctx.left_sibling_label}",
        f"ctx.right={ctx.right_sibling_label}",
        "ctx=" + "|".join((ctx.label, ctx.parent_label, ctx.left_sibling_label, ctx.right_sibling_label)),
        f"side={side}",
        f"side|conn={side}|{conn_feats.conn_lower}",
        "prod=" + production_rule(node),
        f"head={head}",
        f"first={toks[first].surface.lower()}",
        f"before={toks[first - 1].surface.lower() if first > 0 else BOS}",
        f"last={toks[last].surface.lower()}",
        f"after={toks[last + 1].surface.lower() if last + 1 < len(toks) else EOS}",
    }
    return feats


def segmentation_sequence(cand, sentence):
    """Candidate constituents and their CRF observation sequence (or None)."""
    selfcat = self_cat(sentence.tree, cand.tok_indices)
    nodes = candidate_constituents(sentence.tree, selfcat)
    if not nodes:
        return nodes, None
    conn_feats = extract_connective_features(cand, sentence)
    seq = crf_mod.CrfSequence([argument_features(n, selfcat, conn_feats, sentence) for n in nodes])
    return nodes, seq


@dataclass(frozen=True)
class Segmentation:
    arg1: tuple  # doc token indices
    arg2: tuple
    arg1_from_previous_sentence: bool


def merge_labels(cand, doc, nodes, labels):
    """Turn per-constituent labels into argument token sets, with fallbacks."""
    sent = doc.sentences[cand.sent_index]
    base = sent.tokens[0].doc_tok_index
    conn = set(cand.doc_indices(sent))
    arg1, arg2 = set(), set()
    for node, label in zip(nodes, labels):
        toks = {base + i for i in node.token_indices()}
        if label == ARG1:
            arg1 |= toks
        elif label == ARG2:
            arg2 |= toks
    arg1 -= conn
    arg2 -= conn | arg1
    sentence_toks = {t.doc_tok_index for t in sent.tokens}
    from_prev = False
    if not arg1 and cand.sent_index > 0:
        arg1 = {t.doc_tok_index for t in doc.sentences[cand.sent_index - 1].tokens}
        from_prev = True
    if not arg2:
        arg2 = sentence_toks - conn - arg1
    if not arg1:
        arg1 = sentence_toks - conn - arg2
    return Segmentation(tuple(sorted(arg1)), tuple(sorted(arg2)), from_prev)


def segment_arguments(cand, doc, model):
    sent = doc.sentences[cand.sent_index]
    nodes, seq = segmentation_sequence(cand, sent)
    labels = crf_mod.viterbi(model, seq)[0] if seq is not None else []
    return merge_labels(cand, doc, nodes, labels)


def project_gold(nodes, sentence, arg1, arg2):
    """Label a constituent part-of-ArgK when at least half its tokens are in
    gold ArgK; a tie between the two arguments goes to Non."""
    base = sentence.tokens[0].doc_tok_index
    out = []
    for node in nodes:
        toks = [base + i for i in node.token_indices()]
        f1 = sum(t in arg1 for t in toks) / len(toks)
        f2 = sum(t in arg2 for t in toks) / len(toks)
        if f1 >= 0.5 and f2 >= 0.5:
            out.append(NON)
        elif f1 >= 0.5:
            out.append(ARG1)
        elif f2 >= 0.5:
            out.append(ARG2)
        else:
            out.append(NON)
    return out


# --- trimming ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrimFeatures:
    head_or_text: str
    label_or_pos: str
    position: str
    parent_production: str
    grandparent_production: str
    arg_type: str
    left_sibling_label: str
    right_sibling_label: str

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TrimUnit:
    kind: str  # "constituent" or "token"
    tokens: tuple  # doc token indices
    features: TrimFeatures


def _position(tokens, span_first, span_last):
    if tokens[0] == span_first:
        return "begin"
    if tokens[-1] == span_last:
        return "end"
    return "inside"


def trim_units(token_refs, arg_type, doc):
    """Maximal constituents fully inside the span, then every token of it."""
    refs = sorted(token_refs)
    if not refs:
        return []
    inside = set(refs)
    first, last = refs[0], refs[-1]
    units = []
    by_sent = {}
    for i in refs:
        by_sent.setdefault(doc.tokens[i].sent_index, []).append(i)
    for s_idx in sorted(by_sent):
        sent = doc.sentences[s_idx]
        base = sent.tokens[0].doc_tok_index

        def covered(node):
            return all(base + i in inside for i in node.token_indices())

        for node in sent.tree.walk():
            if node.is_leaf or not covered(node):
                continue
            if node.parent is not None and covered(node.parent):
                continue
            toks = tuple(base + i for i in node.token_indices())
            left, right = siblings(node)
            head = sent.tokens[head_leaf(node).span[0]].surface.lower()
            feats = TrimFeatures(
                head, node.label, _position(toks, first, last),
                production_rule(node.parent) if node.parent is not None else NULL,
                production_rule(node.parent.parent)
                if node.parent is not None and node.parent.parent is not None else NULL,
                arg_type,
                left.label if left is not None else "NONE",
                right.label if right is not None else "NONE",
            )
            units.append(TrimUnit("constituent", toks, feats))
        leaves = sent.tree.leaves()
        for i in by_sent[s_idx]:
            tok = doc.tokens[i]
            left, right = siblings(leaves[tok.tok_index])
            feats = TrimFeatures(
                tok.surface.lower(), tok.pos, _position((i,), first, last), NULL, NULL, arg_type,
                left.label if left is not None else "NONE",
                right.label if right is not None else "NONE",
            )
            units.append(TrimUnit("token", (i,), feats))
    return units


def trim_labels(units, gold_tokens):
    gold = set(gold_tokens)
    return [KEEP if any(t in gold for t in u.tokens) else DROP for u in units]


def trim_argument(token_refs, arg_type, doc, model):
    """Drop tokens the classifier rejects, directly or via a rejected
    constituent. Never returns an empty span."""
    refs = tuple(sorted(token_refs))
    dropped = set()
    for unit in trim_units(refs, arg_type, doc):
        if dt.predict(model, unit.features.as_dict())[0] == DROP:
            dropped.update(unit.tokens)
    kept = tuple(i for i in refs if i not in dropped)
    return kept if kept else refs


# --- annotator ------------------------------------------------------------------------------


@dataclass
class ExplicitModels:
    detector: object
    senser: object
    segmenter: object
    trimmer: object


def annotate_explicit(doc, lexicon, models, start_id=0):
    rels = []
    for cand, sense in detect_and_sense(doc, lexicon, models.detector, models.senser):
        seg = segment_arguments(cand, doc, models.segmenter)
        if not seg.arg1 or not seg.arg2:
            continue
        arg1 = trim_argument(seg.arg1, "Arg1", doc, models.trimmer)
        arg2 = trim_argument(seg.arg2, "Arg2", doc, models.trimmer)
        rels.append(
            Relation(
                start_id + len(rels), doc.doc_id, RelType.EXPLICIT, cand.span(doc),
                doc.span(arg1), doc.span(arg2), (sense,),
            )
        )
    return rels
