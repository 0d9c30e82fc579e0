"""Documents, relations, and the shared-task JSON formats.

Parses arrive as one JSON object keyed by document id; relations are
newline-delimited JSON whose ``TokenList`` entries are
``[char_begin, char_end, doc_tok_index, sent_index, tok_index]``.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .errors import CorpusParseError, IntegrityError, RelationFormatError, TreeSyntaxError
from .syntax import flat_tree, parse_bracketed


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str
    char_begin: int
    char_end: int
    sent_index: int
    tok_index: int
    doc_tok_index: int


@dataclass(frozen=True, eq=False)
class Sentence:
    tokens: tuple
    tree: object
    paragraph_id: int = 0

    def __len__(self):
        return len(self.tokens)

    @property
    def doc_range(self):
        return range(self.tokens[0].doc_tok_index, self.tokens[-1].doc_tok_index + 1)


@dataclass(frozen=True, eq=False)
class Document:
    doc_id: str
    sentences: tuple
    raw_text: str | None = None
    tokens: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(
            self, "tokens", tuple(t for s in self.sentences for t in s.tokens)
        )

    def sentence_of(self, doc_tok_index):
        return self.tokens[doc_tok_index].sent_index

    def locate(self, doc_tok_indices):
        """Token locators for building a :class:`TokenSpan` from this document."""
        out = []
        for i in doc_tok_indices:
            t = self.tokens[i]
            out.append((t.char_begin, t.char_end, t.sent_index, t.tok_index))
        return tuple(out)

    def span(self, doc_tok_indices):
        idx = tuple(sorted(set(doc_tok_indices)))
        return TokenSpan(self.doc_id, idx, self.locate(idx))

    def structural_key(self):
        return (
            self.doc_id,
            self.raw_text,
            tuple((s.tokens, s.paragraph_id, _tree_key(s.tree)) for s in self.sentences),
        )


def _tree_key(node):
    if node.is_leaf:
        return (node.label, node.word)
    return (node.label, tuple(_tree_key(c) for c in node.children))


@dataclass(frozen=True)
class TokenSpan:
    """Token indices into a document; possibly discontinuous.

    ``locators`` optionally carries ``(char_begin, char_end, sent_index,
    tok_index)`` for each index so that a span can be written back out
    without the document at hand.
    """

    doc_id: str
    token_refs: tuple = ()
    locators: tuple | None = None

    def __post_init__(self):
        refs = tuple(self.token_refs)
        object.__setattr__(self, "token_refs", refs)
        if any(b <= a for a, b in zip(refs, refs[1:])):
            raise ValueError(f"token indices must be strictly increasing: {refs}")
        if not refs:
            object.__setattr__(self, "locators", None)
        elif self.locators is not None:
            locs = tuple(tuple(x) for x in self.locators)
            if len(locs) != len(refs):
                raise ValueError("locators must parallel token_refs")
            object.__setattr__(self, "locators", locs)

    def __len__(self):
        return len(self.token_refs)

    def __bool__(self):
        return bool(self.token_refs)

    def as_set(self):
        return frozenset(self.token_refs)

    def sentence_indices(self):
        if self.locators is None:
            return None
        return sorted({loc[2] for loc in self.locators})


class RelType(str, Enum):
    EXPLICIT = "Explicit"
    IMPLICIT = "Implicit"
    ALTLEX = "AltLex"
    ENTREL = "EntRel"


@dataclass(frozen=True)
class Relation:
    relation_id: int
    doc_id: str
    rel_type: RelType
    connective: TokenSpan
    arg1: TokenSpan
    arg2: TokenSpan
    senses: tuple

    def __post_init__(self):
        object.__setattr__(self, "rel_type", RelType(self.rel_type))
        object.__setattr__(self, "senses", tuple(self.senses))
        validate_relation(self)

    @property
    def is_explicit(self):
        return self.rel_type is RelType.EXPLICIT

    def first_token(self):
        refs = self.arg1.token_refs + self.arg2.token_refs + self.connective.token_refs
        return min(refs)


def validate_relation(rel):
    tag = f"relation {rel.relation_id} in {rel.doc_id!r}"
    if rel.rel_type is RelType.EXPLICIT and not rel.connective:
        raise RelationFormatError(f"{tag}: Explicit relation without connective tokens")
    if rel.rel_type is not RelType.EXPLICIT and rel.connective:
        raise RelationFormatError(f"{tag}: {rel.rel_type.value} relation with connective tokens")
    if not rel.arg1 or not rel.arg2:
        raise RelationFormatError(f"{tag}: empty argument")
    if rel.arg1.as_set() & rel.arg2.as_set():
        raise RelationFormatError(f"{tag}: Arg1 and Arg2 overlap")
    if not rel.senses:
        raise RelationFormatError(f"{tag}: no sense label")
    if rel.rel_type is RelType.ENTREL and rel.senses != ("EntRel",):
        raise RelationFormatError(f"{tag}: EntRel must carry exactly the sense 'EntRel'")


# --- parses -----------------------------------------------------------------

_PARAGRAPH_BREAK = re.compile(r"\n[ \t\r]*\n")
_DOC_KEY = re.compile(r'"((?:[^"\\]|\\.)*)"\s*:\s*\{\s*"sentences"')


def _byte_pos(text, char_pos):
    return len(text[:char_pos].encode("utf-8"))


def _doc_at(text, char_pos):
    doc_id = None
    for m in _DOC_KEY.finditer(text, 0, char_pos):
        doc_id = m.group(1)
    return doc_id


def _read_raw(raw_dir, doc_id):
    for name in (doc_id, doc_id + ".txt"):
        path = os.path.join(raw_dir, name)
        if os.path.exists(path):
            with open(path, encoding="utf-8", newline="") as fh:
                return fh.read()
    return None


def _paragraph_starts(raw_text):
    return [m.end() for m in _PARAGRAPH_BREAK.finditer(raw_text)]


def _build_document(doc_id, payload, raw_text):
    if not isinstance(payload, dict) or not isinstance(payload.get("sentences"), list):
        raise CorpusParseError("document entry lacks a 'sentences' list", doc_id)
    breaks = _paragraph_starts(raw_text) if raw_text is not None else []
    sentences = []
    doc_tok = 0
    for s_idx, sent in enumerate(payload["sentences"]):
        tokens = []
        for t_idx, word in enumerate(sent.get("words", [])):
            try:
                surface, info = word[0], word[1]
                begin = int(info["CharacterOffsetBegin"])
                end = int(info["CharacterOffsetEnd"])
                pos = info["PartOfSpeech"]
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise CorpusParseError(
                    f"malformed word entry at sentence {s_idx}, token {t_idx}: {exc}", doc_id
                ) from None
            name = f"token {t_idx} ({surface!r}) of sentence {s_idx} in doc {doc_id!r}"
            if not begin < end:
                raise IntegrityError(f"{name}: empty character span [{begin}, {end})")
            if raw_text is not None and raw_text[begin:end] != surface:
                raise IntegrityError(
                    f"{name}: raw text slice {raw_text[begin:end]!r} does not match surface"
                )
            tokens.append(Token(surface, pos, begin, end, s_idx, t_idx, doc_tok))
            doc_tok += 1
        if not tokens:
            raise IntegrityError(f"sentence {s_idx} of doc {doc_id!r} has no tokens")
        tree_str = sent.get("parsetree", "")
        tree = None
        if tree_str and tree_str.strip() not in ("(())", "( () )"):
            try:
                tree = parse_bracketed(tree_str)
            except TreeSyntaxError as exc:
                raise CorpusParseError(f"sentence {s_idx}: {exc}", doc_id) from None
        if tree is None:
            tree = flat_tree([t.surface for t in tokens], [t.pos for t in tokens])
        if tree.span[1] + 1 != len(tokens):
            raise IntegrityError(
                f"sentence {s_idx} of doc {doc_id!r}: tree has {tree.span[1] + 1} leaves "
                f"but the sentence has {len(tokens)} tokens"
            )
        para = sum(1 for b in breaks if b <= tokens[0].char_begin)
        sentences.append(Sentence(tuple(tokens), tree, para))
    return Document(doc_id, tuple(sentences), raw_text)


def load_corpus(parses_path, raw_dir=None):
    with open(parses_path, "rb") as fh:
        data = fh.read()
    return parse_corpus(data.decode("utf-8"), raw_dir)


def parse_corpus(text, raw_dir=None):
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusParseError(
            f"malformed JSON: {exc.msg}", _doc_at(text, exc.pos), _byte_pos(text, exc.pos)
        ) from None
    if not isinstance(payload, dict):
        raise CorpusParseError("top level must be an object keyed by document id", None, 0)
    docs = []
    for doc_id, body in payload.items():
        raw = _read_raw(raw_dir, doc_id) if raw_dir else None
        docs.append(_build_document(doc_id, body, raw))
    return docs


# --- relations --------------------------------------------------------------


def _span_from_json(doc_id, obj, what, lineno):
    entries = (obj or {}).get("TokenList", [])
    if not entries:
        return TokenSpan(doc_id)
    if all(isinstance(e, int) for e in entries):
        return TokenSpan(doc_id, tuple(sorted(set(entries))))
    try:
        rows = sorted({tuple(int(v) for v in e) for e in entries}, key=lambda r: r[2])
        if any(len(r) != 5 for r in rows):
            raise ValueError("expected 5 integers")
    except (TypeError, ValueError) as exc:
        raise RelationFormatError(f"line {lineno}: bad {what} TokenList: {exc}") from None
    return TokenSpan(
        doc_id, tuple(r[2] for r in rows), tuple((r[0], r[1], r[3], r[4]) for r in rows)
    )


def relation_from_json(obj, lineno=0):
    try:
        doc_id = obj["DocID"]
        type_str = obj["Type"]
    except (KeyError, TypeError):
        raise RelationFormatError(f"line {lineno}: missing DocID or Type") from None
    try:
        rel_type = RelType(type_str)
    except ValueError:
        raise RelationFormatError(f"line {lineno}: unknown relation type {type_str!r}") from None
    senses = obj.get("Sense", [])
    if isinstance(senses, str):
        senses = [senses]
    try:
        return Relation(
            int(obj.get("ID", lineno)),
            doc_id,
            rel_type,
            _span_from_json(doc_id, obj.get("Connective"), "Connective", lineno),
            _span_from_json(doc_id, obj.get("Arg1"), "Arg1", lineno),
            _span_from_json(doc_id, obj.get("Arg2"), "Arg2", lineno),
            tuple(senses),
        )
    except ValueError as exc:
        raise RelationFormatError(f"line {lineno}: {exc}") from None


def load_relations(relations_path):
    out = []
    with open(relations_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RelationFormatError(f"line {lineno}: malformed JSON: {exc.msg}") from None
            out.append(relation_from_json(obj, lineno))
    return out


def _span_to_json(span):
    if span.locators is None:
        return {"TokenList": list(span.token_refs)}
    return {
        "TokenList": [
            [loc[0], loc[1], ref, loc[2], loc[3]] for ref, loc in zip(span.token_refs, span.locators)
        ]
    }


def relation_to_json(rel):
    return {
        "Arg1": _span_to_json(rel.arg1),
        "Arg2": _span_to_json(rel.arg2),
        "Connective": _span_to_json(rel.connective),
        "DocID": rel.doc_id,
        "ID": rel.relation_id,
        "Sense": list(rel.senses),
        "Type": rel.rel_type.value,
    }


def emit_relations(relations, sink):
    """Write relations as NDJSON; returns the number of bytes written."""
    written = 0
    for rel in relations:
        line = json.dumps(relation_to_json(rel), sort_keys=True, ensure_ascii=False) + "\n"
        sink.write(line)
        written += len(line.encode("utf-8"))
    return written


def write_relations(relations, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        return emit_relations(relations, fh)


def span_text(doc, span):
    for i in span.token_refs:
        if not 0 <= i < len(doc.tokens):
            raise IndexError(f"token index {i} out of range for doc {doc.doc_id!r}")
    return " ".join(doc.tokens[i].surface for i in span.token_refs)


# --- sense inventories --------------------------------------------------------


def read_label_file(path=None, default=None):
    if path is None:
        text = resources.files("shallowd").joinpath(f"data/{default}").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    labels = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            labels.append(line)
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate labels in {path or default}")
    return labels


@dataclass(frozen=True)
class SenseInventory:
    labels: tuple

    def __contains__(self, label):
        return label in self.labels

    def __len__(self):
        return len(self.labels)

    @classmethod
    def load(cls, path=None, default="senses_explicit.txt"):
        return cls(tuple(read_label_file(path, default)))

    def normalize(self, sense):
        """Map a gold sense onto the inventory, backing off to coarser levels."""
        parts = sense.split(".")
        for n in range(len(parts), 0, -1):
            cand = ".".join(parts[:n])
            if cand in self.labels:
                return cand
        return None
