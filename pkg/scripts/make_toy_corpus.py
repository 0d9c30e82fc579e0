"""Generate the synthetic toy corpus shipped in src/shallowd/data/toy.

The documents are built from a handful of sentence templates with hand-made
constituency trees: subordinate and sentence-initial subordinate clauses,
sentence-initial adverbials linking back to the previous sentence, clause
coordination, and non-discourse uses of "and", "since" and "after"
(NP coordination, prepositional phrases). Adjacent sentences inside a
paragraph carry Implicit or EntRel relations, except next to an off-topic
weather sentence, which yields negative pairs for the relation detector.

Usage: python3 scripts/make_toy_corpus.py [OUT_DIR]
"""

import json
import os
import random
import sys

import numpy as np

SEED = 2016
N_DOCS = 12
EMB_DIM = 16

SUBJECTS = [("the", "company"), ("the", "bank"), ("investors",), ("analysts",), ("the", "board"),
            ("traders",), ("the", "government"), ("the", "firm"), ("regulators",), ("the", "fund")]
UP = ["rose", "recovered", "expanded", "improved", "rallied"]
DOWN = ["fell", "retreated", "slipped", "weakened", "declined"]
OBJECTS = [("the", "shares"), ("its", "stake"), ("its", "forecast"), ("costs",), ("the", "plan")]
TRANSITIVE = ["bought", "sold", "raised", "cut", "approved"]
SUBORDINATORS = {
    "because": "Contingency.Cause.Reason",
    "since": "Contingency.Cause.Reason",
    "after": "Temporal.Asynchronous.Succession",
    "before": "Temporal.Asynchronous.Precedence",
    "when": "Temporal.Synchrony",
    "while": "Temporal.Synchrony",
    "although": "Comparison.Concession",
    "unless": "Contingency.Condition",
    "until": "Temporal.Asynchronous.Precedence",
    "if": "Contingency.Condition",
}
ADVERBIALS = {
    "however": "Comparison.Contrast",
    "moreover": "Expansion.Conjunction",
    "meanwhile": "Temporal.Synchrony",
    "instead": "Expansion.Alternative.Chosen alternative",
    "nevertheless": "Comparison.Concession",
    "consequently": "Contingency.Cause.Result",
    "indeed": "Expansion.Restatement",
}
COORDINATORS = {"but": "Comparison.Contrast", "and": "Expansion.Conjunction"}
MONTHS = ["March", "June", "October", "January"]
WEATHER = ["mild", "cold", "warm", "wet"]


class Node:
    def __init__(self, label, *children, word=None):
        self.label, self.children, self.word = label, list(children), word

    def leaves(self):
        if self.word is not None:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]

    def bracket(self):
        if self.word is not None:
            return f"({self.label} {self.word})"
        return "(" + self.label + " " + " ".join(c.bracket() for c in self.children) + ")"


def leaf(pos, word):
    return Node(pos, word=word)


def np_node(words):
    if len(words) == 1:
        return Node("NP", leaf("NNS", words[0]))
    det = "PRP$" if words[0] == "its" else "DT"
    noun = "NNS" if words[1].endswith("s") and words[1] != "business" else "NN"
    return Node("NP", leaf(det, words[0]), leaf(noun, words[1]))


class Clause:
    """A subject NP and a VP, with the VP's direction for implicit senses."""

    def __init__(self, rng, subject=None):
        self.subject = subject or rng.choice(SUBJECTS)
        self.np = np_node(self.subject)
        if rng.random() < 0.35:
            verb = rng.choice(TRANSITIVE)
            self.direction = "up" if verb in ("bought", "raised", "approved") else "down"
            self.vp_children = [leaf("VBD", verb), np_node(rng.choice(OBJECTS))]
        else:
            self.direction = rng.choice(["up", "down"])
            verb = rng.choice(UP if self.direction == "up" else DOWN)
            self.vp_children = [leaf("VBD", verb)]

    def vp(self, *extra):
        return Node("VP", *self.vp_children, *extra)

    def s(self):
        return Node("S", self.np, self.vp())


def capitalize(node):
    first = node.leaves()[0]
    first.word = first.word[0].upper() + first.word[1:]
    return node


class Sent:
    def __init__(self, tree, kind, clause, explicit=None):
        self.tree, self.kind, self.clause = tree, kind, clause
        self.explicit = explicit  # (conn leaves, arg1 leaves or "prev", arg2 leaves, sense)

    def words(self):
        return self.tree.leaves()


def make_sentence(rng, kind, prev):
    period = leaf(".", ".")
    subject = prev.clause.subject if prev is not None and prev.clause and rng.random() < 0.3 else None
    c1 = Clause(rng, subject)
    if kind == "plain":
        tree = Node("S", c1.np, c1.vp(), period)
        return Sent(capitalize(tree), kind, c1)
    if kind == "weather":
        noun = Node("NP", leaf("DT", "the"), leaf("NN", "weather"))
        vp = Node("VP", leaf("VBD", "was"), Node("ADJP", leaf("JJ", rng.choice(WEATHER))))
        return Sent(capitalize(Node("S", noun, vp, period)), kind, None)
    if kind == "sub":
        conn = rng.choice(sorted(SUBORDINATORS))
        c2 = Clause(rng)
        cl = leaf("IN", conn)
        inner = c2.s()
        tree = Node("S", c1.np, c1.vp(Node("SBAR", cl, inner)), period)
        arg1 = c1.np.leaves() + [x for c in c1.vp_children for x in c.leaves()]
        return Sent(capitalize(tree), kind, c1, ([cl], arg1, inner.leaves(), SUBORDINATORS[conn]))
    if kind == "sub_initial":
        conn = rng.choice(["because", "although", "when", "if", "after"])
        c2 = Clause(rng)
        cl = leaf("IN", conn)
        inner = c2.s()
        tree = Node("S", Node("SBAR", cl, inner), leaf(",", ","), c1.np, c1.vp(), period)
        capitalize(tree)
        arg1 = c1.np.leaves() + [x for c in c1.vp_children for x in c.leaves()]
        return Sent(tree, kind, c1, ([cl], arg1, inner.leaves(), SUBORDINATORS[conn]))
    if kind == "adv":
        conn = rng.choice(sorted(ADVERBIALS))
        cl = leaf("RB", conn)
        tree = Node("S", Node("ADVP", cl), leaf(",", ","), c1.np, c1.vp(), period)
        capitalize(tree)
        arg2 = c1.np.leaves() + [x for c in c1.vp_children for x in c.leaves()]
        return Sent(tree, kind, c1, ([cl], "prev", arg2, ADVERBIALS[conn]))
    if kind == "coord":
        conn = rng.choice(sorted(COORDINATORS))
        c2 = Clause(rng)
        s1, s2 = c1.s(), c2.s()
        cl = leaf("CC", conn)
        tree = Node("S", s1, leaf(",", ","), cl, s2, period)
        capitalize(tree)
        return Sent(tree, kind, c1, ([cl], s1.leaves(), s2.leaves(), COORDINATORS[conn]))
    if kind == "np_and":
        a, b = rng.sample(SUBJECTS, 2)
        subj = Node("NP", np_node(a), leaf("CC", "and"), np_node(b))
        c1.np = subj
        c1.subject = a
        return Sent(capitalize(Node("S", subj, c1.vp(), period)), kind, c1)
    if kind == "pp":
        prep = rng.choice(["since", "after"])
        obj = (Node("NP", leaf("NNP", rng.choice(MONTHS))) if prep == "since"
               else Node("NP", leaf("DT", "the"), leaf("NN", "meeting")))
        tree = Node("S", c1.np, c1.vp(Node("PP", leaf("IN", prep), obj)), period)
        return Sent(capitalize(tree), kind, c1)
    raise ValueError(kind)


KINDS = ["plain", "sub", "sub_initial", "adv", "coord", "np_and", "pp", "weather"]
WEIGHTS = [2, 3, 2, 2, 2, 2, 2, 1]


def make_document(rng, doc_id):
    paragraphs = []
    for _ in range(2):
        sents, prev = [], None
        for i in range(rng.randint(4, 5)):
            kinds = KINDS if i > 0 and prev.kind != "weather" else [k for k in KINDS if k != "adv"]
            weights = [w for k, w in zip(KINDS, WEIGHTS) if k in kinds]
            kind = rng.choices(kinds, weights)[0]
            prev = make_sentence(rng, kind, prev)
            sents.append(prev)
        paragraphs.append(sents)

    # lay out raw text and token offsets
    raw, sentences, leaf_pos = "", [], {}
    doc_tok = 0
    for p_idx, para in enumerate(paragraphs):
        if p_idx:
            raw += "\n\n"
        for s_idx, sent in enumerate(para):
            if s_idx:
                raw += " "
            words = []
            for t_idx, lf in enumerate(sent.words()):
                if t_idx:
                    raw += " "
                begin = len(raw)
                raw += lf.word
                words.append([lf.word, {"CharacterOffsetBegin": begin, "CharacterOffsetEnd": len(raw),
                                        "Linkers": [], "PartOfSpeech": lf.label}])
                leaf_pos[id(lf)] = (begin, len(raw), doc_tok, len(sentences), t_idx)
                doc_tok += 1
            sentences.append({"dependencies": [], "parsetree": "( " + sent.tree.bracket() + " )",
                              "words": words})
    raw += "\n"

    def tokens(leaves):
        return sorted((list(leaf_pos[id(lf)]) for lf in leaves), key=lambda r: r[2])

    relations = []
    flat = [s for para in paragraphs for s in para]
    para_of = [p for p, para in enumerate(paragraphs) for _ in para]
    for i, sent in enumerate(flat):
        if sent.explicit:
            conn, arg1, arg2, sense = sent.explicit
            if arg1 == "prev":
                arg1 = flat[i - 1].words()[:-1]
            relations.append(("Explicit", tokens(conn), tokens(arg1), tokens(arg2), sense))
        if i == 0 or para_of[i] != para_of[i - 1] or sent.kind == "adv":
            continue
        before = flat[i - 1]
        if "weather" in (before.kind, sent.kind):
            continue
        if sent.clause.subject == before.clause.subject:
            rtype, sense = "EntRel", "EntRel"
        elif sent.clause.direction != before.clause.direction:
            rtype, sense = "Implicit", "Comparison.Contrast"
        else:
            rtype, sense = "Implicit", "Expansion.Conjunction"
        relations.append((rtype, [], tokens(before.words()[:-1]), tokens(sent.words()[:-1]), sense))
    return {"sentences": sentences}, raw, relations


def main(out_dir):
    rng = random.Random(SEED)
    os.makedirs(os.path.join(out_dir, "raw"), exist_ok=True)
    parses, rel_lines, vocab = {}, [], set()
    rel_id = 0
    for n in range(N_DOCS):
        doc_id = f"toy_{n:02d}"
        doc, raw, rels = make_document(rng, doc_id)
        parses[doc_id] = doc
        for s in doc["sentences"]:
            vocab.update(w[0].lower() for w in s["words"])
        with open(os.path.join(out_dir, "raw", doc_id), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(raw)
        for rtype, conn, arg1, arg2, sense in rels:
            rel_lines.append(json.dumps({
                "Arg1": {"TokenList": arg1}, "Arg2": {"TokenList": arg2},
                "Connective": {"TokenList": conn}, "DocID": doc_id, "ID": rel_id,
                "Sense": [sense], "Type": rtype,
            }, sort_keys=True))
            rel_id += 1
    with open(os.path.join(out_dir, "parses.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(parses, fh, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "relations.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(rel_lines) + "\n")
    # word2vec text embeddings; the two verb classes get a shared offset
    vec_rng = np.random.default_rng(SEED)
    words = sorted(vocab)
    with open(os.path.join(out_dir, "embeddings.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(words)} {EMB_DIM}\n")
        for w in words:
            v = vec_rng.uniform(-0.25, 0.25, EMB_DIM)
            if w in UP:
                v[0] += 0.5
            elif w in DOWN:
                v[0] -= 0.5
            fh.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")
    print(f"{N_DOCS} documents, {len(rel_lines)} relations, {len(words)} word types -> {out_dir}")


if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    default = os.path.join(here, "..", "src", "shallowd", "data", "toy")
    main(os.path.normpath(sys.argv[1] if len(sys.argv) > 1 else default))
