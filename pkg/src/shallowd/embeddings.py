"""Word-vector tables and word2vec file loading (text or binary)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

PAD = "<PAD>"
OOV = "<OOV>"
PAD_ROW = 0
OOV_ROW = 1
INIT_RANGE = 0.25


class EmbeddingFormatError(DataError):
    pass


@dataclass(eq=False)
class EmbeddingMatrix:
    vocab: dict
    vectors: np.ndarray
    trainable: bool = True

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]

    def index(self, word):
        return self.vocab.get(word, OOV_ROW)

    def words(self):
        return sorted(self.vocab, key=self.vocab.get)


def _layout(vocab_hint):
    words = [PAD, OOV] + sorted(set(vocab_hint) - {PAD, OOV})
    return {w: i for i, w in enumerate(words)}


def random_embeddings(vocab_hint, dim, seed=0):
    """Table with every non-PAD row drawn uniformly from [-0.25, 0.25]."""
    vocab = _layout(vocab_hint)
    rng = np.random.default_rng(seed)
    vectors = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(len(vocab), dim))
    vectors[PAD_ROW] = 0.0
    return EmbeddingMatrix(vocab, vectors)


def _parse_header(line):
    parts = line.split()
    if len(parts) == 2 and all(p.isdigit() for p in parts):
        return int(parts[0]), int(parts[1])
    return None


def _looks_like_text(line, dim):
    try:
        text = line.decode("utf-8")
    except UnicodeDecodeError:
        return False
    parts = text.rstrip("\n").rstrip().split(" ")
    if len(parts) != dim + 1:
        return False
    try:
        [float(p) for p in parts[1:]]
    except ValueError:
        return False
    return True


def _iter_text(fh, first_line, dim):
    lines = [first_line] if first_line is not None else []
    lineno = 1 if dim is not None else 0

    def rows():
        yield from lines
        yield from fh

    for raw in rows():
        lineno += 1
        line = raw.decode("utf-8", errors="replace").rstrip("\n").rstrip()
        if not line:
            continue
        parts = line.split(" ")
        if dim is None:
            dim = len(parts) - 1
            if dim < 1:
                raise EmbeddingFormatError(f"line {lineno}: no vector components")
        if len(parts) != dim + 1:
            raise EmbeddingFormatError(
                f"line {lineno}: expected {dim} components, found {len(parts) - 1}"
            )
        try:
            vec = np.array([float(p) for p in parts[1:]])
        except ValueError:
            raise EmbeddingFormatError(f"line {lineno}: non-numeric component") from None
        yield parts[0], vec, dim


def _iter_binary(fh, count, dim):
    nbytes = 4 * dim
    for n in range(count):
        word = bytearray()
        while True:
            ch = fh.read(1)
            if not ch:
                raise EmbeddingFormatError(f"binary file truncated at entry {n}")
            if ch == b" ":
                break
            if ch != b"\n":
                word.extend(ch)
        data = fh.read(nbytes)
        if len(data) != nbytes:
            raise EmbeddingFormatError(f"binary file truncated in vector {n}")
        yield word.decode("utf-8", errors="replace"), np.frombuffer(data, dtype="<f4").astype(float), dim


def read_word2vec(path, keep=None):
    """Yield ``(word, vector)`` pairs, auto-detecting text vs binary layout."""
    with open(path, "rb") as fh:
        first = fh.readline()
        header = _parse_header(first.decode("utf-8", errors="replace"))
        if header is None:
            entries = _iter_text(fh, first, None)
        else:
            count, dim = header
            pos = fh.tell()
            probe = fh.readline()
            fh.seek(pos)
            if not probe or _looks_like_text(probe, dim):
                entries = _iter_text(fh, None, dim)
            else:
                entries = _iter_binary(fh, count, dim)
        for word, vec, _ in entries:
            if keep is None or word in keep or word.lower() in keep:
                yield word, vec


def detect_dim(path):
    with open(path, "rb") as fh:
        first = fh.readline().decode("utf-8", errors="replace")
    header = _parse_header(first)
    if header is not None:
        return header[1]
    parts = first.rstrip().split(" ")
    if len(parts) < 2:
        raise EmbeddingFormatError("cannot determine vector dimension")
    return len(parts) - 1


def load_embeddings(path, vocab_hint, seed=0):
    """Embedding table covering ``vocab_hint`` plus ``<PAD>`` and ``<OOV>``.

    A hint word takes the file vector of the same spelling, or failing that
    the first file entry that matches it case-insensitively. Words the file
    lacks are drawn uniformly from [-0.25, 0.25]; ``<PAD>`` is all zeros.
    """
    hint = set(vocab_hint)
    dim = detect_dim(path)
    table = random_embeddings(hint, dim, seed)
    exact = {}
    folded = {}
    for word, vec in read_word2vec(path, keep=hint):
        if len(vec) != dim:
            raise EmbeddingFormatError(f"vector for {word!r} has dimension {len(vec)}, expected {dim}")
        if word in hint and word not in exact:
            exact[word] = vec
        low = word.lower()
        if low in hint and low not in folded:
            folded[low] = vec
    for word, row in table.vocab.items():
        if row in (PAD_ROW, OOV_ROW):
            continue
        vec = exact.get(word)
        if vec is None:
            vec = folded.get(word)
        if vec is not None:
            table.vectors[row] = vec
    return table


def write_word2vec_text(path, words, vectors, header=True):
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"{len(words)} {vectors.shape[1]}\n")
        for w, v in zip(words, vectors):
            fh.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")


def write_word2vec_binary(path, words, vectors):
    with open(path, "wb") as fh:
        fh.write(f"{len(words)} {vectors.shape[1]}\n".encode())
        for w, v in zip(words, vectors):
            fh.write(w.encode("utf-8") + b" " + np.asarray(v, dtype="<f4").tobytes() + b"\n")
