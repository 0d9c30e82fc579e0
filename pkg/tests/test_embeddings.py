import numpy as np
import pytest

from shallowd.embeddings import (
    OOV,
    OOV_ROW,
    PAD,
    PAD_ROW,
    EmbeddingFormatError,
    detect_dim,
    load_embeddings,
    random_embeddings,
    write_word2vec_binary,
    write_word2vec_text,
)


def test_row_accounting(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("cat 1 2 3\ndog 4 5 6\n")
    emb = load_embeddings(p, {"cat", "dog"})
    assert len(emb) == 4 and emb.dim == 3
    assert emb.vocab[PAD] == PAD_ROW and emb.vocab[OOV] == OOV_ROW
    assert np.array_equal(emb.vectors[emb.vocab["dog"]], [4, 5, 6])
    assert not emb.vectors[PAD_ROW].any()


def test_missing_word_is_random_in_range(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("cat 1 2 3\n")
    emb = load_embeddings(p, {"cat", "zebra"}, seed=3)
    row = emb.vectors[emb.vocab["zebra"]]
    assert np.all(np.abs(row) <= 0.25)
    again = load_embeddings(p, {"cat", "zebra"}, seed=3)
    assert np.array_equal(again.vectors, emb.vectors)


def test_header_gives_dimension(tmp_path):
    words = [f"w{i}" for i in range(5)]
    vecs = np.arange(5 * 300, dtype=float).reshape(5, 300) / 1000
    p = tmp_path / "v.txt"
    write_word2vec_text(p, words, vecs)
    assert detect_dim(p) == 300
    assert load_embeddings(p, set(words)).dim == 300


def test_binary_format_detected(tmp_path):
    words = ["alpha", "beta"]
    vecs = np.array([[0.5, -1.0], [2.0, 0.25]])
    p = tmp_path / "v.bin"
    write_word2vec_binary(p, words, vecs)
    emb = load_embeddings(p, set(words))
    assert np.allclose(emb.vectors[emb.vocab["beta"]], [2.0, 0.25])


def test_dimension_mismatch_is_format_error(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("cat 1 2 3\ndog 4 5\n")
    with pytest.raises(EmbeddingFormatError):
        load_embeddings(p, {"cat", "dog"})


def test_exact_case_before_folded(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("Apple 1 1\napple 2 2\nBanana 3 3\n")
    emb = load_embeddings(p, {"apple", "banana"})
    assert np.array_equal(emb.vectors[emb.vocab["apple"]], [2, 2])
    assert np.array_equal(emb.vectors[emb.vocab["banana"]], [3, 3])


def test_random_table_layout():
    emb = random_embeddings(["b", "a"], 5, seed=1)
    assert emb.words() == [PAD, OOV, "a", "b"]
    assert emb.index("nope") == OOV_ROW
