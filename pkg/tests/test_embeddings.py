import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recipnn.embeddings import (
    EmbeddingMatrix,
    detect_format,
    load_embeddings,
    write_embeddings,
)
from recipnn.errors import DataError


def make_matrix(n=5, dim=3, seed=0):
    rng = np.random.default_rng(seed)
    ids = [f"doc{i}" for i in range(n)]
    return EmbeddingMatrix(ids, rng.normal(size=(n, dim)).astype(np.float32))


def test_lookup_and_order():
    m = make_matrix()
    assert m.dim == 3
    assert len(m) == 5
    assert m.ids == [f"doc{i}" for i in range(5)]
    assert "doc2" in m
    np.testing.assert_array_equal(m.lookup("doc2"), m.vectors[2])
    with pytest.raises(DataError):
        m.lookup("nope")


def test_vectors_read_only():
    m = make_matrix()
    with pytest.raises(ValueError):
        m.vectors[0, 0] = 1.0


def test_duplicate_and_empty_ids_rejected():
    with pytest.raises(DataError):
        EmbeddingMatrix(["a", "a"], np.zeros((2, 2), dtype=np.float32))
    with pytest.raises(DataError):
        EmbeddingMatrix(["a", ""], np.zeros((2, 2), dtype=np.float32))


def test_non_finite_rejected():
    vecs = np.zeros((2, 2), dtype=np.float32)
    vecs[1, 0] = np.nan
    with pytest.raises(DataError):
        EmbeddingMatrix(["a", "b"], vecs)


def test_from_items_inconsistent_lengths():
    with pytest.raises(DataError):
        EmbeddingMatrix.from_items([("a", [1.0, 2.0]), ("b", [1.0])])


def test_binary_round_trip_bit_exact(tmp_path):
    m = make_matrix(n=17, dim=9, seed=3)
    p = tmp_path / "emb.bin"
    write_embeddings(m, p, fmt="binary")
    assert detect_format(p) == "binary"
    back = load_embeddings(p)
    assert back == m
    assert back.vectors.dtype == np.float32


def test_tsv_round_trip_float_exact(tmp_path):
    m = make_matrix(n=11, dim=4, seed=7)
    p = tmp_path / "emb.tsv"
    write_embeddings(m, p, fmt="tsv")
    assert detect_format(p) == "tsv"
    back = load_embeddings(p, fmt="tsv")
    assert back == m


def test_cross_format_round_trip(tmp_path):
    m = make_matrix(n=6, dim=5, seed=11)
    b = tmp_path / "emb.bin"
    t = tmp_path / "emb.tsv"
    write_embeddings(m, b, fmt="binary")
    write_embeddings(load_embeddings(b), t, fmt="tsv")
    assert load_embeddings(t) == m


def test_binary_bad_magic(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(DataError, match="magic"):
        load_embeddings(p, fmt="binary")


def test_binary_truncation(tmp_path):
    m = make_matrix(n=3, dim=2)
    p = tmp_path / "emb.bin"
    write_embeddings(m, p, fmt="binary")
    blob = p.read_bytes()
    p.write_bytes(blob[:-5])
    with pytest.raises(DataError, match="truncated"):
        load_embeddings(p)


def test_binary_trailing_bytes(tmp_path):
    m = make_matrix(n=3, dim=2)
    p = tmp_path / "emb.bin"
    write_embeddings(m, p, fmt="binary")
    p.write_bytes(p.read_bytes() + b"xx")
    with pytest.raises(DataError, match="trailing"):
        load_embeddings(p)


def test_tsv_error_carries_line_number(tmp_path):
    p = tmp_path / "emb.tsv"
    p.write_text("a\t1.0,2.0\nb\t1.0,oops\n")
    with pytest.raises(DataError, match=r"emb\.tsv:2"):
        load_embeddings(p, fmt="tsv")


def test_tsv_dim_mismatch_line(tmp_path):
    p = tmp_path / "emb.tsv"
    p.write_text("a\t1.0,2.0\nb\t1.0\n")
    with pytest.raises(DataError, match=":2"):
        load_embeddings(p, fmt="tsv")


id_strategy = st.text(
    alphabet=st.characters(min_codepoint=33, max_codepoint=126),
    min_size=1,
    max_size=12,
)


@settings(max_examples=50, deadline=None)
@given(
    ids=st.lists(id_strategy, min_size=1, max_size=8, unique=True),
    dim=st.integers(min_value=1, max_value=6),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
    fmt=st.sampled_from(["binary", "tsv"]),
)
def test_round_trip_property(tmp_path_factory, ids, dim, seed, fmt):
    rng = np.random.default_rng(seed)
    m = EmbeddingMatrix(ids, rng.normal(size=(len(ids), dim)).astype(np.float32))
    p = tmp_path_factory.mktemp("rt") / f"emb.{fmt}"
    write_embeddings(m, p, fmt=fmt)
    assert load_embeddings(p, fmt=fmt) == m
