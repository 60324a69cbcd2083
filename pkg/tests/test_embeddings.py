import io

import numpy as np
import pytest

from vecdenoise.embeddings import (
    EmbeddingMatrix,
    Vocabulary,
    load_embedding,
    parse_embedding_binary,
    parse_embedding_text,
    restrict_vocabulary,
    write_embedding_binary,
    write_embedding_text,
)
from vecdenoise.errors import DataError, ParseError


def make_emb(words, data):
    return EmbeddingMatrix(Vocabulary(words), np.asarray(data, dtype=float))


class TestVocabulary:
    def test_index_lookup(self):
        v = Vocabulary(["cat", "dog"])
        assert len(v) == 2
        assert "cat" in v and "eel" not in v
        assert v.index["dog"] == 1

    def test_duplicate_rejected(self):
        with pytest.raises(DataError):
            Vocabulary(["a", "b", "a"])


class TestEmbeddingMatrix:
    def test_shape_validation(self):
        with pytest.raises(DataError):
            EmbeddingMatrix(Vocabulary(["a", "b"]), np.zeros((3, 4)))

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            make_emb(["a"], [[np.nan, 1.0]])

    def test_rows_immutable(self):
        e = make_emb(["a"], [[1.0, 2.0]])
        with pytest.raises(ValueError):
            e.data[0, 0] = 9.0

    def test_row_access(self):
        e = make_emb(["a", "b"], [[1, 2], [3, 4]])
        np.testing.assert_array_equal(e.row("b"), [3.0, 4.0])


class TestTextFormat:
    def test_round_trip_preserves_order_and_values(self):
        rng = np.random.default_rng(0)
        e = make_emb(["alpha", "beta", "gamma"], rng.normal(size=(3, 4)))
        buf = io.BytesIO()
        write_embedding_text(e, buf, precision=9)
        buf.seek(0)
        back = parse_embedding_text(buf, header=True)
        assert back.vocab.words == e.vocab.words
        np.testing.assert_allclose(back.data, e.data, atol=1e-9)

    def test_header_mismatch(self):
        with pytest.raises(ParseError):
            parse_embedding_text(b"3 2\na 1 2\nb 3 4\n", header=True)

    def test_headerless_parsing(self):
        e = parse_embedding_text(b"a 1 2\nb 3 4\n", header=False)
        assert e.vocab.words == ["a", "b"]
        assert e.dim == 2

    def test_ragged_row_reports_line(self):
        with pytest.raises(ParseError) as exc:
            parse_embedding_text(b"a 1 2\nb 3\n", header=False)
        assert "line 2" in str(exc.value)

    def test_non_numeric_rejected(self):
        with pytest.raises(ParseError):
            parse_embedding_text(b"a 1 x\n", header=False)

    def test_non_finite_rejected(self):
        with pytest.raises(ParseError):
            parse_embedding_text(b"a 1 nan\n", header=False)

    def test_duplicate_token_named(self):
        with pytest.raises(ParseError) as exc:
            parse_embedding_text(b"a 1 2\na 3 4\n", header=False)
        assert "'a'" in str(exc.value)

    def test_lowercase_folding_keeps_first(self):
        e = parse_embedding_text(
            b"Cat 1 0\ncat 2 0\ndog 3 0\n", header=False, lowercase=True
        )
        assert e.vocab.words == ["cat", "dog"]
        np.testing.assert_array_equal(e.row("cat"), [1.0, 0.0])


class TestBinaryFormat:
    def test_round_trip(self):
        rng = np.random.default_rng(1)
        e = make_emb(["one", "two"], rng.normal(size=(2, 5)))
        buf = io.BytesIO()
        write_embedding_binary(e, buf)
        buf.seek(0)
        back = parse_embedding_binary(buf)
        assert back.vocab.words == ["one", "two"]
        # float32 storage: values survive to single precision
        np.testing.assert_allclose(back.data, e.data, atol=1e-6)

    def test_truncated_reports_offset(self):
        e = make_emb(["one", "two"], np.ones((2, 5)))
        buf = io.BytesIO()
        write_embedding_binary(e, buf)
        clipped = buf.getvalue()[:-7]
        with pytest.raises(ParseError) as exc:
            parse_embedding_binary(io.BytesIO(clipped))
        assert "offset" in str(exc.value)


class TestRestrict:
    def test_subset_preserves_order(self):
        e = make_emb(["a", "b", "c"], [[1, 0], [2, 0], [3, 0]])
        sub, found = restrict_vocabulary(e, {"c", "a", "z"})
        assert sub.vocab.words == ["a", "c"]
        assert found == 2

    def test_empty_keep(self):
        e = make_emb(["a", "b"], [[1, 0], [2, 0]])
        sub, found = restrict_vocabulary(e, set())
        assert len(sub) == 0 and found == 0

    def test_full_keep_is_identity(self):
        e = make_emb(["a", "b"], [[1, 0], [2, 0]])
        sub, found = restrict_vocabulary(e, {"a", "b"})
        assert sub.vocab.words == e.vocab.words
        np.testing.assert_array_equal(sub.data, e.data)


class TestLoadEmbedding:
    def test_auto_header_detection(self, tmp_path):
        with_header = tmp_path / "with.txt"
        with_header.write_bytes(b"2 3\na 1 2 3\nb 4 5 6\n")
        without = tmp_path / "without.txt"
        without.write_bytes(b"a 1 2 3\nb 4 5 6\n")
        e1 = load_embedding(str(with_header))
        e2 = load_embedding(str(without))
        assert e1.vocab.words == e2.vocab.words == ["a", "b"]
        np.testing.assert_array_equal(e1.data, e2.data)
