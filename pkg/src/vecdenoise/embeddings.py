"""Word embedding I/O: text and word2vec-binary parsing, writing, subsetting.

Matrices are held as float64 regardless of on-disk precision; 32-bit
binary inputs are widened on load. Parsed matrices are marked read-only
so they can be shared freely.
"""

import io

import numpy as np

from .errors import DataError, ParseError


class Vocabulary:
    """Ordered set of unique tokens with a token -> row-id map."""

    def __init__(self, words):
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            seen = set()
            for w in self.words:
                if w in seen:
                    raise DataError(f"duplicate token: {w!r}")
                seen.add(w)

    def __len__(self):
        return len(self.words)

    def __contains__(self, token):
        return token in self.index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.words == other.words


class EmbeddingMatrix:
    """Vocabulary plus a dense V x L float64 matrix, one row per word."""

    def __init__(self, vocab, data):
        data = np.ascontiguousarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise DataError(f"embedding data must be 2-d, got shape {data.shape}")
        if data.shape[0] != len(vocab):
            raise DataError(
                f"row count {data.shape[0]} does not match vocabulary size {len(vocab)}"
            )
        if data.shape[1] < 1:
            raise DataError("embedding dimension must be >= 1")
        if not np.all(np.isfinite(data)):
            raise DataError("embedding matrix contains non-finite values")
        data.setflags(write=False)
        self.vocab = vocab
        self.data = data

    @property
    def dim(self):
        return self.data.shape[1]

    def __len__(self):
        return len(self.vocab)

    def row(self, token):
        return self.data[self.vocab.index[token]]


def _dedupe_tokens(tokens, lowercase):
    """Validate token uniqueness, optionally folding case.

    Exact duplicates always error. With lowercase=True, distinct tokens
    that collide after folding keep the first occurrence; the indices of
    surviving rows are returned.
    """
    keep_rows = []
    words = []
    seen_exact = set()
    seen_folded = set()
    for i, tok in enumerate(tokens):
        if tok in seen_exact:
            raise ParseError(f"duplicate token: {tok!r}")
        seen_exact.add(tok)
        folded = tok.lower() if lowercase else tok
        if folded in seen_folded:
            continue
        seen_folded.add(folded)
        keep_rows.append(i)
        words.append(folded)
    return words, keep_rows


def parse_embedding_text(stream, header=False, lowercase=False):
    """Parse a text embedding file ("token v1 ... vL" per line).

    Parameters
    ----------
    stream : binary or text file object, or bytes
    header : bool
        If True the first line is "V L" and is checked against the body.
    lowercase : bool
        Fold tokens to lower case; colliding tokens keep the first row.
    """
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    raw = stream.read()
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"not valid UTF-8: {e}")
    else:
        text = raw

    lines = text.splitlines()
    lineno = 0
    expect_v = expect_l = None
    if header:
        if not lines:
            raise ParseError("empty stream, expected header line", line=1)
        fields = lines[0].split()
        if len(fields) != 2:
            raise ParseError(f"bad header line: {lines[0]!r}", line=1)
        try:
            expect_v, expect_l = int(fields[0]), int(fields[1])
        except ValueError:
            raise ParseError(f"bad header line: {lines[0]!r}", line=1)
        lineno = 1

    tokens = []
    rows = []
    dim = None
    for i in range(lineno, len(lines)):
        line = lines[i]
        if not line.strip():
            continue
        fields = line.split()
        tok, values = fields[0], fields[1:]
        if dim is None:
            dim = len(values)
            if dim == 0:
                raise ParseError("line has a token but no values", line=i + 1)
        elif len(values) != dim:
            raise ParseError(
                f"expected {dim} values, got {len(values)}", line=i + 1
            )
        try:
            vec = np.array(values, dtype=np.float64)
        except ValueError:
            raise ParseError("unparseable number", line=i + 1)
        if not np.all(np.isfinite(vec)):
            raise ParseError("non-finite value", line=i + 1)
        tokens.append(tok)
        rows.append(vec)

    if expect_v is not None and expect_v != len(rows):
        raise ParseError(
            f"header declares {expect_v} rows, found {len(rows)}"
        )
    if dim is None:
        if expect_l is not None:
            return EmbeddingMatrix(Vocabulary([]), np.zeros((0, expect_l)))
        raise ParseError("empty embedding stream with no header")
    if expect_l is not None and expect_l != dim:
        raise ParseError(f"header declares dim {expect_l}, rows have {dim}")

    words, keep = _dedupe_tokens(tokens, lowercase)
    data = np.vstack([rows[i] for i in keep]) if keep else np.zeros((0, dim))
    return EmbeddingMatrix(Vocabulary(words), data)


def parse_embedding_binary(stream, lowercase=False):
    """Parse the word2vec binary layout.

    ASCII header "V L\\n", then V records of [token bytes, one space,
    L little-endian float32]. Values are widened to float64.
    """
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    buf = stream.read()
    pos = buf.find(b"\n")
    if pos < 0:
        raise ParseError("missing header line", offset=len(buf))
    fields = buf[:pos].split()
    if len(fields) != 2:
        raise ParseError(f"bad header line: {buf[:pos]!r}", offset=0)
    try:
        count, dim = int(fields[0]), int(fields[1])
    except ValueError:
        raise ParseError(f"bad header line: {buf[:pos]!r}", offset=0)
    pos += 1

    vec_bytes = 4 * dim
    tokens = []
    rows = np.empty((count, dim), dtype=np.float64)
    for i in range(count):
        sep = buf.find(b" ", pos)
        if sep < 0:
            raise ParseError(
                f"truncated stream while reading token {i}", offset=pos
            )
        try:
            tok = buf[pos:sep].decode("utf-8")
        except UnicodeDecodeError:
            raise ParseError(f"token {i} is not valid UTF-8", offset=pos)
        pos = sep + 1
        if pos + vec_bytes > len(buf):
            raise ParseError(
                f"truncated stream inside vector {i}", offset=pos
            )
        vec = np.frombuffer(buf, dtype="<f4", count=dim, offset=pos)
        pos += vec_bytes
        if not np.all(np.isfinite(vec)):
            raise ParseError(f"non-finite value in vector {i}", offset=pos)
        tokens.append(tok)
        rows[i] = vec

    words, keep = _dedupe_tokens(tokens, lowercase)
    data = rows[keep] if len(keep) != count else rows
    return EmbeddingMatrix(Vocabulary(words), data)


def write_embedding_text(emb, stream, precision=6):
    """Write "V L" header then one "token v1 ... vL" line per word.

    Values use fixed-point formatting with `precision` decimals, so a
    parse of the output reproduces the matrix within 10**(1-precision).
    """
    out = [f"{len(emb)} {emb.dim}\n"]
    fmt = f"%.{precision}f"
    for word, row in zip(emb.vocab.words, emb.data):
        out.append(word + " " + " ".join(fmt % v for v in row) + "\n")
    payload = "".join(out).encode("utf-8")
    stream.write(payload)


def write_embedding_binary(emb, stream):
    """Write the word2vec binary layout (float32 values)."""
    stream.write(f"{len(emb)} {emb.dim}\n".encode("ascii"))
    for word, row in zip(emb.vocab.words, emb.data):
        stream.write(word.encode("utf-8") + b" ")
        stream.write(row.astype("<f4").tobytes())


def restrict_vocabulary(emb, keep):
    """Subset an embedding to the tokens in `keep`, preserving row order.

    Returns (restricted, found) where found counts the members of `keep`
    present in the embedding; found / len(keep) is the coverage fraction.
    """
    keep = set(keep)
    rows = [i for i, w in enumerate(emb.vocab.words) if w in keep]
    words = [emb.vocab.words[i] for i in rows]
    data = emb.data[rows].copy() if rows else np.zeros((0, emb.dim))
    return EmbeddingMatrix(Vocabulary(words), data), len(rows)


def load_embedding(path, fmt="text", header="auto", lowercase=False):
    """Load an embedding file from disk.

    fmt is "text" or "binary". For text, header may be True, False, or
    "auto" ("auto" treats a two-integer first line as a header, which
    distinguishes the word2vec text format from headerless GloVe files).
    """
    with open(path, "rb") as fh:
        if fmt == "binary":
            return parse_embedding_binary(fh, lowercase=lowercase)
        if fmt != "text":
            raise DataError(f"unknown embedding format: {fmt!r}")
        raw = fh.read()
    if header == "auto":
        first = raw.split(b"\n", 1)[0].split()
        header = len(first) == 2 and all(_is_int(f) for f in first)
    return parse_embedding_text(raw, header=bool(header), lowercase=lowercase)


def _is_int(field):
    try:
        int(field)
        return True
    except ValueError:
        return False
