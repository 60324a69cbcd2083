"""Synthetic desk-scale benchmark with derivable gold labels.

Clean vectors are drawn from an r-dimensional linear subspace of the
L-dimensional ambient space; the observed embedding adds iid Gaussian
noise. Because the clean matrix is known, gold similarity scores (clean
cosines) and multiple-choice answers (clean-nearest candidate) can be
derived exactly, making denoising quality measurable without any
licensed dataset.
"""

import numpy as np

from .datasets import MultipleChoiceDataset, WordPairDataset
from .embeddings import EmbeddingMatrix, Vocabulary
from .errors import DataError


def generate_synthetic_benchmark(
    V, L, r, sigma, seed, n_pairs=500, n_questions=200
):
    """Returns (noisy, clean, pair dataset, choice dataset).

    Gold pair scores are cosines of the clean rows; each question's
    answer is the candidate whose clean vector is nearest the target's
    clean vector.
    """
    if r > L:
        raise DataError(f"subspace rank {r} exceeds dimension {L}")
    if sigma < 0:
        raise DataError("sigma must be non-negative")
    if V < 5:
        raise DataError("need at least 5 words")
    if n_pairs > V * (V - 1) // 2:
        raise DataError(
            f"cannot draw {n_pairs} distinct pairs from {V} words"
        )
    rng = np.random.default_rng(seed)

    basis, _ = np.linalg.qr(rng.standard_normal((L, r)))
    coeffs = rng.standard_normal((V, r))
    clean = coeffs @ basis.T
    noisy = clean + rng.normal(0.0, sigma, size=(V, L)) if sigma > 0 else (
        clean.copy()
    )

    width = len(str(V - 1))
    vocab = Vocabulary([f"w{i:0{width}d}" for i in range(V)])
    clean_emb = EmbeddingMatrix(vocab, clean)
    noisy_emb = EmbeddingMatrix(vocab, noisy)

    norms = np.linalg.norm(clean, axis=1)

    def clean_cos(i, j):
        return float(clean[i] @ clean[j] / (norms[i] * norms[j]))

    pair_records = []
    seen = set()
    while len(pair_records) < n_pairs:
        i, j = rng.choice(V, size=2, replace=False)
        key = (min(i, j), max(i, j))
        if key in seen:
            continue
        seen.add(key)
        pair_records.append(
            (vocab.words[i], vocab.words[j], clean_cos(i, j))
        )

    questions = []
    for _ in range(n_questions):
        picks = rng.choice(V, size=5, replace=False)
        target, cands = picks[0], picks[1:]
        scores = [clean_cos(target, c) for c in cands]
        answer = int(np.argmax(scores))
        questions.append(
            (vocab.words[target], [vocab.words[c] for c in cands], answer)
        )

    pairs = WordPairDataset(pair_records, name="synthetic-pairs")
    choices = MultipleChoiceDataset(questions, name="synthetic-choices")
    return noisy_emb, clean_emb, pairs, choices


def write_pairs_tsv(ds, stream):
    lines = [f"{w1}\t{w2}\t{score:.10g}\n" for w1, w2, score in ds.records]
    stream.write("".join(lines).encode("utf-8"))


def write_choices_tsv(ds, stream):
    lines = [
        "\t".join([target] + cands + [str(answer)]) + "\n"
        for target, cands, answer in ds.questions
    ]
    stream.write("".join(lines).encode("utf-8"))
