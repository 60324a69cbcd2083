"""Benchmark dataset containers and TSV loaders.

Three record shapes: scored word pairs, multiple-choice questions, and
three-token noun phrases with a bracketing label and a fold id. Files
are UTF-8 TSV; lines starting with '#' and blank lines are skipped.
Tokens are lowercased by default to match the casing convention of
commonly distributed vector files.
"""

import math
import os
from dataclasses import dataclass

from .errors import DataError, ParseError


@dataclass
class WordPairDataset:
    records: list  # (word1, word2, gold_score)
    name: str = "pairs"

    def __post_init__(self):
        if len(self.records) < 2:
            raise DataError(
                f"dataset {self.name!r}: need at least 2 word pairs"
            )
        for w1, w2, score in self.records:
            if not math.isfinite(score):
                raise DataError(
                    f"dataset {self.name!r}: non-finite gold score for "
                    f"pair ({w1!r}, {w2!r})"
                )

    def __len__(self):
        return len(self.records)


@dataclass
class MultipleChoiceDataset:
    questions: list  # (target, [cand1..cand4], answer_index)
    name: str = "choices"

    def __post_init__(self):
        for target, cands, answer in self.questions:
            if len(cands) != 4:
                raise DataError(
                    f"dataset {self.name!r}: question {target!r} must have "
                    f"exactly 4 candidates"
                )
            if not 0 <= answer <= 3:
                raise DataError(
                    f"dataset {self.name!r}: answer index {answer} out of "
                    f"range for {target!r}"
                )

    def __len__(self):
        return len(self.questions)


@dataclass
class NPDataset:
    """Noun phrases (tok1, tok2, tok3, label) partitioned into 10 folds."""

    records: list  # (tok1, tok2, tok3, label)
    fold_ids: list  # per record, 1..10
    name: str = "np"

    def __post_init__(self):
        if len(self.records) != len(self.fold_ids):
            raise DataError(
                f"dataset {self.name!r}: fold ids do not match records"
            )
        for rec in self.records:
            if rec[3] not in ("left", "right"):
                raise DataError(
                    f"dataset {self.name!r}: label must be left/right, "
                    f"got {rec[3]!r}"
                )
        for fid in self.fold_ids:
            if not 1 <= fid <= 10:
                raise DataError(
                    f"dataset {self.name!r}: fold id {fid} outside 1..10"
                )

    def __len__(self):
        return len(self.records)

    def fold_indices(self, fold_id):
        return [i for i, f in enumerate(self.fold_ids) if f == fold_id]


def _tsv_rows(stream):
    """Yield (line_number, fields) for data lines of a TSV stream."""
    data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    for lineno, line in enumerate(data.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, line.split("\t")


def load_word_pairs(stream, name="pairs", lowercase=True):
    """Parse TSV "word1<TAB>word2<TAB>score"."""
    records = []
    for lineno, fields in _tsv_rows(stream):
        if len(fields) != 3:
            raise ParseError(
                f"expected 3 tab-separated fields, got {len(fields)}",
                line=lineno,
            )
        w1, w2, raw = (f.strip() for f in fields)
        try:
            score = float(raw)
        except ValueError:
            raise ParseError(f"bad score {raw!r}", line=lineno) from None
        if lowercase:
            w1, w2 = w1.lower(), w2.lower()
        records.append((w1, w2, score))
    return WordPairDataset(records, name=name)


def load_multiple_choice(stream, name="choices", lowercase=True):
    """Parse TSV "target<TAB>cand1..cand4<TAB>answer_index"."""
    questions = []
    for lineno, fields in _tsv_rows(stream):
        if len(fields) != 6:
            raise ParseError(
                f"expected 6 tab-separated fields, got {len(fields)}",
                line=lineno,
            )
        target = fields[0].strip()
        cands = [f.strip() for f in fields[1:5]]
        try:
            answer = int(fields[5])
        except ValueError:
            raise ParseError(
                f"bad answer index {fields[5]!r}", line=lineno
            ) from None
        if not 0 <= answer <= 3:
            raise ParseError(
                f"answer index {answer} out of range 0-3", line=lineno
            )
        if lowercase:
            target = target.lower()
            cands = [c.lower() for c in cands]
        questions.append((target, cands, answer))
    return MultipleChoiceDataset(questions, name=name)


def load_np_records(stream, name="np", lowercase=True):
    """Parse TSV "tok1<TAB>tok2<TAB>tok3<TAB>label<TAB>fold_id"."""
    records = []
    fold_ids = []
    for lineno, fields in _tsv_rows(stream):
        if len(fields) != 5:
            raise ParseError(
                f"expected 5 tab-separated fields, got {len(fields)}",
                line=lineno,
            )
        toks = [f.strip() for f in fields[:3]]
        label = fields[3].strip()
        if label not in ("left", "right"):
            raise ParseError(
                f"label must be left or right, got {label!r}", line=lineno
            )
        try:
            fid = int(fields[4])
        except ValueError:
            raise ParseError(
                f"bad fold id {fields[4]!r}", line=lineno
            ) from None
        if not 1 <= fid <= 10:
            raise ParseError(f"fold id {fid} outside 1..10", line=lineno)
        if lowercase:
            toks = [t.lower() for t in toks]
        records.append((toks[0], toks[1], toks[2], label))
        fold_ids.append(fid)
    return NPDataset(records, fold_ids, name=name)


def load_dataset_file(path, kind, lowercase=True):
    """Load one dataset file by kind: pairs, choices, or np."""
    loaders = {
        "pairs": load_word_pairs,
        "choices": load_multiple_choice,
        "np": load_np_records,
    }
    if kind not in loaders:
        raise DataError(f"unknown dataset kind: {kind!r}")
    name = os.path.splitext(os.path.basename(path))[0]
    with open(path, "rb") as fh:
        return loaders[kind](fh, name=name, lowercase=lowercase)
