"""Tests for rank correlation, benchmark scoring, and the RBF classifier."""

import io
import math

import numpy as np
import pytest

from vecdenoise.datasets import (
    MultipleChoiceDataset,
    NPDataset,
    WordPairDataset,
    load_multiple_choice,
    load_np_records,
    load_word_pairs,
)
from vecdenoise.embeddings import (
    EmbeddingMatrix,
    Vocabulary,
    restrict_vocabulary,
)
from vecdenoise.errors import DataError, ParseError
from vecdenoise.evaluation import (
    EvalReport,
    average_ranks,
    evaluate_multiple_choice,
    evaluate_np_bracketing,
    evaluate_similarity,
    spearman_rho,
    write_reports,
)
from vecdenoise.svm import kkt_violation, rbf_kernel, train_rbf_svm


def make_embedding(rows):
    vocab = Vocabulary(list(rows))
    data = np.array([rows[w] for w in rows], dtype=np.float64)
    return EmbeddingMatrix(vocab, data)


class TestAverageRanks:
    def test_no_ties(self):
        assert np.array_equal(
            average_ranks([10.0, 30.0, 20.0]), [1.0, 3.0, 2.0]
        )

    def test_tied_run_gets_mean_rank(self):
        assert np.array_equal(
            average_ranks([1.0, 2.0, 2.0, 4.0]), [1.0, 2.5, 2.5, 4.0]
        )

    def test_all_equal(self):
        assert np.array_equal(average_ranks([5.0, 5.0, 5.0]), [2.0, 2.0, 2.0])


class TestSpearman:
    def test_perfect_and_reversed(self):
        a = [1.0, 2.0, 3.0, 4.0, 5.0]
        assert spearman_rho(a, a) == pytest.approx(1.0)
        assert spearman_rho(a, a[::-1]) == pytest.approx(-1.0)

    def test_tied_example(self):
        # ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4): 3/sqrt(10)
        got = spearman_rho([1.0, 2.0, 2.0, 4.0], [1.0, 2.0, 3.0, 4.0])
        assert got == pytest.approx(3.0 / math.sqrt(10.0), abs=1e-12)

    def test_textbook_example(self):
        iq = [106, 86, 100, 101, 99, 103, 97, 113, 112, 110]
        tv = [7, 0, 27, 50, 28, 29, 20, 12, 6, 17]
        assert spearman_rho(iq, tv) == pytest.approx(-29.0 / 165.0, abs=1e-12)

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = rng.standard_normal(15)
            b = rng.standard_normal(15)
            r = spearman_rho(a, b)
            assert r == pytest.approx(spearman_rho(b, a))
            assert -1.0 <= r <= 1.0

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = rng.standard_normal(12)
            b = rng.standard_normal(12)
            base = spearman_rho(a, b)
            assert spearman_rho(np.exp(a), b) == pytest.approx(base)
            assert spearman_rho(a, 3.0 * b + 7.0) == pytest.approx(base)

    def test_constant_input_warns_and_returns_zero(self):
        with pytest.warns(RuntimeWarning):
            assert spearman_rho([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            spearman_rho([1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(DataError):
            spearman_rho([1.0], [2.0])


class TestSimilarityEval:
    def test_perfect_agreement(self):
        emb = make_embedding(
            {"a": [1.0, 0.0], "b": [1.0, 0.1], "c": [0.0, 1.0]}
        )
        ds = WordPairDataset(
            [("a", "b", 9.0), ("a", "c", 1.0), ("b", "c", 2.0)]
        )
        rep = evaluate_similarity(emb, ds)
        assert rep.value == pytest.approx(1.0)
        assert rep.coverage == 1.0
        assert rep.n_items == 3
        assert rep.metric == "spearman_rho"

    def test_oov_pairs_reduce_coverage(self):
        emb = make_embedding(
            {"a": [1.0, 0.0], "b": [0.5, 0.5], "c": [0.0, 1.0]}
        )
        ds = WordPairDataset(
            [
                ("a", "b", 3.0),
                ("a", "zzz", 5.0),
                ("b", "c", 1.0),
                ("c", "a", 2.0),
            ]
        )
        rep = evaluate_similarity(emb, ds)
        assert rep.coverage == pytest.approx(0.75)
        assert rep.n_items == 3

    def test_too_few_covered(self):
        emb = make_embedding({"a": [1.0, 0.0], "b": [0.0, 1.0]})
        ds = WordPairDataset(
            [("a", "x", 1.0), ("y", "b", 2.0), ("a", "b", 3.0)]
        )
        with pytest.raises(DataError):
            evaluate_similarity(emb, ds)

    def test_rotation_invariance(self):
        # Cosines, hence rho, are unchanged by an orthogonal map.
        rng = np.random.default_rng(2)
        words = [f"w{i}" for i in range(10)]
        X = rng.standard_normal((10, 4))
        R, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        ds = WordPairDataset(
            [
                (words[i], words[j], float(rng.random()))
                for i in range(10)
                for j in range(i + 1, 10)
            ]
        )
        e1 = EmbeddingMatrix(Vocabulary(words), X)
        e2 = EmbeddingMatrix(Vocabulary(words), X @ R)
        r1 = evaluate_similarity(e1, ds)
        r2 = evaluate_similarity(e2, ds)
        assert r1.value == pytest.approx(r2.value, abs=1e-12)


class TestMultipleChoiceEval:
    def base_embedding(self):
        return make_embedding(
            {
                "t": [1.0, 0.0],
                "near": [0.9, 0.1],
                "far": [0.0, 1.0],
                "mid": [0.5, 0.5],
                "anti": [-1.0, 0.0],
            }
        )

    def test_picks_highest_cosine(self):
        emb = self.base_embedding()
        ds = MultipleChoiceDataset(
            [("t", ["far", "near", "mid", "anti"], 1)]
        )
        rep = evaluate_multiple_choice(emb, ds)
        assert rep.value == 1.0
        assert rep.n_items == 1

    def test_oov_candidate_never_wins(self):
        emb = self.base_embedding()
        ds = MultipleChoiceDataset(
            [("t", ["zzz", "near", "far", "mid"], 1)]
        )
        assert evaluate_multiple_choice(emb, ds).value == 1.0

    def test_oov_target_skipped(self):
        emb = self.base_embedding()
        ds = MultipleChoiceDataset(
            [
                ("zzz", ["near", "far", "mid", "anti"], 0),
                ("t", ["near", "far", "mid", "anti"], 0),
            ]
        )
        rep = evaluate_multiple_choice(emb, ds)
        assert rep.coverage == pytest.approx(0.5)
        assert rep.n_items == 1
        assert rep.value == 1.0

    def test_tie_breaks_to_lowest_index(self):
        emb = make_embedding(
            {"t": [1.0, 0.0], "c1": [2.0, 0.0], "c2": [3.0, 0.0],
             "x": [0.0, 1.0]}
        )
        # c1 and c2 both at cosine 1; index 0 must win.
        ds = MultipleChoiceDataset([("t", ["c1", "c2", "x", "x"], 1)])
        assert evaluate_multiple_choice(emb, ds).value == 0.0
        ds = MultipleChoiceDataset([("t", ["c1", "c2", "x", "x"], 0)])
        assert evaluate_multiple_choice(emb, ds).value == 1.0

    def test_all_targets_oov(self):
        emb = self.base_embedding()
        ds = MultipleChoiceDataset(
            [("qqq", ["near", "far", "mid", "anti"], 0)]
        )
        with pytest.raises(DataError):
            evaluate_multiple_choice(emb, ds)

    def test_scale_invariance(self):
        emb = self.base_embedding()
        scaled = EmbeddingMatrix(emb.vocab, 17.0 * emb.data)
        ds = MultipleChoiceDataset(
            [
                ("t", ["far", "near", "mid", "anti"], 1),
                ("mid", ["near", "far", "anti", "t"], 0),
            ]
        )
        a = evaluate_multiple_choice(emb, ds)
        b = evaluate_multiple_choice(scaled, ds)
        assert a.value == b.value


class TestRBFKernel:
    def test_self_similarity_is_one(self):
        A = np.array([[1.0, 2.0], [3.0, -1.0]])
        K = rbf_kernel(A, A, gamma=0.7)
        assert np.allclose(np.diag(K), 1.0)
        assert np.allclose(K, K.T)

    def test_hand_value(self):
        K = rbf_kernel(np.array([[0.0]]), np.array([[1.0]]), gamma=0.5)
        assert K[0, 0] == pytest.approx(math.exp(-0.5))

    def test_bounds(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((6, 3))
        B = rng.standard_normal((4, 3))
        K = rbf_kernel(A, B, gamma=1.3)
        assert np.all(K > 0.0) and np.all(K <= 1.0)


def svm_feasible(model, tol=1e-6):
    a, y, C = model.alpha, model.y, model.C
    assert np.all(a >= -tol) and np.all(a <= C + tol)
    assert abs(float(np.dot(a, y))) <= 1e-6
    return True


class TestSVM:
    def test_two_point_problem(self):
        X = np.array([[0.0], [1.0]])
        y = np.array([1.0, -1.0])
        model = train_rbf_svm(X, y, C=10.0, gamma=1.0)
        assert model.converged
        assert np.array_equal(model.predict(X), y)
        assert svm_feasible(model)
        # symmetric problem: equal multipliers, decision zero midway
        assert model.alpha[0] == pytest.approx(model.alpha[1])
        assert model.decision_function(np.array([[0.5]]))[0] == pytest.approx(
            0.0, abs=1e-9
        )

    def test_xor_is_separated(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        y = np.array([1.0, 1.0, -1.0, -1.0])
        model = train_rbf_svm(X, y, C=10.0, gamma=1.0)
        assert model.converged
        assert np.array_equal(model.predict(X), y)
        assert kkt_violation(model) < 1e-3
        assert svm_feasible(model)

    def test_conflicting_duplicates(self):
        # Identical points with opposite labels: no separator exists,
        # training must still terminate with a feasible multiplier set.
        X = np.array([[1.0, 1.0], [1.0, 1.0]])
        y = np.array([1.0, -1.0])
        model = train_rbf_svm(X, y, C=2.0, gamma=1.0)
        assert svm_feasible(model)

    def test_random_battery(self):
        rng = np.random.default_rng(4)
        for trial in range(5):
            n = 30
            X = np.vstack(
                [
                    rng.standard_normal((n // 2, 2)) + [2.0, 0.0],
                    rng.standard_normal((n // 2, 2)) - [2.0, 0.0],
                ]
            )
            y = np.concatenate([np.ones(n // 2), -np.ones(n // 2)])
            model = train_rbf_svm(X, y, C=1.0, gamma=0.5)
            assert model.converged
            assert svm_feasible(model)
            assert kkt_violation(model) < 1e-3
            acc = float(np.mean(model.predict(X) == y))
            assert acc >= 0.9

    def test_input_validation(self):
        X = np.array([[0.0], [1.0]])
        with pytest.raises(DataError):
            train_rbf_svm(X, np.array([1.0, 2.0]), C=1.0, gamma=1.0)
        with pytest.raises(DataError):
            train_rbf_svm(X, np.array([1.0, 1.0]), C=1.0, gamma=1.0)
        with pytest.raises(DataError):
            train_rbf_svm(X[:1], np.array([1.0]), C=1.0, gamma=1.0)
        with pytest.raises(DataError):
            train_rbf_svm(X, np.array([1.0, -1.0]), C=0.0, gamma=1.0)
        with pytest.raises(DataError):
            train_rbf_svm(X, np.array([1.0, -1.0]), C=1.0, gamma=-1.0)


def separable_np_dataset(per_fold=6):
    """NP records whose label is encoded in the token cluster."""
    records = []
    fold_ids = []
    k = 0
    for fid in range(1, 11):
        for j in range(per_fold):
            if (j + fid) % 2 == 0:
                records.append((f"l{k}a", f"l{k}b", f"l{k}c", "left"))
            else:
                records.append((f"r{k}a", f"r{k}b", f"r{k}c", "right"))
            fold_ids.append(fid)
            k += 1
    return NPDataset(records, fold_ids)


def embedding_for_np(ds, noise=0.05, seed=0):
    rng = np.random.default_rng(seed)
    rows = {}
    for rec in ds.records:
        sign = 1.0 if rec[3] == "left" else -1.0
        for tok in rec[:3]:
            rows[tok] = [
                sign + noise * rng.standard_normal(),
                noise * rng.standard_normal(),
            ]
    return make_embedding(rows)


class TestNPBracketing:
    def test_separable_data_scores_high(self):
        ds = separable_np_dataset()
        emb = embedding_for_np(ds)
        rep = evaluate_np_bracketing(emb, ds)
        assert rep.value >= 0.95
        assert rep.coverage == 1.0
        assert rep.metric == "accuracy"

    def test_deterministic_given_seed(self):
        ds = separable_np_dataset()
        emb = embedding_for_np(ds)
        r1 = evaluate_np_bracketing(emb, ds, seed=5)
        r2 = evaluate_np_bracketing(emb, ds, seed=5)
        assert r1.value == r2.value

    def test_oov_reduces_coverage(self):
        ds = separable_np_dataset()
        emb = embedding_for_np(ds)
        # Drop one token's vector: its record becomes unusable.
        gone = ds.records[0][0]
        keep = [w for w in emb.vocab.words if w != gone]
        sub, _ = restrict_vocabulary(emb, keep)
        rep = evaluate_np_bracketing(sub, ds)
        assert rep.coverage < 1.0

    def test_empty_fold_is_an_error(self):
        ds = separable_np_dataset()
        emb = embedding_for_np(ds)
        # Remove every token of fold 10's records from the vocabulary.
        fold10 = set(ds.fold_indices(10))
        banned = {
            tok for i in fold10 for tok in ds.records[i][:3]
        }
        sub, _ = restrict_vocabulary(
            emb, [w for w in emb.vocab.words if w not in banned]
        )
        with pytest.raises(DataError):
            evaluate_np_bracketing(sub, ds)


class TestLoaders:
    def test_word_pairs_round_trip(self):
        text = "# comment\nCat\tDog\t7.5\n\nbird\tstone\t1.0\n"
        ds = load_word_pairs(io.StringIO(text))
        assert ds.records == [("cat", "dog", 7.5), ("bird", "stone", 1.0)]

    def test_word_pairs_case_preserved_when_asked(self):
        text = "Cat\tDog\t7.5\nbird\tstone\t1.0\n"
        ds = load_word_pairs(io.StringIO(text), lowercase=False)
        assert ds.records[0][0] == "Cat"

    def test_word_pairs_bad_score_line_number(self):
        text = "a\tb\t1.0\nc\td\tbad\n"
        with pytest.raises(ParseError) as err:
            load_word_pairs(io.StringIO(text))
        assert "line 2" in str(err.value)

    def test_word_pairs_wrong_field_count(self):
        with pytest.raises(ParseError):
            load_word_pairs(io.StringIO("a\tb\n" * 3))

    def test_multiple_choice_round_trip(self):
        text = "Tgt\tc1\tc2\tc3\tc4\t2\n"
        ds = load_multiple_choice(io.StringIO(text))
        assert ds.questions == [("tgt", ["c1", "c2", "c3", "c4"], 2)]

    def test_multiple_choice_bad_answer(self):
        with pytest.raises(ParseError):
            load_multiple_choice(io.StringIO("t\ta\tb\tc\td\t4\n"))
        with pytest.raises(ParseError) as err:
            load_multiple_choice(io.StringIO("t\ta\tb\tc\td\tx\n"))
        assert "line 1" in str(err.value)

    def test_np_records_round_trip(self):
        text = "A\tB\tC\tleft\t1\nd\te\tf\tright\t10\n"
        ds = load_np_records(io.StringIO(text))
        assert ds.records[0] == ("a", "b", "c", "left")
        assert ds.fold_ids == [1, 10]

    def test_np_records_bad_label_and_fold(self):
        with pytest.raises(ParseError):
            load_np_records(io.StringIO("a\tb\tc\tmiddle\t1\n"))
        with pytest.raises(ParseError):
            load_np_records(io.StringIO("a\tb\tc\tleft\t11\n"))

    def test_dataset_validation(self):
        with pytest.raises(DataError):
            WordPairDataset([("a", "b", 1.0)])  # too few
        with pytest.raises(DataError):
            WordPairDataset([("a", "b", float("nan")), ("c", "d", 1.0)])
        with pytest.raises(DataError):
            MultipleChoiceDataset([("t", ["a", "b"], 0)])
        with pytest.raises(DataError):
            NPDataset([("a", "b", "c", "left")], [11])


class TestReports:
    def test_write_reports_format(self):
        reports = [
            EvalReport("ws", "spearman_rho", 0.5, 1.0, 10),
            EvalReport("toefl", "accuracy", 0.875, 0.8, 64),
        ]
        buf = io.StringIO()
        write_reports(reports, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "task,metric,value,coverage,n_items"
        assert lines[1].startswith("ws,spearman_rho,0.5")
        assert len(lines) == 3
