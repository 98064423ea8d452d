import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_store
from embkit.classify import (
    LogRegModel,
    doc_vector,
    evaluate_classification,
    fit_tfidf,
    logreg_objective,
    predict,
    predict_batch,
    run_classification_experiment,
    train_ovr_logreg,
)
from embkit.corpus import LabeledDocument, split_random
from embkit.errors import DataError
from embkit.rng import SplitMix64
from embkit.store import EmbeddingStore


class TestTfidf:
    def test_word_in_every_doc_has_idf_one(self):
        model = fit_tfidf([["a", "b"], ["a", "c"]])
        assert model.idf("a") == pytest.approx(1.0)

    def test_smoothed_formula(self):
        model = fit_tfidf([["a"], ["b"]])
        assert model.idf("a") == pytest.approx(math.log(3 / 2) + 1, abs=1e-9)
        assert model.idf("a") == pytest.approx(1.405465, abs=1e-6)

    def test_unseen_word(self):
        model = fit_tfidf([["a"], ["b"]])
        assert model.idf("zzz") == pytest.approx(math.log(3.0) + 1, abs=1e-9)
        assert model.idf("zzz") == pytest.approx(2.098612, abs=1e-6)

    def test_df_counts_documents_not_occurrences(self):
        model = fit_tfidf([["a", "a", "a"], ["b"]])
        assert model.doc_freq["a"] == 1

    def test_requires_a_document(self):
        with pytest.raises(DataError):
            fit_tfidf([])


class TestDocVector:
    def test_single_token_doc_is_its_vector(self):
        store = random_store(["t", "x"], 6, seed=1)
        tfidf = fit_tfidf([["t"], ["x"]])
        vec, empty = doc_vector(["t"], tfidf, store)
        assert not empty
        np.testing.assert_allclose(vec, store.vector("t"), rtol=1e-6)

    def test_equal_weights_give_midpoint(self):
        store = random_store(["a", "b"], 4, seed=2)
        tfidf = fit_tfidf([["a", "b"]])  # both idf = ln(2/2)+1 = 1
        vec, _ = doc_vector(["a", "b"], tfidf, store)
        expected = (store.vector("a").astype(np.float64) + store.vector("b")) / 2
        np.testing.assert_allclose(vec, expected, rtol=1e-6)

    def test_weighted_formula(self):
        # doc {a:2, b:1} with idf(a)=1, idf(b)=2 -> (2 v_a + 2 v_b) / 4
        store = random_store(["a", "b"], 4, seed=3)
        tfidf = fit_tfidf([["a"]])
        tfidf.doc_freq = {"a": 1}
        tfidf.n_docs = 1
        idf_a = tfidf.idf("a")
        idf_b = tfidf.idf("b")
        assert idf_a == pytest.approx(1.0)
        vec, _ = doc_vector(["a", "a", "b"], tfidf, store)
        va = store.vector("a").astype(np.float64)
        vb = store.vector("b").astype(np.float64)
        expected = (2 * idf_a * va + idf_b * vb) / (2 * idf_a + idf_b)
        np.testing.assert_allclose(vec, expected, rtol=1e-9)

    def test_empty_features_flag(self):
        store = random_store(["a"], 4, seed=4)
        tfidf = fit_tfidf([["a"]])
        vec, empty = doc_vector(["zz", "qq"], tfidf, store)
        assert empty
        np.testing.assert_array_equal(vec, np.zeros(4))

    def test_output_in_convex_hull(self):
        store = random_store(["a", "b", "c"], 3, seed=5)
        tfidf = fit_tfidf([["a", "b"], ["c"]])
        vec, _ = doc_vector(["a", "b", "c", "c"], tfidf, store)
        rows = store.vectors.astype(np.float64)
        lo = rows.min(axis=0) - 1e-9
        hi = rows.max(axis=0) + 1e-9
        assert np.all(vec >= lo) and np.all(vec <= hi)


def separable_set(n_per_class=20, seed=3):
    rng = SplitMix64(seed)
    xs, ys = [], []
    for _ in range(n_per_class):
        xs.append([3.0 + rng.uniform_range(-1, 1), 3.0 + rng.uniform_range(-1, 1)])
        ys.append("pos")
        xs.append([-3.0 + rng.uniform_range(-1, 1), -3.0 + rng.uniform_range(-1, 1)])
        ys.append("neg")
    return np.array(xs), ys


class TestLogReg:
    def test_linearly_separable_reaches_full_train_accuracy(self):
        x, y = separable_set()
        model = train_ovr_logreg(x, y)
        assert predict_batch(model, x) == y

    def test_margin_oracle_agreement(self):
        # any point on the positive blob side must score pos higher
        x, y = separable_set()
        model = train_ovr_logreg(x, y)
        for point, label in zip(x, y):
            margin_label = "pos" if point.sum() > 0 else "neg"
            assert predict(model, point) == margin_label == label

    def test_objective_gradient_matches_finite_differences(self):
        x, y_labels = separable_set(n_per_class=10)
        y = np.array([1.0 if lab == "pos" else -1.0 for lab in y_labels])
        rng = SplitMix64(11)
        w = np.array([rng.uniform_range(-1, 1) for _ in range(2)])
        b = rng.uniform_range(-1, 1)
        _, grad_w, grad_b = logreg_objective(w, b, x, y, 1.0)
        h = 1e-6
        num_w = np.zeros_like(w)
        for i in range(w.size):
            wp, wm = w.copy(), w.copy()
            wp[i] += h
            wm[i] -= h
            num_w[i] = (
                logreg_objective(wp, b, x, y, 1.0)[0]
                - logreg_objective(wm, b, x, y, 1.0)[0]
            ) / (2 * h)
        num_b = (
            logreg_objective(w, b + h, x, y, 1.0)[0]
            - logreg_objective(w, b - h, x, y, 1.0)[0]
        ) / (2 * h)
        assert np.linalg.norm(num_w - grad_w) / np.linalg.norm(num_w) < 1e-4
        assert abs(num_b - grad_b) / abs(num_b) < 1e-4

    def test_objective_non_increasing_over_iterations(self):
        x, y_labels = separable_set()
        y = np.array([1.0 if lab == "pos" else -1.0 for lab in y_labels])
        values = []
        w = np.zeros(2)
        b = 0.0
        value, gw, gb = logreg_objective(w, b, x, y, 1.0)
        for _ in range(25):
            values.append(value)
            step = 1.0
            gnorm_sq = float(gw @ gw) + gb * gb
            while step > 1e-16:
                w2, b2 = w - step * gw, b - step * gb
                v2, gw2, gb2 = logreg_objective(w2, b2, x, y, 1.0)
                if v2 <= value - 1e-4 * step * gnorm_sq:
                    w, b, value, gw, gb = w2, b2, v2, gw2, gb2
                    break
                step *= 0.5
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_duplicated_points_with_halved_c_same_argmax(self):
        x, y = separable_set()
        base = train_ovr_logreg(x, y, reg_strength=1.0)
        doubled = train_ovr_logreg(np.vstack([x, x]), y + y, reg_strength=0.5)
        assert predict_batch(base, x) == predict_batch(doubled, x)

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            train_ovr_logreg(np.zeros((3, 2)), ["a", "a", "a"])

    def test_non_finite_features_rejected(self):
        with pytest.raises(DataError):
            train_ovr_logreg(np.array([[1.0], [np.nan]]), ["a", "b"])

    def test_sigmoid_scores_in_open_interval(self):
        x, y = separable_set()
        model = train_ovr_logreg(x, y)
        scores = model.weights @ x.T + model.biases[:, None]
        probs = 1.0 / (1.0 + np.exp(-scores))
        assert np.all(probs > 0.0) and np.all(probs < 1.0)


class TestPredict:
    def test_tie_goes_to_first_class(self):
        model = LogRegModel(["a", "b"], np.zeros((2, 3)), np.zeros(2))
        assert predict(model, np.ones(3)) == "a"

    def test_dominant_class_wins(self):
        model = LogRegModel(
            ["a", "b"], np.array([[0.0, 0.0], [5.0, 5.0]]), np.zeros(2)
        )
        assert predict(model, np.ones(2)) == "b"

    def test_dimension_mismatch(self):
        model = LogRegModel(["a", "b"], np.zeros((2, 3)), np.zeros(2))
        with pytest.raises(ValueError):
            predict(model, np.ones(4))


class TestEvaluateClassification:
    def test_perfect_predictions(self):
        report = evaluate_classification(["a", "b"], ["a", "b"])
        assert report.accuracy == 1.0
        assert report.macro_precision == 1.0
        assert report.macro_recall == 1.0
        assert report.macro_f1 == 1.0

    def test_hand_computed_confusion(self):
        report = evaluate_classification(["A", "B", "B", "B"], ["A", "A", "B", "B"])
        assert report.accuracy == pytest.approx(0.75)
        assert report.macro_precision == pytest.approx((1 + 2 / 3) / 2)
        assert report.macro_recall == pytest.approx(0.75)
        assert report.macro_f1 == pytest.approx((2 / 3 + 0.8) / 2)

    def test_total_miss(self):
        report = evaluate_classification(["B", "A"], ["A", "B"])
        assert report.accuracy == 0.0
        assert report.macro_f1 == 0.0

    def test_confusion_rows_sum_to_gold_counts(self):
        gold = ["a", "b", "a", "c", "b", "a"]
        pred = ["a", "a", "b", "c", "b", "c"]
        report = evaluate_classification(pred, gold)
        for label, row in zip(report.labels, report.confusion):
            assert sum(row) == gold.count(label)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            evaluate_classification(["a"], ["a", "b"])

    @given(st.permutations(list(range(8))))
    @settings(max_examples=50)
    def test_permutation_invariance(self, perm):
        gold = ["a", "b", "a", "b", "c", "c", "a", "b"]
        pred = ["a", "b", "b", "b", "c", "a", "a", "c"]
        base = evaluate_classification(pred, gold)
        shuffled = evaluate_classification(
            [pred[i] for i in perm], [gold[i] for i in perm]
        )
        assert shuffled.accuracy == base.accuracy
        assert shuffled.macro_f1 == base.macro_f1
        assert shuffled.per_class == base.per_class


def two_topic_corpus(n_docs=60):
    """Class-disjoint vocabularies; trivially separable with good vectors."""
    rng = SplitMix64(17)
    docs = []
    for i in range(n_docs):
        if i % 2 == 0:
            words = ["goal", "match", "team"]
            label = "sport"
        else:
            words = ["paint", "gallery", "artist"]
            label = "art"
        tokens = [words[rng.randint(3)] for _ in range(8)]
        docs.append(LabeledDocument(label, tokens))
    return docs


def orthogonal_store():
    words = ["goal", "match", "team", "paint", "gallery", "artist"]
    return EmbeddingStore(words, np.eye(6, dtype=np.float32))


class TestExperiment:
    def test_disjoint_vocabulary_corpus_fully_separable(self):
        report = run_classification_experiment(
            two_topic_corpus(), orthogonal_store(), set(), split_seed=5
        )
        assert report.accuracy == 1.0
        assert report.macro_f1 == 1.0

    def test_deterministic(self):
        docs = two_topic_corpus()
        store = orthogonal_store()
        r1 = run_classification_experiment(docs, store, set(), split_seed=5)
        r2 = run_classification_experiment(docs, store, set(), split_seed=5)
        assert r1.to_json() == r2.to_json()

    def test_config_recorded(self):
        report = run_classification_experiment(
            two_topic_corpus(), orthogonal_store(), set(), split_seed=5
        )
        assert report.config["split_seed"] == 5
        assert report.config["train_fraction"] == 0.8
        assert report.config["reg_strength"] == 1.0

    def test_stopwords_removed_before_split(self):
        docs = two_topic_corpus()
        poisoned = [
            LabeledDocument(d.label, d.tokens + ["common"]) for d in docs
        ]
        report = run_classification_experiment(
            poisoned, orthogonal_store(), {"common"}, split_seed=5
        )
        assert report.accuracy == 1.0

    def test_single_class_split_rejected(self):
        docs = [LabeledDocument("only", ["goal"]) for _ in range(10)]
        with pytest.raises(DataError):
            run_classification_experiment(docs, orthogonal_store(), set(), split_seed=1)

    def test_tfidf_fitted_on_train_only(self):
        docs = two_topic_corpus()
        filtered = [(d.label, d.tokens) for d in docs]
        train, test = split_random(filtered, 0.2, 5)
        base = fit_tfidf([tokens for _, tokens in train])
        # scramble exactly the documents that land in the test split; the
        # split is positional, so the fitted statistics must not move
        test_ids = {id(item) for item in test}
        scrambled = [
            (label, ["junk"] * 3) if id(item) in test_ids else item
            for item in filtered
            for label, _ in [item]
        ]
        train2, _ = split_random(scrambled, 0.2, 5)
        refit = fit_tfidf([tokens for _, tokens in train2])
        assert base.doc_freq == refit.doc_freq
        assert base.n_docs == refit.n_docs
