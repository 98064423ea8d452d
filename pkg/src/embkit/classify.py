"""Document classification on tf-idf-weighted mean word vectors.

Features are the tf-idf-weighted average of a document's word vectors; the
classifier is one-vs-rest L2-regularized logistic regression trained by
full-batch gradient descent with backtracking line search.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from embkit.corpus import remove_stopwords, split_random
from embkit.errors import DataError
from embkit.store import EmbeddingStore

DEFAULT_C = 1.0
DEFAULT_TOLERANCE = 1e-4
DEFAULT_MAX_ITERS = 1000


@dataclass
class TfidfModel:
    """Smoothed inverse document frequencies fitted on training documents."""

    doc_freq: dict
    n_docs: int

    def idf(self, word: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.doc_freq.get(word, 0))) + 1.0


def fit_tfidf(train_docs) -> TfidfModel:
    """Count document frequencies over the training documents only."""
    docs = list(train_docs)
    if not docs:
        raise DataError("need at least one training document")
    df = Counter()
    for doc in docs:
        df.update(set(doc))
    return TfidfModel(dict(df), len(docs))


def doc_vector(doc, tfidf: TfidfModel, store: EmbeddingStore):
    """Tf-idf-weighted mean of the document's resolvable word vectors.

    Returns (vector, empty_flag); the flag is True when no token resolved,
    in which case the vector is all zeros.
    """
    counts = Counter(doc)
    total = np.zeros(store.dim, dtype=np.float64)
    total_weight = 0.0
    for word, count in counts.items():
        vec = store.vector(word)
        if vec is None:
            continue
        weight = count * tfidf.idf(word)
        total += weight * vec.astype(np.float64)
        total_weight += weight
    if total_weight == 0.0:
        return total, True
    return total / total_weight, False


@dataclass
class LogRegModel:
    classes: list
    weights: np.ndarray  # (n_classes, dim)
    biases: np.ndarray  # (n_classes,)


def logreg_objective(w, b, x, y, reg_strength):
    """L2-regularized logistic loss and its gradient for one binary problem.

    value = 0.5 ||w||^2 + C * sum log(1 + exp(-y (x w + b))), y in {-1, +1}.
    """
    z = x @ w + b
    margins = y * z
    value = 0.5 * float(w @ w) + reg_strength * float(np.logaddexp(0.0, -margins).sum())
    coeff = -y * _sigmoid(-margins)
    grad_w = w + reg_strength * (x.T @ coeff)
    grad_b = reg_strength * float(coeff.sum())
    return value, grad_w, grad_b


def _sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _fit_binary(x, y, reg_strength, tolerance, max_iters):
    """Gradient descent with Armijo backtracking on the binary objective."""
    w = np.zeros(x.shape[1], dtype=np.float64)
    b = 0.0
    value, grad_w, grad_b = logreg_objective(w, b, x, y, reg_strength)
    for _ in range(max_iters):
        grad_norm_sq = float(grad_w @ grad_w) + grad_b * grad_b
        if math.sqrt(grad_norm_sq) < tolerance:
            break
        step = 1.0
        while step > 1e-16:
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            new_value, new_gw, new_gb = logreg_objective(
                w_new, b_new, x, y, reg_strength
            )
            if new_value <= value - 1e-4 * step * grad_norm_sq:
                w, b = w_new, b_new
                value, grad_w, grad_b = new_value, new_gw, new_gb
                break
            step *= 0.5
        else:
            break  # no acceptable step; gradient is numerically flat
    return w, b


def train_ovr_logreg(
    features,
    labels,
    reg_strength: float = DEFAULT_C,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> LogRegModel:
    """One binary classifier per class; prediction is the argmax score."""
    x = np.asarray(features, dtype=np.float64)
    if not np.isfinite(x).all():
        raise DataError("features contain non-finite values")
    labels = list(labels)
    if len(labels) != x.shape[0]:
        raise ValueError("features and labels length mismatch")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise DataError("need at least 2 distinct classes")
    weights = np.zeros((len(classes), x.shape[1]), dtype=np.float64)
    biases = np.zeros(len(classes), dtype=np.float64)
    for k, cls in enumerate(classes):
        y = np.array([1.0 if lab == cls else -1.0 for lab in labels])
        weights[k], biases[k] = _fit_binary(x, y, reg_strength, tolerance, max_iters)
    return LogRegModel(classes, weights, biases)


def predict(model: LogRegModel, feature_vector) -> str:
    """Label of the highest-scoring class; ties go to the first class."""
    x = np.asarray(feature_vector, dtype=np.float64)
    if x.shape != (model.weights.shape[1],):
        raise ValueError(
            f"feature dimension {x.shape} does not match model "
            f"({model.weights.shape[1]},)"
        )
    scores = model.weights @ x + model.biases
    return model.classes[int(np.argmax(scores))]


def predict_batch(model: LogRegModel, features) -> list:
    return [predict(model, row) for row in np.asarray(features, dtype=np.float64)]


@dataclass
class ClassificationReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: dict  # label -> {"precision", "recall", "f1", "support"}
    labels: list
    confusion: list  # row = gold label, column = predicted label
    config: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "per_class": self.per_class,
            "labels": self.labels,
            "confusion": self.confusion,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def render_table(self) -> str:
        lines = [
            f"accuracy        {100 * self.accuracy:.2f}%",
            f"macro precision {100 * self.macro_precision:.2f}%",
            f"macro recall    {100 * self.macro_recall:.2f}%",
            f"macro f1        {100 * self.macro_f1:.2f}%",
            "",
            "class  precision  recall  f1  support",
        ]
        for label in sorted(self.per_class):
            m = self.per_class[label]
            lines.append(
                f"{label}  {m['precision']:.4f}  {m['recall']:.4f}  "
                f"{m['f1']:.4f}  {m['support']}"
            )
        return "\n".join(lines) + "\n"


def evaluate_classification(pred_labels, gold_labels) -> ClassificationReport:
    """Accuracy plus macro precision/recall/F1 over the gold label set."""
    pred = list(pred_labels)
    gold = list(gold_labels)
    if len(pred) != len(gold):
        raise ValueError("prediction and gold label lists differ in length")
    if not gold:
        raise ValueError("cannot evaluate an empty label list")
    labels = sorted(set(gold) | set(pred))
    pos = {lab: i for i, lab in enumerate(labels)}
    confusion = [[0] * len(labels) for _ in labels]
    for p, g in zip(pred, gold):
        confusion[pos[g]][pos[p]] += 1
    gold_set = sorted(set(gold))
    per_class = {}
    for lab in gold_set:
        i = pos[lab]
        tp = confusion[i][i]
        fp = sum(confusion[r][i] for r in range(len(labels))) - tp
        fn = sum(confusion[i]) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[lab] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": tp + fn,
        }
    accuracy = sum(p == g for p, g in zip(pred, gold)) / len(gold)
    return ClassificationReport(
        accuracy=accuracy,
        macro_precision=sum(m["precision"] for m in per_class.values()) / len(gold_set),
        macro_recall=sum(m["recall"] for m in per_class.values()) / len(gold_set),
        macro_f1=sum(m["f1"] for m in per_class.values()) / len(gold_set),
        per_class=per_class,
        labels=labels,
        confusion=confusion,
    )


def run_classification_experiment(
    labeled_docs,
    store: EmbeddingStore,
    stoplist,
    split_seed: int,
    train_fraction: float = 0.8,
    reg_strength: float = DEFAULT_C,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> ClassificationReport:
    """Full pipeline: filter, split, fit tf-idf on train, train, evaluate.

    Tf-idf statistics come from the training split only; the test split
    never influences the fitted model.
    """
    filtered = [
        (doc.label, remove_stopwords(doc.tokens, stoplist)) for doc in labeled_docs
    ]
    train, test = split_random(filtered, 1.0 - train_fraction, split_seed)
    for name, part in (("train", train), ("test", test)):
        if len({label for label, _ in part}) < 2:
            raise DataError(f"{name} split has fewer than 2 classes")
    tfidf = fit_tfidf([tokens for _, tokens in train])
    train_x = np.vstack([doc_vector(tokens, tfidf, store)[0] for _, tokens in train])
    model = train_ovr_logreg(
        train_x,
        [label for label, _ in train],
        reg_strength=reg_strength,
        tolerance=tolerance,
        max_iters=max_iters,
    )
    test_x = np.vstack([doc_vector(tokens, tfidf, store)[0] for _, tokens in test])
    predictions = predict_batch(model, test_x)
    report = evaluate_classification(predictions, [label for label, _ in test])
    report.config = {
        "split_seed": split_seed,
        "train_fraction": train_fraction,
        "reg_strength": reg_strength,
        "tolerance": tolerance,
        "max_iters": max_iters,
    }
    return report
