"""Query triage: route each user turn to one of four handling classes.

The reference model is a multinomial naive Bayes over unigram+bigram counts
with add-one smoothing -- deterministic, dependency-light, adequate for a
four-way triage task. Anything implementing the TurnClassifier protocol can
replace it (a fine-tuned transformer behind the same classify contract, for
example); the orchestrator only sees the protocol.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import random
import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError


class QueryClass(str, enum.Enum):
    HIGH = "high"
    LOW = "low"
    MODIFY = "modify"
    MISCELLANEOUS = "miscellaneous"


# Fixed order used for argmax tie-breaks and confusion-matrix indexing.
CLASS_ORDER: tuple[QueryClass, ...] = (
    QueryClass.HIGH,
    QueryClass.LOW,
    QueryClass.MODIFY,
    QueryClass.MISCELLANEOUS,
)

_WHITESPACE_RE = re.compile(r"\s+")


def preprocess(text: str) -> str:
    """Lowercase, strip Unicode punctuation, collapse whitespace.

    Idempotent: applying it twice gives the same string.
    """
    lowered = text.lower()
    cleaned = "".join(ch for ch in lowered if not unicodedata.category(ch).startswith("P"))
    return _WHITESPACE_RE.sub(" ", cleaned).strip()


@dataclass(frozen=True)
class LabeledQuery:
    text: str
    gold: QueryClass
    alternates: frozenset[QueryClass] = frozenset()

    def __post_init__(self):
        if self.gold in self.alternates:
            object.__setattr__(self, "alternates", self.alternates - {self.gold})


@dataclass(frozen=True)
class ClassificationResult:
    query_class: QueryClass
    confidence: float
    scores: dict[QueryClass, float]


class TurnClassifier(Protocol):
    def classify(self, text: str) -> ClassificationResult: ...


# ---------------------------------------------------------------------------
# Corpus I/O and splitting
# ---------------------------------------------------------------------------

CORPUS_HEADER = ["text", "gold", "alternates"]

# Reference split proportions: 250 train / 53 validation / 53 test.
_SPLIT_TOTAL = 356
_SPLIT_HOLDOUT = 53


def read_corpus(source: io.TextIOBase | str) -> list[LabeledQuery]:
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.DictReader(source)
    if reader.fieldnames != CORPUS_HEADER:
        raise ValueError(f"corpus header must be {CORPUS_HEADER}, got {reader.fieldnames}")
    out = []
    for row in reader:
        alternates = frozenset(
            QueryClass(a.strip()) for a in (row["alternates"] or "").split(";") if a.strip()
        )
        out.append(LabeledQuery(text=row["text"], gold=QueryClass(row["gold"]), alternates=alternates))
    return out


def write_corpus(corpus: Iterable[LabeledQuery]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CORPUS_HEADER)
    for q in corpus:
        writer.writerow([q.text, q.gold.value, ";".join(sorted(a.value for a in q.alternates))])
    return buf.getvalue()


def split_corpus(
    corpus: Sequence[LabeledQuery], seed: int
) -> tuple[list[LabeledQuery], list[LabeledQuery], list[LabeledQuery]]:
    """Shuffle deterministically and partition into train/validation/test.

    Sizes follow the 250/53/53 proportions (exact at 356 items); validation
    and test sizes are rounded half-up, the remainder goes to train. The
    three parts are an exact partition of the input.
    """
    if len(corpus) < 4:
        raise ValueError(f"corpus must hold at least 4 queries, got {len(corpus)}")
    items = list(corpus)
    random.Random(seed).shuffle(items)
    n = len(items)
    holdout = int(n * _SPLIT_HOLDOUT / _SPLIT_TOTAL + 0.5)
    train_size = n - 2 * holdout
    train = items[:train_size]
    validation = items[train_size:train_size + holdout]
    test = items[train_size + holdout:]
    return train, validation, test


# ---------------------------------------------------------------------------
# Reference model
# ---------------------------------------------------------------------------


def _ngrams(text: str) -> list[str]:
    tokens = preprocess(text).split()
    grams = list(tokens)
    grams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return grams


def _check_texts(texts: Sequence[str]) -> list[str]:
    if isinstance(texts, str):
        raise TypeError("expected a sequence of strings, got a single string")
    out = []
    for i, t in enumerate(texts):
        if not isinstance(t, str):
            raise TypeError(f"texts[{i}] is not a string: {t!r}")
        out.append(t)
    return out


def _check_labels(labels: Sequence[QueryClass | str]) -> list[QueryClass]:
    return [QueryClass(label) for label in labels]


class QueryClassifier(BaseEstimator, ClassifierMixin):
    """Multinomial naive Bayes over unigram+bigram counts.

    Smoothing is add-`alpha` over the training vocabulary; n-grams never
    seen in training are ignored at prediction time, so a fully novel
    sentence falls back to the class priors.
    """

    def __init__(self, alpha: float = 1.0):
        self.alpha = alpha

    def fit(self, texts: Sequence[str], labels: Sequence[QueryClass | str]) -> "QueryClassifier":
        texts = _check_texts(texts)
        labels = _check_labels(labels)
        if len(texts) != len(labels):
            raise ValueError(f"{len(texts)} texts but {len(labels)} labels")
        present = set(labels)
        for cls in CLASS_ORDER:
            if cls not in present:
                raise ValueError(f"class {cls.value!r} absent from training set")

        class_counts = {cls: 0 for cls in CLASS_ORDER}
        gram_counts: dict[QueryClass, dict[str, int]] = {cls: {} for cls in CLASS_ORDER}
        vocabulary: set[str] = set()
        for text, label in zip(texts, labels):
            class_counts[label] += 1
            counts = gram_counts[label]
            for gram in _ngrams(text):
                counts[gram] = counts.get(gram, 0) + 1
                vocabulary.add(gram)

        self.vocabulary_ = sorted(vocabulary)
        self.class_counts_ = class_counts
        self.gram_counts_ = gram_counts
        self.total_grams_ = {cls: sum(gram_counts[cls].values()) for cls in CLASS_ORDER}
        total = len(texts)
        self.log_priors_ = {cls: math.log(class_counts[cls] / total) for cls in CLASS_ORDER}
        return self

    def _ensure_fitted(self):
        if not hasattr(self, "vocabulary_"):
            raise NotFittedError("QueryClassifier is not fitted; call fit first")

    def _log_joint(self, text: str) -> dict[QueryClass, float]:
        vocab_size = len(self.vocabulary_)
        known = set(self.vocabulary_)
        grams = [g for g in _ngrams(text) if g in known]
        joint = {}
        for cls in CLASS_ORDER:
            denom = self.total_grams_[cls] + self.alpha * vocab_size
            logp = self.log_priors_[cls]
            counts = self.gram_counts_[cls]
            for gram in grams:
                logp += math.log((counts.get(gram, 0) + self.alpha) / denom)
            joint[cls] = logp
        return joint

    def classify(self, text: str) -> ClassificationResult:
        """Posterior argmax with fixed-order tie-break; preprocess applied internally."""
        self._ensure_fitted()
        joint = self._log_joint(text)
        peak = max(joint.values())
        unnormalized = {cls: math.exp(lp - peak) for cls, lp in joint.items()}
        total = sum(unnormalized.values())
        scores = {cls: unnormalized[cls] / total for cls in CLASS_ORDER}
        best = max(CLASS_ORDER, key=lambda cls: (scores[cls], -CLASS_ORDER.index(cls)))
        return ClassificationResult(query_class=best, confidence=scores[best], scores=scores)

    def predict(self, texts: Sequence[str]) -> list[QueryClass]:
        return [self.classify(t).query_class for t in _check_texts(texts)]

    def predict_proba(self, texts: Sequence[str]) -> list[dict[QueryClass, float]]:
        return [self.classify(t).scores for t in _check_texts(texts)]

    # -- persistence: canonical JSON so identical training runs produce
    #    byte-identical model files.

    def to_json(self) -> str:
        self._ensure_fitted()
        payload = {
            "model": "query-classifier-nb",
            "alpha": self.alpha,
            "class_counts": {cls.value: self.class_counts_[cls] for cls in CLASS_ORDER},
            "gram_counts": {
                cls.value: dict(sorted(self.gram_counts_[cls].items())) for cls in CLASS_ORDER
            },
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_json(cls, raw: str) -> "QueryClassifier":
        payload = json.loads(raw)
        if payload.get("model") != "query-classifier-nb":
            raise ValueError("not a query classifier model file")
        model = cls(alpha=payload["alpha"])
        model.class_counts_ = {c: payload["class_counts"][c.value] for c in CLASS_ORDER}
        model.gram_counts_ = {c: dict(payload["gram_counts"][c.value]) for c in CLASS_ORDER}
        vocabulary: set[str] = set()
        for counts in model.gram_counts_.values():
            vocabulary.update(counts)
        model.vocabulary_ = sorted(vocabulary)
        model.total_grams_ = {c: sum(model.gram_counts_[c].values()) for c in CLASS_ORDER}
        total = sum(model.class_counts_.values())
        model.log_priors_ = {c: math.log(model.class_counts_[c] / total) for c in CLASS_ORDER}
        return model


def train(train_set: Sequence[LabeledQuery], alpha: float = 1.0) -> QueryClassifier:
    """Fit the reference model on a labeled corpus slice."""
    return QueryClassifier(alpha=alpha).fit([q.text for q in train_set], [q.gold for q in train_set])


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: dict[QueryClass, PerClassMetrics]
    confusion: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_class": {
                cls.value: {
                    "precision": pc.precision,
                    "recall": pc.recall,
                    "f1": pc.f1,
                    "support": pc.support,
                }
                for cls, pc in self.per_class.items()
            },
            "confusion": [list(row) for row in self.confusion],
        }


def metrics_from_confusion(confusion: Sequence[Sequence[int]], accuracy: float | None = None) -> Metrics:
    """Support-weighted precision/recall/F1 from a gold-by-predicted count matrix.

    Weighted recall always equals trace/total, i.e. accuracy -- the signature
    of support-weighted averaging. An externally supplied accuracy (permissive
    scoring) overrides the strict trace/total value without touching the
    per-class numbers.
    """
    n = len(CLASS_ORDER)
    matrix = [list(row) for row in confusion]
    if len(matrix) != n or any(len(row) != n for row in matrix):
        raise ValueError(f"confusion matrix must be {n}x{n}")
    total = sum(sum(row) for row in matrix)
    if total == 0:
        raise ValueError("confusion matrix is empty")

    per_class: dict[QueryClass, PerClassMetrics] = {}
    for i, cls in enumerate(CLASS_ORDER):
        support = sum(matrix[i])
        predicted = sum(matrix[r][i] for r in range(n))
        tp = matrix[i][i]
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = PerClassMetrics(precision, recall, f1, support)

    weighted = {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    for cls in CLASS_ORDER:
        pc = per_class[cls]
        weight = pc.support / total
        weighted["precision"] += weight * pc.precision
        weighted["recall"] += weight * pc.recall
        weighted["f1"] += weight * pc.f1

    strict_accuracy = sum(matrix[i][i] for i in range(n)) / total
    return Metrics(
        accuracy=strict_accuracy if accuracy is None else accuracy,
        precision=weighted["precision"],
        recall=weighted["recall"],
        f1=weighted["f1"],
        per_class=per_class,
        confusion=tuple(tuple(row) for row in matrix),
    )


def is_acceptable(prediction: QueryClass, query: LabeledQuery, permissive: bool) -> bool:
    if prediction == query.gold:
        return True
    return permissive and prediction in query.alternates


def evaluate(model: TurnClassifier, labeled_set: Sequence[LabeledQuery], permissive: bool = False) -> Metrics:
    """Score a classifier against gold labels.

    Strict mode scores against gold only. Permissive mode additionally counts
    a prediction listed in the query's alternates as correct -- but only for
    accuracy; the confusion matrix and per-class metrics stay strict so they
    remain comparable across modes.
    """
    if not labeled_set:
        raise ValueError("labeled_set must be non-empty")
    index = {cls: i for i, cls in enumerate(CLASS_ORDER)}
    confusion = [[0] * len(CLASS_ORDER) for _ in CLASS_ORDER]
    acceptable = 0
    for query in labeled_set:
        prediction = model.classify(query.text).query_class
        confusion[index[query.gold]][index[prediction]] += 1
        if is_acceptable(prediction, query, permissive):
            acceptable += 1
    accuracy = acceptable / len(labeled_set)
    return metrics_from_confusion(confusion, accuracy=accuracy if permissive else None)
