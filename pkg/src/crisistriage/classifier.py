"""Self-contained text classifiers: normalization + vocabulary + model.

A saved classifier file carries everything needed to reproduce its
predictions, so a model trained on one machine routes identically on
another. The embedded vocabulary hash guards against mixing a model with
the wrong vocabulary.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from . import LABELS_BY_TASK, TASKS
from .models import (
    BinaryModel,
    LrHyper,
    MnbModel,
    ModelError,
    OvrModel,
    model_from_json_dict,
    model_to_json_dict,
    positive_probability,
    predict_mnb,
    predict_ovr,
    train_lr,
    train_mnb,
    train_ovr,
)
from .preprocess import NormalizationConfig, normalize, tokenize
from .vectorize import SparseVector, Vocabulary, fit_vocabulary, transform

SCHEMA = "crisistriage/model-v1"


class ClassifierError(Exception):
    pass


@dataclass(frozen=True)
class TextClassifier:
    """Maps raw text to a label set for one task.

    Binary tasks ("informative") predict a singleton or empty set;
    multi-label tasks predict any subset of the task's labels.
    """

    task: str
    normalization: NormalizationConfig
    vocabulary: Vocabulary
    model: BinaryModel | OvrModel
    threshold: float = 0.5

    def __post_init__(self):
        if self.task not in TASKS:
            raise ClassifierError(f"unknown task {self.task!r}")

    def _vector(self, text: str) -> SparseVector:
        return transform(tokenize(normalize(text, self.normalization)), self.vocabulary)

    def predict_one(self, text: str) -> tuple[frozenset[str], dict[str, float]]:
        x = self._vector(text)
        if isinstance(self.model, OvrModel):
            return predict_ovr(self.model, x)
        p = positive_probability(self.model, x)
        if isinstance(self.model, MnbModel):
            positive = predict_mnb(self.model, x)[0] == 1
        else:
            positive = p > self.threshold
        (label,) = LABELS_BY_TASK[self.task]
        return (frozenset({label}) if positive else frozenset()), {label: p}

    def predict(self, texts: Sequence[str]) -> tuple[list[frozenset[str]], list[dict[str, float]]]:
        labels = []
        scores = []
        for text in texts:
            ls, sc = self.predict_one(text)
            labels.append(ls)
            scores.append(sc)
        return labels, scores

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "task": self.task,
            "threshold": self.threshold,
            "normalization": self.normalization.to_json_dict(),
            "vocabulary": self.vocabulary.to_json_dict(),
            "model": model_to_json_dict(self.model, self.vocabulary.sha256()),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> TextClassifier:
        if d.get("schema") != SCHEMA:
            raise ClassifierError(f"unsupported model file schema {d.get('schema')!r}")
        vocabulary = Vocabulary.from_json_dict(d["vocabulary"])
        try:
            model = model_from_json_dict(d["model"], expect_vocab_sha256=vocabulary.sha256())
        except ModelError as exc:
            raise ClassifierError(str(exc)) from exc
        return cls(
            task=d["task"],
            normalization=NormalizationConfig.from_json_dict(d["normalization"]),
            vocabulary=vocabulary,
            model=model,
            threshold=float(d.get("threshold", 0.5)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> TextClassifier:
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ClassifierError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(d, dict):
            raise ClassifierError(f"{path}: expected a JSON object")
        return cls.from_json_dict(d)


def fit_text_classifier(
    task: str,
    texts: Sequence[str],
    label_sets: Sequence[frozenset[str] | set[str]],
    base: str = "mnb",
    normalization: NormalizationConfig | None = None,
    alpha: float = 1.0,
    hyper: LrHyper | None = None,
    threshold: float = 0.5,
) -> TextClassifier:
    """Fit the vocabulary on the given texts and train the task's model.

    Binary tasks require both classes in the data; multi-label tasks fall
    back to constant predictors for degenerate label columns.
    """
    if task not in TASKS:
        raise ClassifierError(f"unknown task {task!r}")
    if base not in ("mnb", "lr"):
        raise ClassifierError(f"unknown base model {base!r} (expected 'mnb' or 'lr')")
    if len(texts) != len(label_sets):
        raise ClassifierError("texts and label_sets length mismatch")
    if not texts:
        raise ClassifierError("need at least one training example")
    normalization = normalization if normalization is not None else NormalizationConfig()
    docs = [tokenize(normalize(t, normalization)) for t in texts]
    vocabulary = fit_vocabulary(docs)
    X = [transform(doc, vocabulary) for doc in docs]

    task_labels = LABELS_BY_TASK[task]
    model: BinaryModel | OvrModel
    if len(task_labels) == 1:
        (label,) = task_labels
        y = [1 if label in s else 0 for s in label_sets]
        model = train_mnb(X, y, alpha=alpha) if base == "mnb" else train_lr(X, y, hyper=hyper)
    else:
        Y = {label: [1 if label in s else 0 for s in label_sets] for label in task_labels}
        model = train_ovr(X, Y, base=base, alpha=alpha, hyper=hyper,
                          thresholds={label: threshold for label in task_labels})
    return TextClassifier(
        task=task,
        normalization=normalization,
        vocabulary=vocabulary,
        model=model,
        threshold=threshold,
    )
