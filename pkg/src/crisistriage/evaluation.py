"""Metrics, multi-run experiments, and cross-event evaluation.

Every metric follows one zero-division convention: precision, recall,
and F1 are 0 when their denominator is 0, with a warning naming the
label. Experiments repeat the split/train/evaluate cycle over distinct
seeds; model training itself is deterministic, so the seeds fully
determine the report.
"""

from __future__ import annotations

import json
import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from statistics import fmean

from . import LABELS_BY_TASK, TASKS
from .classifier import TextClassifier, fit_text_classifier
from .corpus import LabeledCollection, SplitConfig, split_train_test
from .models import LrHyper
from .preprocess import NormalizationConfig

# class names used when a binary task is scored over both classes
BINARY_CLASSES = ("informative", "not_informative")


class EvalError(Exception):
    pass


@dataclass(frozen=True)
class LabelScores:
    """Precision/recall/F1 for one label, with the counts behind them."""

    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    def to_json_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


@dataclass(frozen=True)
class F1Report:
    per_label: dict[str, LabelScores]
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_f1: float


def accuracy(gold: Sequence, pred: Sequence) -> float:
    """Fraction of positions where prediction equals gold exactly."""
    if len(gold) != len(pred):
        raise EvalError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    if not gold:
        raise EvalError("cannot score an empty sequence")
    return sum(1 for g, p in zip(gold, pred) if g == p) / len(gold)


def _prf(tp: int, fp: int, fn: int, label: str) -> LabelScores:
    if tp + fp == 0:
        warnings.warn(f"label {label!r}: no positive predictions, precision set to 0", stacklevel=3)
        precision = 0.0
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        warnings.warn(f"label {label!r}: no positive gold items, recall set to 0", stacklevel=3)
        recall = 0.0
    else:
        recall = tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return LabelScores(precision=precision, recall=recall, f1=f1, tp=tp, fp=fp, fn=fn)


def f1_scores(gold: Mapping[str, Sequence[int]], pred: Mapping[str, Sequence[int]]) -> F1Report:
    """Per-label F1 plus micro (pooled counts) and macro (averaged F1s).

    Both arguments map label name to a binary column of equal length.
    """
    if set(gold) != set(pred):
        raise EvalError(f"label sets differ: {sorted(gold)} vs {sorted(pred)}")
    if not gold:
        raise EvalError("need at least one label")
    lengths = {len(col) for col in gold.values()} | {len(col) for col in pred.values()}
    if len(lengths) != 1:
        raise EvalError(f"columns have differing lengths: {sorted(lengths)}")

    per_label: dict[str, LabelScores] = {}
    pooled_tp = pooled_fp = pooled_fn = 0
    for label in gold:
        g, p = gold[label], pred[label]
        tp = sum(1 for gi, pi in zip(g, p) if gi and pi)
        fp = sum(1 for gi, pi in zip(g, p) if not gi and pi)
        fn = sum(1 for gi, pi in zip(g, p) if gi and not pi)
        per_label[label] = _prf(tp, fp, fn, label)
        pooled_tp += tp
        pooled_fp += fp
        pooled_fn += fn

    micro = _prf(pooled_tp, pooled_fp, pooled_fn, "<micro>")
    macro_f1 = fmean(s.f1 for s in per_label.values())
    return F1Report(
        per_label=per_label,
        micro_precision=micro.precision,
        micro_recall=micro.recall,
        micro_f1=micro.f1,
        macro_f1=macro_f1,
    )


def binary_f1_report(gold: Sequence[int], pred: Sequence[int]) -> F1Report:
    """Score a binary task over both classes.

    Micro-F1 pooled over the positive and negative class equals accuracy;
    macro-F1 averages the two per-class F1s.
    """
    if len(gold) != len(pred):
        raise EvalError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    pos, neg = BINARY_CLASSES
    matrix_gold = {pos: [1 if g else 0 for g in gold], neg: [0 if g else 1 for g in gold]}
    matrix_pred = {pos: [1 if p else 0 for p in pred], neg: [0 if p else 1 for p in pred]}
    return f1_scores(matrix_gold, matrix_pred)


def cohens_kappa(a: Sequence, b: Sequence) -> float:
    """Chance-corrected agreement between two label sequences.

    kappa = (p_o - p_e) / (1 - p_e) with p_e from the raters' marginal
    distributions. When chance agreement is already 1 (both raters constant
    on the same label), returns 1.0.
    """
    if len(a) != len(b):
        raise EvalError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise EvalError("cannot score an empty sequence")
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    counts_a: dict = {}
    counts_b: dict = {}
    for x in a:
        counts_a[x] = counts_a.get(x, 0) + 1
    for y in b:
        counts_b[y] = counts_b.get(y, 0) + 1
    p_e = sum(counts_a[k] * counts_b.get(k, 0) for k in counts_a) / (n * n)
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


# --- experiment orchestration -----------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    base: str = "mnb"
    n_runs: int = 5
    base_seed: int = 0
    seeds: tuple[int, ...] | None = None
    train_fraction: float = 0.8
    stratify: bool = False
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    alpha: float = 1.0
    hyper: LrHyper = field(default_factory=LrHyper)
    threshold: float = 0.5

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")
        if self.seeds is not None and len(self.seeds) != self.n_runs:
            raise ValueError(f"need {self.n_runs} seeds, got {len(self.seeds)}")

    def seed_for(self, run: int) -> int:
        return self.seeds[run] if self.seeds is not None else self.base_seed + run


@dataclass(frozen=True)
class RunMetrics:
    seed: int
    n_train: int
    n_test: int
    accuracy: float
    positive_f1: float | None
    micro_f1: float
    macro_f1: float
    per_label: dict[str, LabelScores]

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "accuracy": self.accuracy,
            "positive_f1": self.positive_f1,
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "per_label": {k: v.to_json_dict() for k, v in sorted(self.per_label.items())},
        }


@dataclass(frozen=True)
class MetricsReport:
    task: str
    model_kind: str
    runs: tuple[RunMetrics, ...]

    def seeds(self) -> tuple[int, ...]:
        return tuple(r.seed for r in self.runs)

    def mean_metrics(self) -> dict:
        out: dict = {
            "accuracy": fmean(r.accuracy for r in self.runs),
            "micro_f1": fmean(r.micro_f1 for r in self.runs),
            "macro_f1": fmean(r.macro_f1 for r in self.runs),
        }
        if all(r.positive_f1 is not None for r in self.runs):
            out["positive_f1"] = fmean(r.positive_f1 for r in self.runs)
        else:
            out["positive_f1"] = None
        labels = sorted(self.runs[0].per_label)
        out["per_label"] = {
            label: {
                "precision": fmean(r.per_label[label].precision for r in self.runs),
                "recall": fmean(r.per_label[label].recall for r in self.runs),
                "f1": fmean(r.per_label[label].f1 for r in self.runs),
            }
            for label in labels
        }
        return out

    def to_json_dict(self) -> dict:
        return {
            "task": self.task,
            "model": self.model_kind,
            "seeds": list(self.seeds()),
            "runs": [r.to_json_dict() for r in self.runs],
            "mean": self.mean_metrics(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def annotated_subset(data: LabeledCollection, task: str) -> LabeledCollection:
    """Drop items without an annotation for the task, warning about them."""
    kept = [it for it in data if it.labels.for_task(task) is not None]
    dropped = len(data) - len(kept)
    if dropped:
        warnings.warn(f"{dropped} items lack a {task!r} annotation and were dropped")
    return LabeledCollection(tuple(kept))


def _check_not_degenerate(data: LabeledCollection, task: str) -> None:
    """Binary task needs both classes; multi-label needs a positive per label."""
    labels = LABELS_BY_TASK[task]
    columns = {
        label: [1 if label in it.labels.for_task(task) else 0 for it in data] for label in labels
    }
    if task == "informative":
        if len(set(columns["informative"])) < 2:
            raise EvalError("degenerate dataset: only one informativeness class present")
        return
    for label, column in columns.items():
        if not any(column):
            raise EvalError(f"degenerate dataset: label {label!r} has no positive examples")


def evaluate_classifier(model: TextClassifier, test: LabeledCollection, seed: int,
                        n_train: int) -> RunMetrics:
    """Score a trained classifier on annotated held-out data."""
    task = model.task
    gold_sets = []
    for it in test:
        gold = it.labels.for_task(task)
        if gold is None:
            raise EvalError(f"tweet {it.tweet.id!r} lacks a {task!r} annotation")
        gold_sets.append(gold)
    pred_sets, _ = model.predict(test.texts())
    acc = accuracy(gold_sets, pred_sets)

    if task == "informative":
        gold_bin = [1 if "informative" in s else 0 for s in gold_sets]
        pred_bin = [1 if "informative" in s else 0 for s in pred_sets]
        report = binary_f1_report(gold_bin, pred_bin)
        positive_f1 = report.per_label[BINARY_CLASSES[0]].f1
    else:
        labels = LABELS_BY_TASK[task]
        gold_matrix = {lab: [1 if lab in s else 0 for s in gold_sets] for lab in labels}
        pred_matrix = {lab: [1 if lab in s else 0 for s in pred_sets] for lab in labels}
        report = f1_scores(gold_matrix, pred_matrix)
        positive_f1 = None
    return RunMetrics(
        seed=seed,
        n_train=n_train,
        n_test=len(test),
        accuracy=acc,
        positive_f1=positive_f1,
        micro_f1=report.micro_f1,
        macro_f1=report.macro_f1,
        per_label=report.per_label,
    )


def run_experiment(data: LabeledCollection, cfg: ExperimentConfig) -> MetricsReport:
    """Repeat split/train/evaluate over the configured seeds.

    The vocabulary is refitted on each run's training half; only the split
    varies between runs.
    """
    data = annotated_subset(data, cfg.task)
    if len(data) < 2:
        raise EvalError("need at least 2 annotated items")
    _check_not_degenerate(data, cfg.task)

    runs = []
    for i in range(cfg.n_runs):
        seed = cfg.seed_for(i)
        split_cfg = SplitConfig(
            train_fraction=cfg.train_fraction,
            seed=seed,
            stratify_by_informative=cfg.stratify and cfg.task == "informative",
        )
        train, test = split_train_test(data, split_cfg)
        model = fit_text_classifier(
            task=cfg.task,
            texts=train.texts(),
            label_sets=[it.labels.for_task(cfg.task) for it in train],
            base=cfg.base,
            normalization=cfg.normalization,
            alpha=cfg.alpha,
            hyper=cfg.hyper,
            threshold=cfg.threshold,
        )
        runs.append(evaluate_classifier(model, test, seed=seed, n_train=len(train)))
    return MetricsReport(task=cfg.task, model_kind=cfg.base, runs=tuple(runs))


# --- cross-event evaluation -------------------------------------------------


@dataclass(frozen=True)
class Disagreement:
    tweet_id: str
    text: str
    gold: bool
    predicted: bool

    def to_json_dict(self) -> dict:
        return {
            "id": self.tweet_id,
            "text": self.text,
            "gold": self.gold,
            "predicted": self.predicted,
        }


@dataclass(frozen=True)
class EventEval:
    event: str
    metrics: RunMetrics
    disagreements: tuple[Disagreement, ...]

    def to_json_dict(self) -> dict:
        return {
            "event": self.event,
            "metrics": self.metrics.to_json_dict(),
            "disagreements": [d.to_json_dict() for d in self.disagreements],
        }


def cross_event_eval(
    model: TextClassifier, events: Sequence[tuple[str, LabeledCollection]]
) -> list[EventEval]:
    """Evaluate an informativeness model unchanged on other events' data.

    Each event collection must carry informativeness annotations. The
    returned disagreement records support qualitative error review.
    """
    if model.task != "informative":
        raise EvalError(f"cross-event evaluation needs an informativeness model, got {model.task!r}")
    out = []
    for name, collection in events:
        unlabeled = [it.tweet.id for it in collection if it.labels.informative is None]
        if unlabeled or len(collection) == 0:
            raise EvalError(
                f"event {name!r} has no informativeness labels"
                + (f" for {len(unlabeled)} items" if unlabeled else "")
            )
        metrics = evaluate_classifier(model, collection, seed=-1, n_train=0)
        pred_sets, _ = model.predict(collection.texts())
        disagreements = tuple(
            Disagreement(
                tweet_id=it.tweet.id,
                text=it.tweet.text,
                gold=bool(it.labels.informative),
                predicted="informative" in pred,
            )
            for it, pred in zip(collection, pred_sets)
            if bool(it.labels.informative) != ("informative" in pred)
        )
        out.append(EventEval(event=name, metrics=metrics, disagreements=disagreements))
    return out
