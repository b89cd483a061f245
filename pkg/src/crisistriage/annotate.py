"""Multi-annotator vote aggregation and agreement auditing.

Votes aggregate per label: a label is included when at least min_agree
annotators selected it. The binary informativeness vote instead picks
the value chosen by at least min_agree annotators and is otherwise
marked unresolved; unresolved items are reported, never defaulted.
"""

from __future__ import annotations

import csv
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from . import AID_LABELS, INTENT_LABELS, LABELS_BY_TASK, TASKS
from .corpus import LabeledCollection, LabeledTweet, LabelSet, RecordError, TweetCollection
from .evaluation import cohens_kappa


class AnnotationError(Exception):
    pass


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotator's label choice for one tweet and task."""

    tweet_id: str
    task: str
    annotator_id: str
    labels: frozenset[str]

    def __post_init__(self):
        if self.task not in TASKS:
            raise AnnotationError(f"unknown task {self.task!r}")
        object.__setattr__(self, "labels", frozenset(self.labels))
        allowed = set(LABELS_BY_TASK[self.task])
        bad = self.labels - allowed
        if bad:
            raise AnnotationError(
                f"labels {sorted(bad)} are not valid for task {self.task!r}"
            )


def _parse_label_cell(cell: str, task: str) -> frozenset[str]:
    """Semicolon-joined labels; empty cell means none-of-the-above.

    "both" expands to need+supply; informativeness accepts yes/no spellings.
    """
    parts = [p.strip().lower() for p in cell.split(";") if p.strip()]
    labels: set[str] = set()
    for part in parts:
        if part in ("none", "none of the above"):
            continue
        if task == "intent" and part == "both":
            labels.update(INTENT_LABELS)
        elif task == "informative" and part in ("yes", "informative"):
            labels.add("informative")
        elif task == "informative" and part in ("no", "not informative", "not_informative"):
            continue
        else:
            labels.add(part)
    return frozenset(labels)


def load_annotations(path: str | Path) -> tuple[list[AnnotationRecord], list[RecordError]]:
    """Read annotation CSV (tweet_id,task,annotator_id,labels).

    Malformed rows and duplicate (tweet, task, annotator) keys are skipped
    and reported; the first vote wins on duplicates.
    """
    records: list[AnnotationRecord] = []
    errors: list[RecordError] = []
    seen: set[tuple[str, str, str]] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"tweet_id", "task", "annotator_id", "labels"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise AnnotationError(
                f"{path}: header must contain {sorted(required)}, "
                f"got {reader.fieldnames}"
            )
        for line_no, row in enumerate(reader, start=2):
            try:
                task = (row["task"] or "").strip().lower()
                record = AnnotationRecord(
                    tweet_id=(row["tweet_id"] or "").strip(),
                    task=task,
                    annotator_id=(row["annotator_id"] or "").strip(),
                    labels=_parse_label_cell(row["labels"] or "", task),
                )
                if not record.tweet_id or not record.annotator_id:
                    raise AnnotationError("empty tweet_id or annotator_id")
            except AnnotationError as exc:
                errors.append(RecordError(line=line_no, reason=str(exc)))
                continue
            key = (record.tweet_id, record.task, record.annotator_id)
            if key in seen:
                errors.append(
                    RecordError(line=line_no, reason=f"duplicate vote for {key}")
                )
                continue
            seen.add(key)
            records.append(record)
    return records, errors


@dataclass(frozen=True)
class MajorityOutcome:
    """Aggregated vote for one tweet and task.

    `labels` is None only for an unresolved binary vote.
    """

    tweet_id: str
    task: str
    labels: frozenset[str] | None
    resolved: bool
    n_annotators: int


def aggregate_majority(
    records: Sequence[AnnotationRecord], min_agree: int = 3
) -> MajorityOutcome:
    """Aggregate all votes for a single tweet and task."""
    if not records:
        raise AnnotationError("no votes to aggregate")
    tweet_id = records[0].tweet_id
    task = records[0].task
    if any(r.tweet_id != tweet_id or r.task != task for r in records):
        raise AnnotationError("votes mix tweets or tasks")
    n = len(records)
    if min_agree > n:
        raise AnnotationError(f"min_agree={min_agree} exceeds the {n} votes present")

    if task == "informative":
        yes = sum(1 for r in records if "informative" in r.labels)
        no = n - yes
        if yes >= min_agree:
            return MajorityOutcome(tweet_id, task, frozenset({"informative"}), True, n)
        if no >= min_agree:
            return MajorityOutcome(tweet_id, task, frozenset(), True, n)
        return MajorityOutcome(tweet_id, task, None, False, n)

    chosen = {
        label
        for label in LABELS_BY_TASK[task]
        if sum(1 for r in records if label in r.labels) >= min_agree
    }
    return MajorityOutcome(tweet_id, task, frozenset(chosen), True, n)


@dataclass
class AggregateResult:
    """Corpus-level aggregation: final labels plus what stayed unresolved."""

    labels_by_id: dict[str, LabelSet]
    unresolved: list[tuple[str, str]] = field(default_factory=list)  # (tweet_id, task)
    outcomes: list[MajorityOutcome] = field(default_factory=list)


def aggregate_corpus(
    records: Iterable[AnnotationRecord], min_agree: int = 3
) -> AggregateResult:
    """Group votes by tweet and task, aggregate each group.

    Tweets appear in first-vote order; a tweet whose every task stayed
    unresolved gets no LabelSet entry.
    """
    groups: dict[tuple[str, str], list[AnnotationRecord]] = {}
    tweet_order: list[str] = []
    for r in records:
        key = (r.tweet_id, r.task)
        if key not in groups:
            groups[key] = []
        if r.tweet_id not in tweet_order:
            tweet_order.append(r.tweet_id)
        groups[key].append(r)

    outcomes = [aggregate_majority(votes, min_agree) for votes in groups.values()]
    by_tweet: dict[str, dict[str, MajorityOutcome]] = {}
    for outcome in outcomes:
        by_tweet.setdefault(outcome.tweet_id, {})[outcome.task] = outcome

    result = AggregateResult(labels_by_id={}, outcomes=outcomes)
    for tweet_id in tweet_order:
        resolved: dict = {}
        for task, outcome in by_tweet[tweet_id].items():
            if not outcome.resolved:
                result.unresolved.append((tweet_id, task))
                continue
            if task == "informative":
                resolved["informative"] = "informative" in outcome.labels
            elif task == "intent":
                resolved["intent"] = outcome.labels
            else:
                resolved["aid"] = outcome.labels
        if resolved:
            result.labels_by_id[tweet_id] = LabelSet(**resolved)
    return result


def attach_labels(
    collection: TweetCollection, labels_by_id: Mapping[str, LabelSet]
) -> tuple[LabeledCollection, list[str]]:
    """Join aggregated labels onto tweets by id, keeping collection order.

    Returns the labeled subset and the label ids that matched no tweet.
    """
    items = [
        LabeledTweet(tweet, labels_by_id[tweet.id])
        for tweet in collection
        if tweet.id in labels_by_id
    ]
    matched = {it.tweet.id for it in items}
    missing = [tweet_id for tweet_id in labels_by_id if tweet_id not in matched]
    return LabeledCollection(tuple(items)), missing


# --- agreement auditing -----------------------------------------------------


@dataclass(frozen=True)
class TaskAgreement:
    task: str
    n_items: int
    kappa: float
    # label -> counts with the first argument (expert) as reference
    confusion: dict[str, dict[str, int]]

    def to_json_dict(self) -> dict:
        return {
            "task": self.task,
            "n_items": self.n_items,
            "kappa": self.kappa,
            "confusion": self.confusion,
        }


@dataclass(frozen=True)
class AgreementReport:
    tasks: tuple[TaskAgreement, ...]

    def to_json_dict(self) -> dict:
        return {"tasks": [t.to_json_dict() for t in self.tasks]}


def agreement_report(
    expert: Mapping[str, LabelSet], majority: Mapping[str, LabelSet]
) -> AgreementReport:
    """Cohen's kappa per task between two labelings of the same tweets.

    Multi-label tasks are scored over the concatenated per-label binary
    decisions, so kappa reflects label-level agreement.
    """
    if set(expert) != set(majority):
        only_a = sorted(set(expert) - set(majority))[:5]
        only_b = sorted(set(majority) - set(expert))[:5]
        raise AnnotationError(
            f"id mismatch between labelings (first extras: {only_a} vs {only_b})"
        )
    ids = sorted(expert)
    out: list[TaskAgreement] = []
    for task in TASKS:
        pairs = [
            (expert[i].for_task(task), majority[i].for_task(task))
            for i in ids
            if expert[i].for_task(task) is not None and majority[i].for_task(task) is not None
        ]
        if not pairs:
            continue
        labels = LABELS_BY_TASK[task]
        a_vec: list[int] = []
        b_vec: list[int] = []
        confusion: dict[str, dict[str, int]] = {}
        for label in labels:
            counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
            for a_set, b_set in pairs:
                a = 1 if label in a_set else 0
                b = 1 if label in b_set else 0
                a_vec.append(a)
                b_vec.append(b)
                if a and b:
                    counts["tp"] += 1
                elif not a and b:
                    counts["fp"] += 1
                elif a and not b:
                    counts["fn"] += 1
                else:
                    counts["tn"] += 1
            confusion[label] = counts
        out.append(
            TaskAgreement(
                task=task,
                n_items=len(pairs),
                kappa=cohens_kappa(a_vec, b_vec),
                confusion=confusion,
            )
        )
    return AgreementReport(tasks=tuple(out))
