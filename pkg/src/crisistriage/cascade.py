"""Three-stage triage pipeline and routing report.

Stage 1 classifies every tweet as informative or not. Stages 2 and 3
predict intent (need/supply) and aid type (food/shelter/health/wash),
but only for tweets stage 1 marked informative; non-informative tweets
carry no downstream predictions at all. The report aggregates counts and
percentages per humanitarian cluster.

Any object with `predict(texts) -> (label sets, score dicts)` can serve
as a stage: a local TextClassifier, a connected BackendClient, or a test
stub.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Protocol

from . import AID_LABELS, INTENT_LABELS
from .backend import BackendError
from .corpus import TweetCollection

# UN-cluster display names per aid label
CLUSTER_NAMES = {"food": "Food", "shelter": "Shelter", "health": "Health", "wash": "WASH"}


class CascadeError(Exception):
    def __init__(self, message: str, stage: str | None = None, partial: dict | None = None):
        if partial:
            details = ", ".join(f"{k}={v}" for k, v in partial.items())
            message = f"{message} (progress so far: {details})"
        super().__init__(message)
        self.stage = stage
        self.partial = partial or {}


class StagePredictor(Protocol):
    def predict(
        self, texts: list[str]
    ) -> tuple[list[frozenset[str]], list[dict[str, float]]]: ...


def percent(count: int, denominator: int) -> str:
    """100 * count / denominator, half-up to two decimals, as a string.

    A zero denominator yields "0.00" rather than an error.
    """
    if denominator == 0:
        return "0.00"
    value = Decimal(100 * count) / Decimal(denominator)
    return str(value.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class TweetTriage:
    """All stage outcomes for one tweet; None marks a stage never run."""

    tweet_id: str
    text: str
    informative: bool
    info_scores: dict[str, float]
    intent: frozenset[str] | None
    intent_scores: dict[str, float] | None
    aid: frozenset[str] | None
    aid_scores: dict[str, float] | None

    def to_json_dict(self) -> dict:
        return {
            "id": self.tweet_id,
            "text": self.text,
            "informative": self.informative,
            "info_scores": self.info_scores,
            "intent": sorted(self.intent) if self.intent is not None else None,
            "intent_scores": self.intent_scores,
            "aid": sorted(self.aid) if self.aid is not None else None,
            "aid_scores": self.aid_scores,
        }


@dataclass(frozen=True)
class TriageReport:
    total: int
    informative_count: int
    intent_counts: dict[str, int]
    aid_counts: dict[str, int]
    both_intents_count: int
    records: tuple[TweetTriage, ...]

    @classmethod
    def from_records(cls, records: Sequence[TweetTriage]) -> TriageReport:
        informative = [r for r in records if r.informative]
        intent_counts = {
            label: sum(1 for r in informative if r.intent and label in r.intent)
            for label in INTENT_LABELS
        }
        aid_counts = {
            label: sum(1 for r in informative if r.aid and label in r.aid)
            for label in AID_LABELS
        }
        both = sum(1 for r in informative if r.intent and set(INTENT_LABELS) <= r.intent)
        report = cls(
            total=len(records),
            informative_count=len(informative),
            intent_counts=intent_counts,
            aid_counts=aid_counts,
            both_intents_count=both,
            records=tuple(records),
        )
        report.validate()
        return report

    def validate(self) -> None:
        """Check the count and gating invariants; raise CascadeError if any
        fails.
        """
        if self.informative_count > self.total:
            raise CascadeError("informative count exceeds total")
        for label, count in {**self.intent_counts, **self.aid_counts}.items():
            if not 0 <= count <= self.informative_count:
                raise CascadeError(
                    f"count for {label!r} ({count}) outside [0, informative={self.informative_count}]"
                )
        need = self.intent_counts.get("need", 0)
        supply = self.intent_counts.get("supply", 0)
        if self.both_intents_count > min(need, supply):
            raise CascadeError(
                f"both-intents count {self.both_intents_count} exceeds "
                f"min(need={need}, supply={supply})"
            )
        for r in self.records:
            if not r.informative and (r.intent is not None or r.aid is not None):
                raise CascadeError(
                    f"tweet {r.tweet_id!r} is non-informative but has downstream predictions"
                )

    def informative_percent(self) -> str:
        """Share of informative tweets over the total input."""
        return percent(self.informative_count, self.total)

    def intent_percent(self, label: str) -> str:
        """Share over informative tweets, matching the reporting convention."""
        return percent(self.intent_counts[label], self.informative_count)

    def aid_percent(self, label: str) -> str:
        return percent(self.aid_counts[label], self.informative_count)

    def to_json_dict(self, include_tweets: bool = True) -> dict:
        d = {
            "total": self.total,
            "informative": {
                "count": self.informative_count,
                "percent": self.informative_percent(),
                "of": self.total,
            },
            "intent": {
                label: {
                    "count": self.intent_counts[label],
                    "percent": self.intent_percent(label),
                    "of": self.informative_count,
                }
                for label in INTENT_LABELS
            },
            "both_intents": {"count": self.both_intents_count},
            "aid": {
                label: {
                    "count": self.aid_counts[label],
                    "percent": self.aid_percent(label),
                    "of": self.informative_count,
                }
                for label in AID_LABELS
            },
        }
        if include_tweets:
            d["tweets"] = [r.to_json_dict() for r in self.records]
        return d

    def to_json(self, include_tweets: bool = True) -> str:
        return json.dumps(self.to_json_dict(include_tweets=include_tweets), indent=2) + "\n"


def run_cascade(
    c: TweetCollection,
    m_info: StagePredictor,
    m_intent: StagePredictor,
    m_aid: StagePredictor,
) -> TriageReport:
    """Gate on stage 1, then type intent and aid for informative tweets only.

    Stages 2 and 3 are not invoked at all when nothing passes the gate. A
    backend failure aborts with a diagnostic describing how far the run got.
    """
    texts = [t.text for t in c.tweets]
    partial: dict[str, int] = {"total": len(texts)}

    info_labels, info_scores = _run_stage("informative", m_info, texts, partial)
    informative = ["informative" in ls for ls in info_labels]
    gated = [i for i, flag in enumerate(informative) if flag]
    partial["informative"] = len(gated)
    gated_texts = [texts[i] for i in gated]

    if gated_texts:
        intent_labels, intent_scores = _run_stage("intent", m_intent, gated_texts, partial)
        partial["intent_done"] = len(gated)
        aid_labels, aid_scores = _run_stage("aid", m_aid, gated_texts, partial)
    else:
        intent_labels, intent_scores = [], []
        aid_labels, aid_scores = [], []

    by_input: dict[int, int] = {tweet_idx: k for k, tweet_idx in enumerate(gated)}
    records = []
    for i, tweet in enumerate(c.tweets):
        k = by_input.get(i)
        records.append(
            TweetTriage(
                tweet_id=tweet.id,
                text=tweet.text,
                informative=informative[i],
                info_scores=info_scores[i],
                intent=intent_labels[k] if k is not None else None,
                intent_scores=intent_scores[k] if k is not None else None,
                aid=aid_labels[k] if k is not None else None,
                aid_scores=aid_scores[k] if k is not None else None,
            )
        )
    return TriageReport.from_records(records)


def _run_stage(
    name: str, predictor: StagePredictor, texts: list[str], partial: dict[str, int]
) -> tuple[list[frozenset[str]], list[dict[str, float]]]:
    try:
        labels, scores = predictor.predict(list(texts))
    except BackendError as exc:
        raise CascadeError(
            f"stage {name!r} failed: {exc}", stage=name, partial=partial
        ) from exc
    if len(labels) != len(texts) or len(scores) != len(texts):
        raise CascadeError(
            f"stage {name!r} returned {len(labels)} label sets and {len(scores)} "
            f"score rows for {len(texts)} texts",
            stage=name,
            partial=partial,
        )
    return [frozenset(ls) for ls in labels], list(scores)


def routing_report(r: TriageReport) -> dict:
    """Per-cluster counts and percentages, machine readable."""
    return {
        "denominator": r.informative_count,
        "clusters": [
            {
                "cluster": CLUSTER_NAMES[label],
                "label": label,
                "count": r.aid_counts[label],
                "percent": r.aid_percent(label),
            }
            for label in AID_LABELS
        ],
    }


def format_routing_table(r: TriageReport) -> str:
    """Human-readable per-cluster table."""
    lines = [
        f"{'Cluster':<10} {'Count':>8} {'Percent':>8}  (of {r.informative_count} informative)"
    ]
    for label in AID_LABELS:
        lines.append(
            f"{CLUSTER_NAMES[label]:<10} {r.aid_counts[label]:>8} {r.aid_percent(label):>8}"
        )
    return "\n".join(lines)


def format_report(r: TriageReport) -> str:
    """Human-readable overall summary for the CLI."""
    lines = [
        f"Tweets in:     {r.total}",
        f"Informative:   {r.informative_count} ({r.informative_percent()}% of {r.total})",
    ]
    for label in INTENT_LABELS:
        lines.append(
            f"  {label.capitalize():<12} {r.intent_counts[label]} "
            f"({r.intent_percent(label)}% of informative)"
        )
    lines.append(f"  Both intents {r.both_intents_count}")
    lines.append("Aid clusters:")
    for label in AID_LABELS:
        lines.append(
            f"  {CLUSTER_NAMES[label]:<12} {r.aid_counts[label]} "
            f"({r.aid_percent(label)}% of informative)"
        )
    return "\n".join(lines)
