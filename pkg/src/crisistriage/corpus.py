"""Corpus data model, file ingestion, and deterministic train/test splitting.

Collections are immutable after construction; ingestion and splitting are
pure functions of their inputs, so they are safe to use from multiple
threads on distinct collections.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from . import AID_LABELS, INTENT_LABELS


class CorpusError(Exception):
    """Unrecoverable ingestion or splitting problem (bad file, empty input)."""


@dataclass(frozen=True)
class Tweet:
    """One raw message. User handles are never stored."""

    id: str
    text: str
    created_at: str | None = None
    event: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("tweet id must be non-empty")
        if not self.text.strip():
            raise ValueError(f"tweet {self.id!r} has empty text")


@dataclass(frozen=True)
class LabelSet:
    """Per-task gold or predicted labels.

    ``None`` means the task was never annotated; an empty set is a real
    annotation meaning "none of the above".
    """

    informative: bool | None = None
    intent: frozenset[str] | None = None
    aid: frozenset[str] | None = None

    def __post_init__(self):
        if self.intent is not None:
            object.__setattr__(self, "intent", frozenset(self.intent))
            bad = self.intent - set(INTENT_LABELS)
            if bad:
                raise ValueError(f"unknown intent labels: {sorted(bad)}")
        if self.aid is not None:
            object.__setattr__(self, "aid", frozenset(self.aid))
            bad = self.aid - set(AID_LABELS)
            if bad:
                raise ValueError(f"unknown aid labels: {sorted(bad)}")

    def has_any(self) -> bool:
        return self.informative is not None or self.intent is not None or self.aid is not None

    def for_task(self, task: str) -> frozenset[str] | None:
        """The annotation as a label set, None when the task is unannotated.

        The binary task maps to {"informative"} or the empty set.
        """
        if task == "informative":
            if self.informative is None:
                return None
            return frozenset({"informative"}) if self.informative else frozenset()
        if task == "intent":
            return self.intent
        if task == "aid":
            return self.aid
        raise ValueError(f"unknown task {task!r}")

    def to_json_dict(self) -> dict:
        d: dict = {}
        if self.informative is not None:
            d["informative"] = self.informative
        if self.intent is not None:
            d["intent"] = sorted(self.intent)
        if self.aid is not None:
            d["aid"] = sorted(self.aid)
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "LabelSet":
        return cls(
            informative=d.get("informative"),
            intent=frozenset(d["intent"]) if "intent" in d else None,
            aid=frozenset(d["aid"]) if "aid" in d else None,
        )


@dataclass(frozen=True)
class LabeledTweet:
    tweet: Tweet
    labels: LabelSet

    def __post_init__(self):
        if not self.labels.has_any():
            raise ValueError(f"tweet {self.tweet.id!r} carries no annotation")


def _check_unique_ids(ids: Iterable[str]) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            raise ValueError(f"duplicate tweet id {i!r} in collection")
        seen.add(i)


@dataclass(frozen=True)
class TweetCollection:
    """Ordered, id-unique, immutable sequence of tweets."""

    tweets: tuple[Tweet, ...]

    def __post_init__(self):
        object.__setattr__(self, "tweets", tuple(self.tweets))
        _check_unique_ids(t.id for t in self.tweets)

    def __len__(self) -> int:
        return len(self.tweets)

    def __iter__(self) -> Iterator[Tweet]:
        return iter(self.tweets)

    def texts(self) -> list[str]:
        return [t.text for t in self.tweets]


@dataclass(frozen=True)
class LabeledCollection:
    """Ordered, id-unique, immutable sequence of labeled tweets."""

    items: tuple[LabeledTweet, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        _check_unique_ids(it.tweet.id for it in self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[LabeledTweet]:
        return iter(self.items)

    def tweets(self) -> TweetCollection:
        return TweetCollection(tuple(it.tweet for it in self.items))

    def texts(self) -> list[str]:
        return [it.tweet.text for it in self.items]


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.8
    seed: int = 0
    stratify_by_informative: bool = False

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must lie strictly between 0 and 1")


@dataclass
class RecordError:
    """One rejected input row, with enough context to audit it."""

    line: int
    reason: str


@dataclass
class IngestResult:
    collection: TweetCollection
    labels_by_id: dict[str, LabelSet]
    errors: list[RecordError] = field(default_factory=list)

    @property
    def n_skipped(self) -> int:
        return len(self.errors)

    def labeled(self) -> LabeledCollection:
        """The labeled subset, in input order."""
        items = [
            LabeledTweet(t, self.labels_by_id[t.id])
            for t in self.collection
            if t.id in self.labels_by_id
        ]
        return LabeledCollection(tuple(items))


def _record_from_dict(d: dict) -> tuple[Tweet, LabelSet | None]:
    tweet = Tweet(
        id=str(d["id"]),
        text=d["text"],
        created_at=d.get("created_at") or None,
        event=d.get("event") or None,
    )
    labels = None
    if d.get("labels"):
        labels = LabelSet.from_json_dict(d["labels"])
    return tweet, labels


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict | None, str]]:
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line), ""
            except json.JSONDecodeError as exc:
                yield lineno, None, f"invalid JSON: {exc.msg}"


def _iter_csv(path: Path) -> Iterator[tuple[int, dict | None, str]]:
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames or "text" not in reader.fieldnames:
            raise CorpusError(f"{path}: CSV must have at least 'id' and 'text' columns")
        for lineno, row in enumerate(reader, start=2):
            d: dict = {
                "id": row.get("id", ""),
                "text": row.get("text", ""),
                "created_at": row.get("created_at") or None,
                "event": row.get("event") or None,
            }
            labels: dict = {}
            informative = (row.get("informative") or "").strip().lower()
            if informative in ("true", "1", "yes"):
                labels["informative"] = True
            elif informative in ("false", "0", "no"):
                labels["informative"] = False
            # an empty CSV cell cannot distinguish "not annotated" from "empty
            # set"; we read it as not annotated (JSONL carries the distinction)
            for task in ("intent", "aid"):
                raw = row.get(task)
                if raw:
                    labels[task] = [s for s in raw.split(";") if s]
            if labels:
                d["labels"] = labels
            yield lineno, d, ""


def load_tweets(path: str | Path, format: str = "jsonl") -> IngestResult:
    """Read a corpus file, skipping malformed rows with a per-row error record.

    Duplicate ids keep the first occurrence; later occurrences become record
    errors. Empty-text rows are rejected the same way.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"no such file: {path}")
    if format == "jsonl":
        rows = _iter_jsonl(path)
    elif format == "csv":
        rows = _iter_csv(path)
    else:
        raise CorpusError(f"unknown corpus format {format!r} (expected 'jsonl' or 'csv')")

    tweets: list[Tweet] = []
    labels_by_id: dict[str, LabelSet] = {}
    errors: list[RecordError] = []
    seen: set[str] = set()
    for lineno, d, problem in rows:
        if d is None:
            errors.append(RecordError(lineno, problem))
            continue
        try:
            tweet, labels = _record_from_dict(d)
        except (KeyError, ValueError, TypeError) as exc:
            errors.append(RecordError(lineno, str(exc)))
            continue
        if tweet.id in seen:
            errors.append(RecordError(lineno, f"duplicate id {tweet.id!r}"))
            continue
        seen.add(tweet.id)
        tweets.append(tweet)
        if labels is not None and labels.has_any():
            labels_by_id[tweet.id] = labels
    return IngestResult(TweetCollection(tuple(tweets)), labels_by_id, errors)


def load_labeled(path: str | Path, format: str = "jsonl") -> tuple[LabeledCollection, list[RecordError]]:
    """Like :func:`load_tweets` but keeps only rows carrying an annotation."""
    result = load_tweets(path, format)
    return result.labeled(), result.errors


def save_tweets(
    collection: TweetCollection | LabeledCollection,
    path: str | Path,
    format: str = "jsonl",
    labels_by_id: dict[str, LabelSet] | None = None,
) -> None:
    """Write a collection in the JSONL or CSV interchange format."""
    path = Path(path)
    if isinstance(collection, LabeledCollection):
        rows = [(it.tweet, it.labels) for it in collection]
    else:
        labels_by_id = labels_by_id or {}
        rows = [(t, labels_by_id.get(t.id)) for t in collection]

    if format == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for tweet, labels in rows:
                d: dict = {"id": tweet.id, "text": tweet.text}
                if tweet.created_at is not None:
                    d["created_at"] = tweet.created_at
                if tweet.event is not None:
                    d["event"] = tweet.event
                if labels is not None and labels.has_any():
                    d["labels"] = labels.to_json_dict()
                fh.write(json.dumps(d, ensure_ascii=False) + "\n")
    elif format == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "text", "created_at", "event", "informative", "intent", "aid"])
            for tweet, labels in rows:
                informative = ""
                intent = ""
                aid = ""
                if labels is not None:
                    if labels.informative is not None:
                        informative = "true" if labels.informative else "false"
                    if labels.intent is not None:
                        intent = ";".join(sorted(labels.intent))
                    if labels.aid is not None:
                        aid = ";".join(sorted(labels.aid))
                writer.writerow(
                    [tweet.id, tweet.text, tweet.created_at or "", tweet.event or "", informative, intent, aid]
                )
    else:
        raise CorpusError(f"unknown corpus format {format!r} (expected 'jsonl' or 'csv')")


def _shuffled(items: Sequence, seed: int) -> list:
    out = list(items)
    random.Random(seed).shuffle(out)
    return out


def split_train_test(
    collection: LabeledCollection, cfg: SplitConfig
) -> tuple[LabeledCollection, LabeledCollection]:
    """Seeded uniform split; train gets floor(train_fraction * n) items.

    The same seed always yields the same partition. With
    ``stratify_by_informative`` the floor rule is applied per class instead,
    so the overall train size may differ from the unstratified one by at
    most one item per class.
    """
    n = len(collection)
    if n == 0:
        raise CorpusError("cannot split an empty collection")

    if cfg.stratify_by_informative:
        strata: dict[bool, list[LabeledTweet]] = {}
        for item in collection:
            if item.labels.informative is None:
                raise CorpusError(
                    f"stratified split requires informativeness labels; {item.tweet.id!r} has none"
                )
            strata.setdefault(item.labels.informative, []).append(item)
        train: list[LabeledTweet] = []
        test: list[LabeledTweet] = []
        for key in sorted(strata):
            shuffled = _shuffled(strata[key], cfg.seed)
            k = math.floor(cfg.train_fraction * len(shuffled))
            train.extend(shuffled[:k])
            test.extend(shuffled[k:])
        return LabeledCollection(tuple(train)), LabeledCollection(tuple(test))

    shuffled = _shuffled(collection.items, cfg.seed)
    n_train = math.floor(cfg.train_fraction * n)
    return (
        LabeledCollection(tuple(shuffled[:n_train])),
        LabeledCollection(tuple(shuffled[n_train:])),
    )
