"""TF-IDF features, cosine similarity, and near-duplicate removal.

Weighting follows the common smoothed convention: idf = ln((1+N)/(1+df)) + 1
with raw term counts and L2 normalization, and no sublinear tf.
"""

from __future__ import annotations

import hashlib
import json
import math
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import Tweet, TweetCollection
from .preprocess import NormalizationConfig, normalize, tokenize


class VectorizeError(Exception):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Dense term -> column mapping with document frequencies."""

    index: dict[str, int]
    df: dict[str, int]
    n_docs: int

    def __post_init__(self):
        if sorted(self.index.values()) != list(range(len(self.index))):
            raise VectorizeError("vocabulary indices must be dense 0..V-1")
        for term, f in self.df.items():
            if not (1 <= f <= self.n_docs):
                raise VectorizeError(f"df[{term!r}]={f} outside [1, {self.n_docs}]")

    @property
    def size(self) -> int:
        return len(self.index)

    def idf(self, term: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.df[term])) + 1.0

    def to_json_dict(self) -> dict:
        terms = [
            {"t": term, "df": self.df[term], "idx": idx}
            for term, idx in sorted(self.index.items(), key=lambda kv: kv[1])
        ]
        return {"n_docs": self.n_docs, "terms": terms}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Vocabulary":
        index = {e["t"]: e["idx"] for e in d["terms"]}
        df = {e["t"]: e["df"] for e in d["terms"]}
        return cls(index=index, df=df, n_docs=d["n_docs"])

    def sha256(self) -> str:
        """Stable content hash, used to pin models to their feature space."""
        blob = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SparseVector:
    """Sorted sparse vector; immutable and safe to share."""

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dim: int

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise VectorizeError("indices and values length mismatch")
        prev = -1
        for i in self.indices:
            if i <= prev or i >= self.dim:
                raise VectorizeError("indices must be strictly increasing and < dim")
            prev = i
        for v in self.values:
            if not math.isfinite(v):
                raise VectorizeError("weights must be finite")

    def is_zero(self) -> bool:
        return not self.indices

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))

    def get(self, index: int) -> float:
        pos = bisect_left(self.indices, index)
        if pos < len(self.indices) and self.indices[pos] == index:
            return self.values[pos]
        return 0.0

    def to_dense(self) -> list[float]:
        dense = [0.0] * self.dim
        for i, v in zip(self.indices, self.values):
            dense[i] = v
        return dense

    def scaled(self, k: float) -> "SparseVector":
        return SparseVector(self.indices, tuple(v * k for v in self.values), self.dim)


def fit_vocabulary(docs: Sequence[Sequence[str]]) -> Vocabulary:
    """Collect every term appearing at least once; terms get alphabetical
    column order for determinism.
    """
    df: Counter[str] = Counter()
    n_docs = 0
    any_tokens = False
    for doc in docs:
        n_docs += 1
        seen = set(doc)
        if seen:
            any_tokens = True
        df.update(seen)
    if n_docs == 0 or not any_tokens:
        raise VectorizeError("need at least one non-empty document to fit a vocabulary")
    index = {term: i for i, term in enumerate(sorted(df))}
    return Vocabulary(index=index, df=dict(df), n_docs=n_docs)


def transform(doc: Sequence[str], vocab: Vocabulary) -> SparseVector:
    """tf * idf, L2-normalized; out-of-vocabulary tokens are ignored and a
    doc with no known tokens becomes the zero vector.
    """
    counts: Counter[str] = Counter(t for t in doc if t in vocab.index)
    if not counts:
        return SparseVector((), (), vocab.size)
    pairs = sorted((vocab.index[t], c * vocab.idf(t)) for t, c in counts.items())
    norm = math.sqrt(sum(w * w for _, w in pairs))
    return SparseVector(
        indices=tuple(i for i, _ in pairs),
        values=tuple(w / norm for _, w in pairs),
        dim=vocab.size,
    )


def transform_all(docs: Iterable[Sequence[str]], vocab: Vocabulary) -> list[SparseVector]:
    return [transform(d, vocab) for d in docs]


def cosine(a: SparseVector, b: SparseVector) -> float:
    """dot(a,b) / (|a| |b|); 0 when either vector is zero.

    Clamped to [-1, 1]: identical vectors can otherwise come out an ulp
    above 1, which matters when a dedup threshold sits exactly at 1.
    """
    if a.dim != b.dim:
        raise VectorizeError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.is_zero() or b.is_zero():
        return 0.0
    dot = 0.0
    i = j = 0
    ai, av = a.indices, a.values
    bi, bv = b.indices, b.values
    while i < len(ai) and j < len(bi):
        if ai[i] == bi[j]:
            dot += av[i] * bv[j]
            i += 1
            j += 1
        elif ai[i] < bi[j]:
            i += 1
        else:
            j += 1
    denom = a.norm() * b.norm()
    if denom == 0.0:  # norms of tiny values can underflow to zero
        return 0.0
    return max(-1.0, min(1.0, dot / denom))


@dataclass(frozen=True)
class DedupConfig:
    threshold: float = 0.85
    normalization: NormalizationConfig | None = field(default_factory=NormalizationConfig)
    sort_by_time: bool = False

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise VectorizeError("dedup threshold must lie in [0, 1]")


@dataclass
class RemovedDuplicate:
    removed_id: str
    kept_id: str
    similarity: float


def deduplicate(
    c: TweetCollection, cfg: DedupConfig | None = None
) -> tuple[TweetCollection, list[RemovedDuplicate]]:
    """Greedy keep-first near-duplicate removal.

    Tweets are processed in input order (optionally pre-sorted by
    timestamp); a tweet is dropped when its cosine similarity to some
    already-kept tweet is strictly above the threshold. Vectors are TF-IDF
    over the normalized text, fitted on this collection itself. The
    reported partner is the kept tweet with the highest similarity.
    """
    cfg = cfg or DedupConfig()
    order = list(c.tweets)
    if cfg.sort_by_time:
        order.sort(key=lambda t: (t.created_at is None, t.created_at or ""))

    if cfg.normalization is not None:
        docs = [tokenize(normalize(t.text, cfg.normalization)) for t in order]
    else:
        docs = [tokenize(t.text.lower()) for t in order]

    if not any(docs):
        return TweetCollection(tuple(order)), []

    vocab = fit_vocabulary(docs)
    vectors = transform_all(docs, vocab)

    kept: list[Tweet] = []
    kept_vectors: list[SparseVector] = []
    removed: list[RemovedDuplicate] = []
    # postings: term index -> [(kept position, weight)], lets each incoming
    # vector touch only kept vectors sharing at least one term
    postings: dict[int, list[tuple[int, float]]] = {}
    for tweet, vec in zip(order, vectors):
        candidates: set[int] = set()
        for idx in vec.indices:
            for pos, _ in postings.get(idx, ()):
                candidates.add(pos)
        best_pos = -1
        best_sim = -1.0
        for pos in sorted(candidates):
            sim = cosine(vec, kept_vectors[pos])
            if sim > best_sim:
                best_sim = sim
                best_pos = pos
        if best_pos >= 0 and best_sim > cfg.threshold:
            removed.append(RemovedDuplicate(tweet.id, kept[best_pos].id, best_sim))
            continue
        kept_pos = len(kept)
        kept.append(tweet)
        kept_vectors.append(vec)
        for idx, val in zip(vec.indices, vec.values):
            postings.setdefault(idx, []).append((kept_pos, val))
    return TweetCollection(tuple(kept)), removed
