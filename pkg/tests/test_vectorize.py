"""TF-IDF vectors, cosine similarity, and near-duplicate removal."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crisistriage.corpus import Tweet, TweetCollection
from crisistriage.vectorize import (
    DedupConfig,
    SparseVector,
    VectorizeError,
    Vocabulary,
    cosine,
    deduplicate,
    fit_vocabulary,
    transform,
    transform_all,
)


def idf(df, n):
    return math.log((1 + n) / (1 + df)) + 1.0


class TestTfidf:
    def test_two_doc_corpus_by_hand(self):
        docs = [["need", "water", "water"], ["need", "food"]]
        vocab = fit_vocabulary(docs)
        # columns alphabetical: food=0, need=1, water=2
        assert vocab.index == {"food": 0, "need": 1, "water": 2}
        assert vocab.df == {"need": 2, "water": 1, "food": 1}

        x = transform(docs[0], vocab)
        raw = [0.0, 1 * idf(2, 2), 2 * idf(1, 2)]
        norm = math.sqrt(sum(v * v for v in raw))
        want = [v / norm for v in raw]
        dense = x.to_dense()
        assert dense == pytest.approx(want, abs=1e-12)
        assert x.indices == (1, 2)

    def test_unit_norm_and_oov(self):
        vocab = fit_vocabulary([["a", "b"], ["b", "c"]])
        assert transform(["a", "c", "zzz"], vocab).norm() == pytest.approx(1.0, abs=1e-12)
        only_oov = transform(["zzz", "qqq"], vocab)
        assert only_oov.is_zero()
        assert only_oov.norm() == 0.0

    def test_common_terms_score_below_rare_ones(self):
        docs = [["shared", "rare"], ["shared"], ["shared"]]
        vocab = fit_vocabulary(docs)
        x = transform(["shared", "rare"], vocab)
        assert x.get(vocab.index["rare"]) > x.get(vocab.index["shared"])

    def test_empty_inputs_rejected(self):
        with pytest.raises(VectorizeError):
            fit_vocabulary([])
        with pytest.raises(VectorizeError):
            fit_vocabulary([[], []])  # no tokens anywhere

    def test_vocabulary_json_roundtrip_and_hash(self):
        vocab = fit_vocabulary([["b", "a"], ["a", "c"]])
        again = Vocabulary.from_json_dict(vocab.to_json_dict())
        assert again == vocab
        assert again.sha256() == vocab.sha256()
        other = fit_vocabulary([["b", "a"], ["a", "d"]])
        assert other.sha256() != vocab.sha256()


class TestCosine:
    def test_identical_orthogonal_and_zero(self):
        a = SparseVector((0, 2), (0.6, 0.8), 4)
        b = SparseVector((1, 3), (1.0, 1.0), 4)
        assert cosine(a, a) == pytest.approx(1.0, abs=1e-12)
        assert cosine(a, b) == 0.0
        zero = SparseVector((), (), 4)
        assert cosine(a, zero) == 0.0

    def test_dimension_mismatch_raises(self):
        with pytest.raises(VectorizeError):
            cosine(SparseVector((0,), (1.0,), 2), SparseVector((0,), (1.0,), 3))

    @given(st.data())
    @settings(max_examples=80, deadline=None)
    def test_symmetric_and_bounded(self, data):
        dim = data.draw(st.integers(min_value=1, max_value=6))
        def vec():
            vals = data.draw(st.lists(
                st.floats(min_value=0.0, max_value=5.0), min_size=dim, max_size=dim))
            idx = tuple(i for i, v in enumerate(vals) if v > 0)
            return SparseVector(idx, tuple(v for v in vals if v > 0), dim)
        a, b = vec(), vec()
        s = cosine(a, b)
        assert s == cosine(b, a)
        assert -1e-12 <= s <= 1.0 + 1e-12


class TestDedup:
    def tweets(self, *texts, times=None):
        ts = times or [None] * len(texts)
        return TweetCollection(tuple(
            Tweet(f"t{i}", txt, created_at=ts[i]) for i, txt in enumerate(texts)
        ))

    def test_decorated_copies_collapse(self):
        c = self.tweets(
            "Hurricane Dorian destroys homes in Abaco",
            "Hurricane Dorian destroys homes in Abaco http://t.co/x1",
            "completely different text about shelters",
        )
        kept, removed = deduplicate(c)
        assert [t.id for t in kept.tweets] == ["t0", "t2"]
        assert len(removed) == 1
        assert (removed[0].removed_id, removed[0].kept_id) == ("t1", "t0")
        assert removed[0].similarity == pytest.approx(1.0, abs=1e-12)

    def test_first_occurrence_wins_in_input_order(self):
        c = self.tweets("water needed now", "water needed now", "water needed now")
        kept, removed = deduplicate(c)
        assert [t.id for t in kept.tweets] == ["t0"]
        assert [(r.removed_id, r.kept_id) for r in removed] == [("t1", "t0"), ("t2", "t0")]

    def test_sort_by_time_keeps_earliest(self):
        c = self.tweets(
            "water needed now", "water needed now",
            times=["2019-09-02T05:00:00Z", "2019-09-02T01:00:00Z"],
        )
        kept, removed = deduplicate(c, DedupConfig(sort_by_time=True))
        assert [t.id for t in kept.tweets] == ["t1"]
        assert removed[0].removed_id == "t0"

    def test_threshold_is_strict(self):
        c = self.tweets("exact same words", "exact same words")
        kept, removed = deduplicate(c, DedupConfig(threshold=1.0))
        # similarity 1.0 is not > 1.0, so nothing goes
        assert len(kept.tweets) == 2
        assert removed == []

    def test_partner_is_most_similar_kept_tweet(self):
        c = self.tweets(
            "alpha beta gamma delta",
            "epsilon zeta eta theta",
            "epsilon zeta eta iota",
        )
        kept, removed = deduplicate(c, DedupConfig(threshold=0.5))
        assert [t.id for t in kept.tweets] == ["t0", "t1"]
        assert [(r.removed_id, r.kept_id) for r in removed] == [("t2", "t1")]

    def test_no_surviving_pair_above_threshold(self):
        texts = [f"need water {w}" for w in "abcdefgh"] + ["unrelated thing entirely"]
        c = self.tweets(*texts)
        cfg = DedupConfig(threshold=0.6)
        kept, _ = deduplicate(c, cfg)
        from crisistriage.preprocess import normalize, tokenize
        docs = [tokenize(normalize(t.text, cfg.normalization)) for t in kept.tweets]
        vocab = fit_vocabulary(docs)
        vecs = transform_all(docs, vocab)
        for i in range(len(vecs)):
            for j in range(i + 1, len(vecs)):
                assert cosine(vecs[i], vecs[j]) <= cfg.threshold + 1e-12

    def test_empty_and_all_blank_are_noops(self):
        kept, removed = deduplicate(TweetCollection(()))
        assert kept.tweets == () and removed == []
        c = self.tweets("http://t.co/a", "http://t.co/b")  # normalize to nothing
        kept, removed = deduplicate(c)
        assert [t.id for t in kept.tweets] == ["t0", "t1"]
        assert removed == []
