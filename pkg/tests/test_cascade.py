"""Three-stage routing: gating, counts, percentage strings."""

from __future__ import annotations

import json

import pytest

from crisistriage.backend import BackendError
from crisistriage.cascade import (
    CascadeError,
    TriageReport,
    TweetTriage,
    format_report,
    format_routing_table,
    percent,
    routing_report,
    run_cascade,
)
from crisistriage.corpus import Tweet, TweetCollection


class Stub:
    """In-process stage predictor that labels by substring and logs calls."""

    def __init__(self, task_labels, fail=False):
        self.task_labels = task_labels
        self.fail = fail
        self.calls: list[list[str]] = []

    def predict(self, texts):
        self.calls.append(list(texts))
        if self.fail:
            raise BackendError("stub blew up")
        labels = [frozenset(l for l in self.task_labels if l in t) for t in texts]
        scores = [{l: (0.9 if l in row else 0.1) for l in self.task_labels}
                  for row in labels]
        return labels, scores


def info_stub(**kw):
    return Stub(["informative"], **kw)


def coll(*texts):
    return TweetCollection(tuple(Tweet(f"t{i}", t) for i, t in enumerate(texts)))


class TestPercent:
    def test_exact_strings(self):
        assert percent(8370, 14073) == "59.48"
        assert percent(7940, 14073) == "56.42"
        assert percent(1, 3) == "33.33"
        assert percent(2, 3) == "66.67"
        assert percent(3, 3) == "100.00"
        assert percent(0, 7) == "0.00"

    def test_zero_denominator(self):
        assert percent(0, 0) == "0.00"
        assert percent(5, 0) == "0.00"

    def test_halves_round_up_not_to_even(self):
        assert percent(1, 800) == "0.13"   # 0.125 exactly
        assert percent(3, 800) == "0.38"   # 0.375 exactly
        assert percent(1, 8) == "12.50"


class TestRunCascade:
    def texts(self):
        return [
            "informative need food",        # full path
            "informative supply shelter",
            "informative need supply wash", # both intents
            "background chatter",           # gated out
            "informative no aid words",     # informative, nothing downstream
        ]

    def test_counts_and_gating(self):
        info, intent = info_stub(), Stub(["need", "supply"])
        aid = Stub(["food", "shelter", "health", "wash"])
        r = run_cascade(coll(*self.texts()), info, intent, aid)
        assert r.total == 5
        assert r.informative_count == 4
        assert r.intent_counts == {"need": 2, "supply": 2}
        assert r.both_intents_count == 1
        assert r.aid_counts == {"food": 1, "shelter": 1, "health": 0, "wash": 1}
        # records stay in input order and gated tweets carry no stage 2/3 output
        assert [x.tweet_id for x in r.records] == ["t0", "t1", "t2", "t3", "t4"]
        gated = r.records[3]
        assert gated.informative is False
        assert gated.intent is None and gated.aid is None
        assert gated.intent_scores is None and gated.aid_scores is None
        # stages 2 and 3 saw only the informative texts
        assert intent.calls == [[t for t in self.texts() if "informative" in t]]
        assert aid.calls == intent.calls
        r.validate()

    def test_all_negative_first_stage_skips_the_rest(self):
        info, intent = info_stub(), Stub(["need", "supply"])
        aid = Stub(["food", "shelter", "health", "wash"])
        r = run_cascade(coll("noise", "more noise"), info, intent, aid)
        assert intent.calls == [] and aid.calls == []
        assert r.informative_count == 0
        assert r.intent_counts == {"need": 0, "supply": 0}
        assert r.informative_percent() == "0.00"
        assert r.intent_percent("need") == "0.00"

    def test_all_positive_saturates(self):
        class Always(Stub):
            def predict(self, texts):
                self.calls.append(list(texts))
                rows = [frozenset(self.task_labels) for _ in texts]
                return rows, [{l: 1.0 for l in self.task_labels} for _ in texts]

        r = run_cascade(
            coll("a", "b", "c"),
            Always(["informative"]), Always(["need", "supply"]),
            Always(["food", "shelter", "health", "wash"]),
        )
        assert r.informative_count == r.total == 3
        assert r.both_intents_count == 3
        assert all(v == 3 for v in r.aid_counts.values())
        assert r.informative_percent() == "100.00"

    def test_stage_failure_becomes_cascade_error_with_progress(self):
        info = info_stub()
        bad_intent = Stub(["need", "supply"], fail=True)
        aid = Stub(["food", "shelter", "health", "wash"])
        with pytest.raises(CascadeError) as exc:
            run_cascade(coll("informative x", "y"), info, bad_intent, aid)
        assert isinstance(exc.value.__cause__, BackendError)
        assert exc.value.stage == "intent"
        assert "progress" in str(exc.value)
        assert aid.calls == []

    def test_wrong_length_from_stage(self):
        class Short(Stub):
            def predict(self, texts):
                labels, scores = super().predict(texts)
                return labels[:-1], scores[:-1]

        with pytest.raises(CascadeError):
            run_cascade(coll("informative a", "informative b"),
                        Short(["informative"]), Stub(["need", "supply"]),
                        Stub(["food", "shelter", "health", "wash"]))


class TestReport:
    def small_report(self):
        info, intent = info_stub(), Stub(["need", "supply"])
        aid = Stub(["food", "shelter", "health", "wash"])
        texts = ["informative need food", "informative supply", "noise"]
        return run_cascade(coll(*texts), info, intent, aid)

    def test_json_shape(self):
        r = self.small_report()
        d = r.to_json_dict()
        assert d["total"] == 3
        assert d["informative"]["count"] == 2
        assert d["informative"]["percent"] == "66.67"
        assert d["intent"]["need"]["of"] == 2  # denominator is the informative count
        assert len(d["tweets"]) == 3
        slim = r.to_json_dict(include_tweets=False)
        assert "tweets" not in slim
        # byte-identical serialization for identical inputs
        assert self.small_report().to_json() == r.to_json()

    def test_validate_rejects_inconsistent_counts(self):
        r = self.small_report()
        bad = TriageReport(
            total=r.total, informative_count=r.total + 5,
            intent_counts=r.intent_counts, aid_counts=r.aid_counts,
            both_intents_count=r.both_intents_count, records=r.records,
        )
        with pytest.raises(CascadeError):
            bad.validate()
        bad2 = TriageReport(
            total=r.total, informative_count=r.informative_count,
            intent_counts={"need": 1, "supply": 0}, aid_counts=r.aid_counts,
            both_intents_count=1, records=r.records,
        )
        with pytest.raises(CascadeError):
            bad2.validate()

    def test_routing_table_lists_the_four_clusters(self):
        r = self.small_report()
        rep = routing_report(r)
        assert rep["denominator"] == 2
        names = [row["cluster"] for row in rep["clusters"]]
        assert names == ["Food", "Shelter", "Health", "WASH"]
        table = format_routing_table(r)
        assert "WASH" in table and "50.00" in table
        text = format_report(r)
        assert "66.67" in text

    def test_record_json_sorts_label_lists(self):
        rec = TweetTriage(
            tweet_id="t", text="x", informative=True,
            info_scores={"informative": 0.9},
            intent=frozenset({"supply", "need"}),
            intent_scores={"need": 0.9, "supply": 0.8},
            aid=frozenset({"wash", "food"}),
            aid_scores={"food": 0.9, "shelter": 0.1, "health": 0.1, "wash": 0.8},
        )
        d = rec.to_json_dict()
        assert d["intent"] == ["need", "supply"]
        assert d["aid"] == ["food", "wash"]
