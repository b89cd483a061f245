"""Vote loading, majority aggregation, and agreement audits."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crisistriage.annotate import (
    AnnotationError,
    AnnotationRecord,
    aggregate_corpus,
    aggregate_majority,
    agreement_report,
    attach_labels,
    load_annotations,
)
from crisistriage.corpus import LabelSet, Tweet, TweetCollection
from crisistriage.evaluation import cohens_kappa


def votes(task, *label_sets, tweet_id="t1"):
    return [
        AnnotationRecord(tweet_id, task, f"a{i}", frozenset(labels))
        for i, labels in enumerate(label_sets)
    ]


def write_csv(path, rows):
    header = "tweet_id,task,annotator_id,labels\n"
    path.write_text(header + "\n".join(",".join(r) for r in rows) + "\n", encoding="utf-8")


class TestLoadAnnotations:
    def test_label_cell_spellings(self, tmp_path):
        p = tmp_path / "v.csv"
        write_csv(p, [
            ("t1", "informative", "a1", "yes"),
            ("t1", "informative", "a2", "no"),
            ("t2", "intent", "a1", "need;supply"),
            ("t3", "intent", "a1", "both"),
            ("t4", "intent", "a1", "none"),
            ("t5", "aid", "a1", "Food; WASH"),
            ("t6", "aid", "a1", "none of the above"),
        ])
        records, errors = load_annotations(p)
        assert errors == []
        by_id = {(r.tweet_id, r.annotator_id): r.labels for r in records}
        assert by_id[("t1", "a1")] == frozenset({"informative"})
        assert by_id[("t1", "a2")] == frozenset()
        assert by_id[("t2", "a1")] == frozenset({"need", "supply"})
        assert by_id[("t3", "a1")] == frozenset({"need", "supply"})
        assert by_id[("t4", "a1")] == frozenset()
        assert by_id[("t5", "a1")] == frozenset({"food", "wash"})
        assert by_id[("t6", "a1")] == frozenset()

    def test_bad_rows_reported_not_fatal(self, tmp_path):
        p = tmp_path / "v.csv"
        write_csv(p, [
            ("t1", "informative", "a1", "yes"),
            ("t2", "stance", "a1", "yes"),          # unknown task
            ("t3", "aid", "a1", "money"),           # unknown label
            ("t1", "informative", "a1", "no"),      # duplicate vote
        ])
        records, errors = load_annotations(p)
        assert len(records) == 1
        assert records[0].labels == frozenset({"informative"})  # first vote kept
        assert sorted(e.line for e in errors) == [3, 4, 5]

    def test_missing_columns_fatal(self, tmp_path):
        p = tmp_path / "v.csv"
        p.write_text("tweet_id,annotator_id\nt1,a1\n", encoding="utf-8")
        with pytest.raises(AnnotationError):
            load_annotations(p)


class TestMajority:
    def test_exact_threshold_on_multilabel(self):
        out = aggregate_majority(votes(
            "intent",
            {"need"}, {"need"}, {"need"}, {"supply"}, set(),
        ))
        assert out.resolved and out.labels == frozenset({"need"})

    def test_both_votes_promote_both_labels(self):
        out = aggregate_majority(votes(
            "intent",
            {"need", "supply"}, {"need", "supply"}, {"need", "supply"},
            {"need"}, set(),
        ))
        assert out.labels == frozenset({"need", "supply"})

    def test_informative_needs_majority_either_way(self):
        yes = frozenset({"informative"})
        no = frozenset()
        out = aggregate_majority(votes("informative", yes, yes, yes, no, no))
        assert out.resolved and out.labels == yes
        out = aggregate_majority(votes("informative", no, no, no, yes, yes))
        assert out.resolved and out.labels == frozenset()
        out = aggregate_majority(votes("informative", yes, yes, no, no), min_agree=3)
        assert not out.resolved and out.labels is None

    def test_empty_resolution_differs_from_unresolved(self):
        # three explicit "nothing applies" votes resolve to the empty set
        out = aggregate_majority(votes("aid", set(), set(), set(), {"food"}, set()))
        assert out.resolved and out.labels == frozenset()

    def test_guard_rails(self):
        with pytest.raises(AnnotationError):
            aggregate_majority([])
        with pytest.raises(AnnotationError):
            aggregate_majority(votes("intent", {"need"}, {"need"}), min_agree=3)
        mixed = votes("intent", {"need"}) + votes("aid", {"food"})
        with pytest.raises(AnnotationError):
            aggregate_majority(mixed)

    @given(st.data())
    @settings(max_examples=80, deadline=None)
    def test_order_invariant_and_vote_monotone(self, data):
        import random
        n = data.draw(st.integers(min_value=3, max_value=7))
        pool = [frozenset(), frozenset({"need"}), frozenset({"supply"}),
                frozenset({"need", "supply"})]
        ballots = [data.draw(st.sampled_from(pool)) for _ in range(n)]
        recs = votes("intent", *ballots)
        base = aggregate_majority(recs)
        shuffled = list(recs)
        random.Random(data.draw(st.integers(0, 99))).shuffle(shuffled)
        assert aggregate_majority(shuffled).labels == base.labels
        # one more supporting ballot never removes a label that was present
        extra = votes("intent", {"need"})[0]
        extra = AnnotationRecord("t1", "intent", "a_extra", frozenset({"need"}))
        more = aggregate_majority(recs + [extra])
        if base.resolved and base.labels and "need" in base.labels:
            assert more.labels is not None and "need" in more.labels


class TestAggregateCorpus:
    def records(self):
        yes = frozenset({"informative"})
        recs = []
        recs += votes("informative", yes, yes, yes, tweet_id="t1")
        recs += votes("intent", {"need"}, {"need"}, {"need"}, tweet_id="t1")
        recs += votes("informative", yes, yes, frozenset(), frozenset(), tweet_id="t2")
        return recs

    def test_grouping_and_unresolved(self):
        res = aggregate_corpus(self.records(), min_agree=3)
        assert list(res.labels_by_id) == ["t1"]
        ls = res.labels_by_id["t1"]
        assert ls.informative is True
        assert ls.intent == frozenset({"need"})
        assert res.unresolved == [("t2", "informative")]

    def test_attach_labels_joins_and_reports_orphan_labels(self):
        res = aggregate_corpus(self.records(), min_agree=3)
        tweets = TweetCollection((Tweet("t1", "need food"), Tweet("t9", "no votes")))
        labeled, missing = attach_labels(tweets, res.labels_by_id)
        # unlabeled tweets are dropped; missing lists labels with no tweet
        assert [it.tweet.id for it in labeled.items] == ["t1"]
        assert missing == []
        labels = dict(res.labels_by_id)
        labels["t7"] = LabelSet(informative=True)
        _, missing = attach_labels(tweets, labels)
        assert missing == ["t7"]


class TestAgreement:
    def perfect(self):
        ls = LabelSet(informative=True, intent=frozenset({"need"}), aid=frozenset({"food"}))
        other = LabelSet(informative=False)
        return {"t1": ls, "t2": other}

    def test_perfect_agreement_scores_one(self):
        expert = self.perfect()
        rep = agreement_report(expert, dict(expert))
        by_task = {t.task: t for t in rep.tasks}
        assert by_task["informative"].kappa == 1.0
        assert by_task["informative"].n_items == 2
        # intent/aid annotated on one side only for t2, so one shared item
        assert by_task["intent"].n_items == 1

    def test_kappa_matches_direct_computation(self):
        expert, majority = {}, {}
        pattern = [(True, True), (True, False), (False, True), (True, True),
                   (False, False), (True, True), (False, False), (True, False)]
        for i, (e, m) in enumerate(pattern):
            expert[f"t{i}"] = LabelSet(informative=e)
            majority[f"t{i}"] = LabelSet(informative=m)
        rep = agreement_report(expert, majority)
        info = next(t for t in rep.tasks if t.task == "informative")
        gold = [int(e) for e, _ in pattern]
        pred = [int(m) for _, m in pattern]
        assert info.kappa == pytest.approx(cohens_kappa(gold, pred), abs=1e-12)
        conf = info.confusion["informative"]
        assert (conf["tp"], conf["fp"], conf["fn"], conf["tn"]) == (3, 1, 2, 2)

    def test_id_mismatch_rejected(self):
        expert = self.perfect()
        with pytest.raises(AnnotationError):
            agreement_report(expert, {"t1": expert["t1"]})


class TestShippedVotes:
    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_fixture_votes_reproduce_fixture_labels(self, fixture_tweets, fixture_votes):
        from crisistriage.corpus import load_tweets

        records, errors = load_annotations(fixture_votes)
        assert errors == []
        res = aggregate_corpus(records, min_agree=3)
        assert res.unresolved == [("t58", "informative")]

        shipped = load_tweets(fixture_tweets)
        for tid, want in shipped.labels_by_id.items():
            if tid == "t58":
                continue
            got = res.labels_by_id[tid]
            assert got.informative == want.informative, tid
            if want.informative:
                assert got.intent == want.intent, tid
                assert got.aid == want.aid, tid
