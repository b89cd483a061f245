#!/usr/bin/env python3
"""Regenerate the shipped synthetic fixture corpus.

Produces a 60-tweet labeled corpus with clearly separable signal for all
three tasks, three near-duplicate pairs that only differ in junk the
normalizer strips, a 5-annotator vote file whose majority reproduces the
gold labels (plus one engineered unresolved vote), and the two lexicon
files used by the filter examples.

The output is deterministic; the generated files are committed, so this
script only needs to run again if the fixture design changes.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

# (text, intent labels, aid labels); every informative text carries at least
# three tokens of its cluster's vocabulary so even naive Bayes separates it
INFORMATIVE = [
    # need only
    ("urgent we need food meals and rice for 200 hungry families downtown #DorianRelief", ("need",), ("food",)),
    ("out of bread rice and groceries, need food donations at the harbor", ("need",), ("food",)),
    ("hungry kids need meals groceries and food parcels asap", ("need",), ("food",)),
    ("still need food packs bread and rice for the eastside, please help", ("need",), ("food",)),
    ("families need tents blankets and shelter cots tonight", ("need",), ("shelter",)),
    ("need emergency shelter tents and housing, our roof collapsed in the storm", ("need",), ("shelter",)),
    ("elderly couple needs blankets cots and a safe shelter spot", ("need",), ("shelter",)),
    ("injured people need medicine bandages and a doctor right now", ("need",), ("health",)),
    ("need a nurse medicine and clinic supplies, many hurt here", ("need",), ("health",)),
    ("my neighbor needs insulin a doctor and medical attention urgently", ("need",), ("health",)),
    ("no clean water here, we need water sanitation and hygiene support", ("need",), ("wash",)),
    ("need drinking water soap and hygiene kits for the camp http://relief.example/w", ("need",), ("wash",)),
    ("need clean water soap plus food rice and meals for stranded families", ("need",), ("food", "wash")),
    # supply only
    ("distributing meals rice and food packs near the harbor today", ("supply",), ("food",)),
    ("free bread rice and groceries available at the church kitchen", ("supply",), ("food",)),
    ("offering hot meals food boxes and groceries for anyone displaced", ("supply",), ("food",)),
    ("donating food bread and canned meals, pickup at main street depot", ("supply",), ("food",)),
    ("offering shelter beds cots and blankets at the community hall", ("supply",), ("shelter",)),
    ("we have spare tents blankets and shelter space available tonight", ("supply",), ("shelter",)),
    ("providing temporary housing shelter and blankets for displaced families", ("supply",), ("shelter",)),
    ("clinic offering free medicine bandages and doctor checks all week", ("supply",), ("health",)),
    ("volunteer doctors and nurses providing medical care and medicine downtown", ("supply",), ("health",)),
    ("we can donate bandages medicine and clinic supplies, message us", ("supply",), ("health",)),
    ("providing clean water soap and hygiene kits at the north gate", ("supply",), ("wash",)),
    ("free bottled water sanitation and hygiene supplies available here", ("supply",), ("wash",)),
    ("offering water purification sanitation help plus medicine and bandages", ("supply",), ("health", "wash")),
    # both intents
    ("we need drivers and are offering food meals and rice at the harbor", ("need", "supply"), ("food",)),
    ("need volunteers to hand out the food bread and meals we are providing", ("need", "supply"), ("food",)),
    ("need cots and blankets for the shelter we are offering at the school gym", ("need", "supply"), ("shelter",)),
    ("offering shelter space and tents but need more blankets for everyone", ("need", "supply"), ("shelter",)),
    ("need a nurse for the clinic where we are providing medicine and bandages", ("need", "supply"), ("health",)),
    ("offering doctor visits but need more medicine bandages and clinic room", ("need", "supply"), ("health",)),
    ("providing water refills but need sanitation soap and hygiene supplies", ("need", "supply"), ("wash",)),
    ("need jerrycans for the clean water sanitation and soap we are distributing", ("need", "supply"), ("wash",)),
]

NOISE = [
    "great football game tonight lol",
    "new movie trailer looks amazing",
    "selfie from the beach this morning",
    "shopping downtown this weekend with friends",
    "concert tickets on sale now http://tix.example/z",
    "the weather is finally nice today",
    "my cat knocked over the plant again",
    "anyone watching the match later",
    "just finished a great book, highly recommend",
    "traffic on main street is wild as usual",
    "new coffee place opened near the harbor",
    "homework due tomorrow and i have not started",
    "best pizza in town hands down",
    "can't stop listening to this album",
    "the sunset looked unreal tonight #nofilter",
    "my fantasy team is doing terrible this season",
    "finally upgraded my phone, so fast",
    "thinking about repainting the kitchen",
    "lol this meme has me crying",
    "weekend plans: absolutely nothing",
]

# (source row index, decoration): decorations vanish under normalization,
# so each pair is an exact near-duplicate of its source
DUP_SOURCES = [
    (0, " http://t.co/abc123"),
    (13, " @reliefteam #Dorian"),
    (17, " 77"),
    (23, " pic.twitter.com/xyz9"),
]
DUP_NOISE_SOURCES = [
    (0, " http://t.co/qq1"),
    (4, " @ticketbot"),
]

KEYWORDS = [
    "hurricane", "storm", "flood", "need", "help", "water", "food", "meals",
    "shelter", "tents", "medicine", "clinic", "sanitation", "hygiene",
    "relief", "rescue", "first aid",
]
LOCATIONS = [
    "harbor", "downtown", "main street", "eastside", "north gate", "church",
    "school gym", "community hall",
]


def build_rows() -> list[dict]:
    rows = []
    for text, intent, aid in INFORMATIVE:
        rows.append({"text": text, "informative": True, "intent": intent, "aid": aid})
    for text in NOISE:
        rows.append({"text": text, "informative": False, "intent": None, "aid": None})
    for idx, junk in DUP_SOURCES:
        base = INFORMATIVE[idx]
        rows.append(
            {"text": base[0] + junk, "informative": True, "intent": base[1], "aid": base[2]}
        )
    for idx, junk in DUP_NOISE_SOURCES:
        rows.append(
            {"text": NOISE[idx] + junk, "informative": False, "intent": None, "aid": None}
        )
    random.Random(13).shuffle(rows)
    start = datetime(2019, 9, 2, tzinfo=timezone.utc)
    for i, row in enumerate(rows):
        row["id"] = f"t{i + 1:02d}"
        row["created_at"] = (start + timedelta(hours=i)).strftime("%Y-%m-%dT%H:%M:%SZ")
    return rows


def write_tweets(rows: list[dict], path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            labels: dict = {"informative": row["informative"]}
            if row["intent"] is not None:
                labels["intent"] = sorted(row["intent"])
            if row["aid"] is not None:
                labels["aid"] = sorted(row["aid"])
            fh.write(
                json.dumps(
                    {
                        "id": row["id"],
                        "text": row["text"],
                        "created_at": row["created_at"],
                        "event": "dorian",
                        "labels": labels,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def _intent_cell(intent: tuple[str, ...]) -> str:
    return "both" if set(intent) == {"need", "supply"} else ";".join(intent)


def write_votes(rows: list[dict], path: Path) -> None:
    """Five votes per tweet and task; annotator a5 dissents now and then,
    never enough to flip the 3-of-5 majority. The last noise tweet gets
    only four split informativeness votes, leaving it unresolved.
    """
    rng = random.Random(29)
    unresolved_id = next(r["id"] for r in reversed(rows) if not r["informative"])
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tweet_id", "task", "annotator_id", "labels"])
        for row in rows:
            if row["id"] == unresolved_id:
                for annotator, vote in zip("1234", ["yes", "yes", "no", "no"]):
                    writer.writerow([row["id"], "informative", f"a{annotator}", vote])
                continue
            gold = "yes" if row["informative"] else "no"
            for annotator in range(1, 6):
                vote = gold
                if annotator == 5 and rng.random() < 0.2:
                    vote = "no" if gold == "yes" else "yes"
                writer.writerow([row["id"], "informative", f"a{annotator}", vote])
            if not row["informative"]:
                continue
            intent_gold = _intent_cell(row["intent"])
            for annotator in range(1, 6):
                vote = intent_gold
                if annotator == 5 and rng.random() < 0.2:
                    vote = rng.choice(["need", "supply", "both", ""])
                writer.writerow([row["id"], "intent", f"a{annotator}", vote])
            aid_gold = ";".join(sorted(row["aid"]))
            for annotator in range(1, 6):
                vote = aid_gold
                if annotator == 5 and rng.random() < 0.2 and len(row["aid"]) > 1:
                    vote = sorted(row["aid"])[0]
                writer.writerow([row["id"], "aid", f"a{annotator}", vote])


def write_lexicon(terms: list[str], header: str, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        for term in terms:
            fh.write(term + "\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out-dir",
        default=str(Path(__file__).resolve().parent.parent / "data"),
        help="directory receiving fixtures/ and lexicons/",
    )
    args = parser.parse_args()
    out = Path(args.out_dir)
    (out / "fixtures").mkdir(parents=True, exist_ok=True)
    (out / "lexicons").mkdir(parents=True, exist_ok=True)

    rows = build_rows()
    write_tweets(rows, out / "fixtures" / "tweets60.jsonl")
    write_votes(rows, out / "fixtures" / "annotations60.csv")
    write_lexicon(KEYWORDS, "relief-related keywords for coarse filtering",
                  out / "lexicons" / "keywords.txt")
    write_lexicon(LOCATIONS, "toy event place names", out / "lexicons" / "locations.txt")
    n_informative = sum(1 for r in rows if r["informative"])
    print(f"wrote {len(rows)} tweets ({n_informative} informative) to {out / 'fixtures'}")


if __name__ == "__main__":
    main()
