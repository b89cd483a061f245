"""Command-line interface.

One subcommand per pipeline step: ingest, filter, dedup, split, train,
evaluate, triage, aggregate, crossval. Exit codes: 0 success, 1 usage
error, 2 data error, 3 backend error. Flags override --config file
values, which override built-in defaults.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

from . import TASKS, __version__
from .annotate import (
    AnnotationError,
    aggregate_corpus,
    agreement_report,
    attach_labels,
    load_annotations,
)
from .backend import BackendClient, BackendError, ExternalBackendRef
from .cascade import CascadeError, format_report, format_routing_table, run_cascade
from .classifier import ClassifierError, TextClassifier, fit_text_classifier
from .config import CONFIG_KEYS, PipelineConfig
from .corpus import (
    CorpusError,
    RecordError,
    SplitConfig,
    load_labeled,
    load_tweets,
    save_tweets,
    split_train_test,
)
from .evaluation import (
    EvalError,
    ExperimentConfig,
    MetricsReport,
    annotated_subset,
    cross_event_eval,
    evaluate_classifier,
    run_experiment,
)
from .filterquery import (
    QueryError,
    QuerySyntaxError,
    combine_queries,
    filter_by_time,
    filter_corpus,
    load_lexicon,
    parse_query,
    print_query,
)
from .models import LrModel, MnbModel, ModelError, OvrModel
from .vectorize import DedupConfig, VectorizeError, deduplicate


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse normally exits 2 on bad flags; we reserve 2 for data errors."""

    def error(self, message):
        raise UsageError(message)


def _add_input(parser: _Parser, flag: str = "--input", required: bool = True) -> None:
    parser.add_argument(flag, "--in", dest="input", required=required, help="input corpus file")
    parser.add_argument(
        "--format", choices=("jsonl", "csv"), default="jsonl", help="input file format"
    )


def _add_config_flag(parser: _Parser) -> None:
    parser.add_argument("--config", help="flat JSON config file (flags take precedence)")


def _add_norm_flags(parser: _Parser) -> None:
    group = parser.add_argument_group("normalization")
    for name in (
        "remove_urls",
        "remove_image_links",
        "remove_numbers",
        "remove_hashtags",
        "remove_mentions",
        "remove_non_ascii",
        "lowercase",
        "collapse_whitespace",
    ):
        group.add_argument(
            "--" + name.replace("_", "-"),
            dest=name,
            action=argparse.BooleanOptionalAction,
            default=argparse.SUPPRESS,
            help=f"{name.replace('_', ' ')} during normalization (default: on)",
        )


def _add_model_flags(parser: _Parser) -> None:
    group = parser.add_argument_group("model")
    group.add_argument(
        "--task", choices=TASKS, default=argparse.SUPPRESS, help="classification task"
    )
    group.add_argument(
        "--model", choices=("mnb", "lr"), default=argparse.SUPPRESS, help="model kind"
    )
    group.add_argument("--alpha", type=float, default=argparse.SUPPRESS,
                       help="naive Bayes smoothing (default 1.0)")
    group.add_argument("--learning-rate", type=float, default=argparse.SUPPRESS,
                       help="gradient descent step size (default 0.1)")
    group.add_argument("--l2", type=float, default=argparse.SUPPRESS,
                       help="L2 penalty coefficient (default 1e-4)")
    group.add_argument("--max-iter", type=int, default=argparse.SUPPRESS,
                       help="gradient descent iteration cap (default 1000)")
    group.add_argument("--tolerance", type=float, default=argparse.SUPPRESS,
                       help="gradient infinity-norm stopping tolerance (default 1e-6)")
    group.add_argument("--threshold", type=float, default=argparse.SUPPRESS,
                       help="multi-label decision threshold (default 0.5)")


def build_parser() -> _Parser:
    parser = _Parser(prog="crisistriage", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("ingest", help="parse and validate a corpus file")
    _add_input(p)
    _add_config_flag(p)
    p.add_argument("--out", help="write the validated corpus here (jsonl)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("filter", help="keep tweets matching keyword/location queries")
    _add_input(p)
    _add_config_flag(p)
    p.add_argument("--query", action="append", default=[], metavar="QUERY",
                   help="boolean query; repeatable, matches are OR-ed")
    p.add_argument("--lexicon", action="append", default=[], metavar="PATH",
                   help="term list file, one query per file; repeatable")
    p.add_argument("--keywords", metavar="PATH", help="keyword lexicon file")
    p.add_argument("--locations", metavar="PATH", help="location lexicon file")
    p.add_argument("--combine", choices=("and", "or"), default="and",
                   help="how --keywords and --locations combine (default and)")
    p.add_argument("--since", metavar="ISO", help="drop tweets before this timestamp")
    p.add_argument("--until", metavar="ISO", help="drop tweets at/after this timestamp")
    p.add_argument("--out", required=True, help="output corpus file")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("dedup", help="remove near-duplicate tweets")
    _add_input(p)
    _add_config_flag(p)
    _add_norm_flags(p)
    p.add_argument("--threshold", dest="dedup_threshold", type=float,
                   default=argparse.SUPPRESS, help="cosine threshold (default 0.85)")
    p.add_argument("--sort-by-time", action="store_true",
                   help="process in timestamp order so the earliest copy is kept")
    p.add_argument("--out", required=True, help="output corpus file")
    p.add_argument("--removed-out", help="write removal records (jsonl) here")
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("split", help="seeded train/test split of labeled data")
    _add_input(p)
    _add_config_flag(p)
    p.add_argument("--train-fraction", type=float, default=argparse.SUPPRESS,
                   help="train share (default 0.8)")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="shuffle seed")
    p.add_argument("--stratify", dest="stratify", action=argparse.BooleanOptionalAction,
                   default=argparse.SUPPRESS, help="stratify by informativeness")
    p.add_argument("--train-out", required=True, help="training half output")
    p.add_argument("--test-out", required=True, help="test half output")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a classifier and save it")
    _add_config_flag(p)
    _add_norm_flags(p)
    _add_model_flags(p)
    p.add_argument("--train", required=True, metavar="PATH", help="labeled training data")
    p.add_argument("--train-format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model, or run a seeded experiment")
    _add_config_flag(p)
    _add_norm_flags(p)
    _add_model_flags(p)
    p.add_argument("--model-file", metavar="PATH", help="saved model to score (needs --test)")
    p.add_argument("--test", metavar="PATH", help="labeled test data for --model-file")
    p.add_argument("--data", metavar="PATH",
                   help="labeled data for experiment mode (split per run)")
    p.add_argument("--data-format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--runs", dest="n_runs", type=int, default=argparse.SUPPRESS,
                   help="experiment repetitions (default 5)")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="base seed; run i uses seed+i")
    p.add_argument("--train-fraction", type=float, default=argparse.SUPPRESS)
    p.add_argument("--stratify", dest="stratify", action=argparse.BooleanOptionalAction,
                   default=argparse.SUPPRESS)
    p.add_argument("--out", help="write the metrics report here instead of stdout")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("triage", help="run the three-stage cascade and write a report")
    p.add_argument("action", nargs="?", choices=("run",), default="run",
                   help=argparse.SUPPRESS)
    _add_input(p)
    _add_config_flag(p)
    p.add_argument("--info-model", metavar="PATH", help="stage-1 model file")
    p.add_argument("--intent-model", metavar="PATH", help="stage-2 model file")
    p.add_argument("--aid-model", metavar="PATH", help="stage-3 model file")
    p.add_argument("--info-backend", metavar="ENDPOINT",
                   help="stage-1 backend (command line or tcp://host:port)")
    p.add_argument("--intent-backend", metavar="ENDPOINT", help="stage-2 backend")
    p.add_argument("--aid-backend", metavar="ENDPOINT", help="stage-3 backend")
    p.add_argument("--backend", default=argparse.SUPPRESS, metavar="ENDPOINT",
                   help="fallback backend for stages without a model file")
    p.add_argument("--backend-timeout", type=float, default=argparse.SUPPRESS,
                   help="per-response timeout in seconds (default 60)")
    p.add_argument("--out", required=True, help="report JSON file")
    p.add_argument("--table", action="store_true", help="also print the per-cluster table")
    p.set_defaults(func=cmd_triage)

    p = sub.add_parser("aggregate", help="majority-vote annotator ballots into gold labels")
    _add_config_flag(p)
    p.add_argument("--votes", required=True, metavar="PATH", help="annotation CSV")
    p.add_argument("--min-agree", dest="min_agree", type=int, default=argparse.SUPPRESS,
                   help="votes needed to include a label (default 3)")
    p.add_argument("--tweets", metavar="PATH", help="corpus to attach the labels to")
    p.add_argument("--out", required=True, help="labeled output (jsonl)")
    p.add_argument("--unresolved-out", metavar="PATH",
                   help="write unresolved (tweet, task) pairs here")
    p.add_argument("--expert", metavar="PATH",
                   help="expert-labeled tweets to audit agreement against")
    p.add_argument("--agreement-out", metavar="PATH",
                   help="write the agreement report here instead of stdout")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("crossval", help="evaluate an informativeness model across events")
    _add_config_flag(p)
    p.add_argument("--model-file", required=True, metavar="PATH")
    p.add_argument("--event", action="append", required=True, metavar="NAME=PATH",
                   help="labeled event dataset; repeatable")
    p.add_argument("--out", help="write the per-event report here instead of stdout")
    p.set_defaults(func=cmd_crossval)

    return parser


def _resolve_config(args: argparse.Namespace) -> PipelineConfig:
    try:
        base = (
            PipelineConfig.load(args.config)
            if getattr(args, "config", None)
            else PipelineConfig()
        )
        overrides = {k: v for k, v in vars(args).items() if k in CONFIG_KEYS}
        return base.apply(overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _report_record_errors(errors: list[RecordError], source: str) -> None:
    for err in errors:
        print(f"{source}:{err.line}: skipped: {err.reason}", file=sys.stderr)


def _write_json(payload: dict | list, out: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_ingest(args) -> int:
    result = load_tweets(args.input, format=args.format)
    _report_record_errors(result.errors, args.input)
    if len(result.collection) == 0:
        raise CorpusError(f"{args.input}: no valid records")
    if args.out:
        save_tweets(result.collection, args.out, labels_by_id=result.labels_by_id)
    print(
        f"{len(result.collection)} tweets, {len(result.labels_by_id)} labeled, "
        f"{result.n_skipped} rows skipped"
    )
    return 0


def cmd_filter(args) -> int:
    result = load_tweets(args.input, format=args.format)
    _report_record_errors(result.errors, args.input)

    queries = []
    for text in args.query:
        try:
            queries.append(parse_query(text))
        except QuerySyntaxError as exc:
            raise UsageError(f"--query {text!r}: {exc}") from exc
    for path in args.lexicon:
        queries.append(load_lexicon(path))
    if (args.keywords is None) != (args.locations is None) and args.combine == "and":
        raise UsageError("--combine and needs both --keywords and --locations")
    if args.keywords or args.locations:
        keyword_q = load_lexicon(args.keywords) if args.keywords else None
        location_q = load_lexicon(args.locations) if args.locations else None
        if keyword_q and location_q:
            queries.append(combine_queries(keyword_q, location_q, mode=args.combine))
        else:
            queries.append(keyword_q or location_q)
    if not queries and not (args.since or args.until):
        raise UsageError("nothing to filter by: give --query, --lexicon, or a time bound")

    collection = result.collection
    if args.since or args.until:
        collection = filter_by_time(collection, since=args.since, until=args.until)
    if queries:
        filtered = filter_corpus(queries, collection)
        for q, hits in zip(queries, filtered.hits_per_query):
            tag = q.source_tag or print_query(q)
            print(f"{tag}: {hits} matching tweets")
        collection = filtered.kept
    save_tweets(collection, args.out, labels_by_id=result.labels_by_id)
    print(f"kept {len(collection)} of {len(result.collection)} tweets")
    return 0


def cmd_dedup(args) -> int:
    cfg = _resolve_config(args)
    result = load_tweets(args.input, format=args.format)
    _report_record_errors(result.errors, args.input)
    dedup_cfg = DedupConfig(
        threshold=cfg.dedup_threshold,
        normalization=cfg.normalization(),
        sort_by_time=args.sort_by_time,
    )
    kept, removed = deduplicate(result.collection, dedup_cfg)
    save_tweets(kept, args.out, labels_by_id=result.labels_by_id)
    if args.removed_out:
        with open(args.removed_out, "w", encoding="utf-8") as fh:
            for r in removed:
                fh.write(
                    json.dumps(
                        {
                            "removed_id": r.removed_id,
                            "kept_id": r.kept_id,
                            "similarity": r.similarity,
                        }
                    )
                    + "\n"
                )
    print(
        f"kept {len(kept)} tweets, removed {len(removed)} near-duplicates "
        f"above {cfg.dedup_threshold:g}"
    )
    return 0


def cmd_split(args) -> int:
    cfg = _resolve_config(args)
    labeled, errors = load_labeled(args.input, format=args.format)
    _report_record_errors(errors, args.input)
    if len(labeled) == 0:
        raise CorpusError(f"{args.input}: no labeled records")
    train, test = split_train_test(
        labeled,
        SplitConfig(
            train_fraction=cfg.train_fraction,
            seed=cfg.seed,
            stratify_by_informative=cfg.stratify,
        ),
    )
    save_tweets(train, args.train_out)
    save_tweets(test, args.test_out)
    print(f"{len(train)} train / {len(test)} test (seed {cfg.seed})")
    return 0


def _model_kind(clf: TextClassifier) -> str:
    model = clf.model
    if isinstance(model, OvrModel):
        model = next(
            (m for m in model.models.values() if isinstance(m, (MnbModel, LrModel))), None
        )
    if isinstance(model, MnbModel):
        return "mnb"
    if isinstance(model, LrModel):
        return "lr"
    return "constant"


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    labeled, errors = load_labeled(args.train, format=args.train_format)
    _report_record_errors(errors, args.train)
    data = annotated_subset(labeled, cfg.task)
    if len(data) == 0:
        raise CorpusError(f"{args.train}: no records annotated for task {cfg.task!r}")
    clf = fit_text_classifier(
        task=cfg.task,
        texts=data.texts(),
        label_sets=[it.labels.for_task(cfg.task) for it in data],
        base=cfg.model,
        normalization=cfg.normalization(),
        alpha=cfg.alpha,
        hyper=cfg.lr_hyper(),
        threshold=cfg.threshold,
    )
    clf.save(args.out)
    lines = [
        f"task {cfg.task}, model {cfg.model}, {len(data)} examples, "
        f"vocabulary {clf.vocabulary.size} terms"
    ]
    if isinstance(clf.model, LrModel):
        m = clf.model
        how = (
            f"converged after {m.n_iter} iterations"
            if m.final_grad_norm <= m.hyper.tolerance
            else f"stopped at the {m.n_iter}-iteration cap"
        )
        lines.append(f"{how}, final loss {m.final_loss:.6f}")
    print("\n".join(lines))
    return 0


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    if args.model_file:
        if not args.test:
            raise UsageError("--model-file needs --test")
        clf = TextClassifier.load(args.model_file)
        labeled, errors = load_labeled(args.test, format=args.data_format)
        _report_record_errors(errors, args.test)
        data = annotated_subset(labeled, clf.task)
        if len(data) == 0:
            raise CorpusError(f"{args.test}: no records annotated for task {clf.task!r}")
        run = evaluate_classifier(clf, data, seed=-1, n_train=0)
        report = MetricsReport(task=clf.task, model_kind=_model_kind(clf), runs=(run,))
    else:
        if not args.data:
            raise UsageError("give either --model-file with --test, or --data")
        labeled, errors = load_labeled(args.data, format=args.data_format)
        _report_record_errors(errors, args.data)
        experiment = ExperimentConfig(
            task=cfg.task,
            base=cfg.model,
            n_runs=cfg.n_runs,
            base_seed=cfg.seed,
            train_fraction=cfg.train_fraction,
            stratify=cfg.stratify,
            normalization=cfg.normalization(),
            alpha=cfg.alpha,
            hyper=cfg.lr_hyper(),
            threshold=cfg.threshold,
        )
        report = run_experiment(labeled, experiment)
    _write_json(report.to_json_dict(), args.out)
    if args.out:
        mean = report.mean_metrics()
        print(
            f"{report.task}/{report.model_kind}: accuracy {mean['accuracy']:.4f}, "
            f"micro-F1 {mean['micro_f1']:.4f}, macro-F1 {mean['macro_f1']:.4f} "
            f"over {len(report.runs)} run(s)"
        )
    return 0


def cmd_triage(args) -> int:
    cfg = _resolve_config(args)
    result = load_tweets(args.input, format=args.format)
    _report_record_errors(result.errors, args.input)

    stage_flags = (
        ("informative", "info", args.info_model, args.info_backend),
        ("intent", "intent", args.intent_model, args.intent_backend),
        ("aid", "aid", args.aid_model, args.aid_backend),
    )
    with contextlib.ExitStack() as stack:
        predictors = {}
        for task, flag_stem, model_path, endpoint in stage_flags:
            endpoint = endpoint or (cfg.backend if model_path is None else None)
            if endpoint:
                try:
                    ref = ExternalBackendRef.parse(
                        endpoint, task=task, timeout=cfg.backend_timeout
                    )
                except ValueError as exc:
                    raise UsageError(str(exc)) from exc
                predictors[task] = stack.enter_context(BackendClient(ref))
            elif model_path:
                clf = TextClassifier.load(model_path)
                if clf.task != task:
                    raise ClassifierError(
                        f"{model_path}: model serves task {clf.task!r}, expected {task!r}"
                    )
                predictors[task] = clf
            else:
                raise UsageError(
                    f"stage {task!r}: give --{flag_stem}-model or --{flag_stem}-backend "
                    "(or set a fallback --backend)"
                )
        report = run_cascade(
            result.collection,
            predictors["informative"],
            predictors["intent"],
            predictors["aid"],
        )
    Path(args.out).write_text(report.to_json(), encoding="utf-8")
    print(format_report(report))
    if args.table:
        print()
        print(format_routing_table(report))
    return 0


def cmd_aggregate(args) -> int:
    cfg = _resolve_config(args)
    records, errors = load_annotations(args.votes)
    _report_record_errors(errors, args.votes)
    if not records:
        raise AnnotationError(f"{args.votes}: no valid votes")
    agg = aggregate_corpus(records, min_agree=cfg.min_agree)

    if args.tweets:
        corpus = load_tweets(args.tweets)
        _report_record_errors(corpus.errors, args.tweets)
        labeled, missing = attach_labels(corpus.collection, agg.labels_by_id)
        for tweet_id in missing:
            print(f"no tweet with id {tweet_id!r} in {args.tweets}", file=sys.stderr)
        save_tweets(labeled, args.out)
        print(f"labeled {len(labeled)} tweets, {len(agg.unresolved)} unresolved votes")
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            for tweet_id, labels in agg.labels_by_id.items():
                fh.write(
                    json.dumps({"id": tweet_id, "labels": labels.to_json_dict()}) + "\n"
                )
        print(
            f"labeled {len(agg.labels_by_id)} tweets, "
            f"{len(agg.unresolved)} unresolved votes"
        )
    if args.unresolved_out:
        with open(args.unresolved_out, "w", encoding="utf-8") as fh:
            for tweet_id, task in agg.unresolved:
                fh.write(json.dumps({"id": tweet_id, "task": task}) + "\n")

    if args.expert:
        expert, expert_errors = load_labeled(args.expert)
        _report_record_errors(expert_errors, args.expert)
        expert_map = {it.tweet.id: it.labels for it in expert}
        common = sorted(set(expert_map) & set(agg.labels_by_id))
        if not common:
            raise AnnotationError("expert file shares no tweet ids with the aggregated labels")
        audit = agreement_report(
            {i: expert_map[i] for i in common},
            {i: agg.labels_by_id[i] for i in common},
        )
        _write_json(audit.to_json_dict(), args.agreement_out)
        for task_result in audit.tasks:
            print(
                f"agreement {task_result.task}: kappa {task_result.kappa:.4f} "
                f"over {task_result.n_items} tweets"
            )
    return 0


def cmd_crossval(args) -> int:
    clf = TextClassifier.load(args.model_file)
    events = []
    for pair in args.event:
        name, sep, path = pair.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"--event expects NAME=PATH, got {pair!r}")
        labeled, errors = load_labeled(path)
        _report_record_errors(errors, path)
        events.append((name, labeled))
    results = cross_event_eval(clf, events)
    _write_json([r.to_json_dict() for r in results], args.out)
    if args.out:
        for r in results:
            print(
                f"{r.event}: accuracy {r.metrics.accuracy:.4f}, "
                f"positive-F1 {r.metrics.positive_f1:.4f}, "
                f"{len(r.disagreements)} disagreements"
            )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except CascadeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3 if isinstance(exc.__cause__, BackendError) else 2
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except (
        CorpusError,
        VectorizeError,
        ModelError,
        ClassifierError,
        EvalError,
        AnnotationError,
        QueryError,
        QuerySyntaxError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def triage_main() -> int:
    """Entry point for the `triage` alias, so `triage run ...` works directly."""
    return main(["triage", *sys.argv[1:]])


if __name__ == "__main__":
    sys.exit(main())
