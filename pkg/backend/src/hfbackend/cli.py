"""Command-line entry points: `hf-backend finetune` and `hf-backend serve`."""

from __future__ import annotations

import argparse
import sys

from .config import TASK_LABELS, FineTuneConfig
from .corpusio import TrainingDataError
from .finetune import FineTuneError, finetune
from .serve import serve


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hf-backend", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune", help="train a model for one task and save it")
    p.add_argument("--train", required=True, help="labeled corpus (jsonl)")
    p.add_argument("--task", required=True, choices=sorted(TASK_LABELS))
    p.add_argument("--out", required=True, help="model directory to create")
    p.add_argument("--base-model", default="tiny",
                   help="checkpoint name, or 'tiny' for a download-free model (default)")
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--learning-rate", type=float, default=2e-5)
    p.add_argument("--max-length", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.5)

    p = sub.add_parser("serve", help="answer wire-protocol frames on stdin/stdout")
    p.add_argument("--model-dir", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "finetune":
            cfg = FineTuneConfig(
                task=args.task, base_model=args.base_model, epochs=args.epochs,
                batch_size=args.batch_size, learning_rate=args.learning_rate,
                max_length=args.max_length, seed=args.seed, threshold=args.threshold,
            )
            loss_log = finetune(args.train, cfg, args.out)
            print(f"saved {args.task} model to {args.out} "
                  f"({len(loss_log)} steps, final loss {loss_log[-1]:.4f})")
            return 0
        return serve(args.model_dir)
    except (TrainingDataError, FineTuneError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
