"""Fine-tune a sequence-classification model for one triage task.

The binary informativeness task gets a two-way softmax head; the
multi-label tasks get one sigmoid output per label. The saved directory
holds the model in its framework-native format plus a label map, the
run configuration, the tokenizer, and the loss log (training-set loss
at every optimizer iterate, start included).
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import torch

from .config import FineTuneConfig
from .corpusio import load_task_examples
from .tokenizer import PAD, WordTokenizer

LABEL_MAP_FILE = "label_map.json"
CONFIG_FILE = "finetune_config.json"
LOSS_LOG_FILE = "loss_log.json"


class FineTuneError(Exception):
    pass


def _build_tiny(cfg: FineTuneConfig, texts: list[str]):
    from transformers import BertConfig, BertForSequenceClassification

    tokenizer = WordTokenizer.build(texts, cfg.max_length)
    model_config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=cfg.max_length,
        pad_token_id=PAD,
        hidden_dropout_prob=cfg.dropout,
        attention_probs_dropout_prob=cfg.dropout,
        num_labels=2 if cfg.task == "informative" else len(cfg.labels),
        problem_type=(
            "single_label_classification"
            if cfg.task == "informative"
            else "multi_label_classification"
        ),
    )
    return BertForSequenceClassification(model_config), tokenizer


def _build_pretrained(cfg: FineTuneConfig):
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(cfg.base_model)
        model = AutoModelForSequenceClassification.from_pretrained(
            cfg.base_model,
            num_labels=2 if cfg.task == "informative" else len(cfg.labels),
            problem_type=(
                "single_label_classification"
                if cfg.task == "informative"
                else "multi_label_classification"
            ),
        )
    except OSError as exc:
        raise FineTuneError(
            f"could not load checkpoint {cfg.base_model!r} ({exc}); "
            "use base_model='tiny' for a download-free run"
        ) from exc
    return model, tokenizer


def _encode(tokenizer, texts: list[str]) -> dict[str, torch.Tensor]:
    if isinstance(tokenizer, WordTokenizer):
        return tokenizer.encode_batch(texts)
    enc = tokenizer(
        texts, padding=True, truncation=True,
        max_length=tokenizer.model_max_length, return_tensors="pt",
    )
    return {"input_ids": enc["input_ids"], "attention_mask": enc["attention_mask"]}


def _dataset_loss(model, tokenizer, texts: list[str], targets: torch.Tensor) -> float:
    """Loss over the whole training set at the current parameters."""
    was_training = model.training
    model.eval()
    total = 0.0
    with torch.no_grad():
        for lo in range(0, len(texts), 64):
            chunk = texts[lo : lo + 64]
            out = model(**_encode(tokenizer, chunk), labels=targets[lo : lo + 64])
            total += float(out.loss) * len(chunk)
    if was_training:
        model.train()
    return total / len(texts)


def finetune(train_file: str | Path, cfg: FineTuneConfig, out_dir: str | Path) -> list[float]:
    """Train on `train_file`, save everything to `out_dir`.

    Returns the loss log: the full training-set loss at the initial
    parameters and again after every optimizer step, so `log[0]` vs
    `log[-1]` measures what training achieved rather than which batch
    came last. Deterministic for a given seed up to framework-level
    nondeterminism (thread scheduling in CPU kernels).
    """
    texts, rows = load_task_examples(train_file, cfg.task)
    torch.manual_seed(cfg.seed)

    if cfg.base_model == "tiny":
        model, tokenizer = _build_tiny(cfg, texts)
    else:
        model, tokenizer = _build_pretrained(cfg)

    if cfg.task == "informative":
        targets = torch.tensor([int(r[0]) for r in rows], dtype=torch.long)
    else:
        targets = torch.tensor(rows, dtype=torch.float)

    if cfg.optimizer == "sgd":
        optimizer = torch.optim.SGD(model.parameters(), lr=cfg.learning_rate)
    else:
        optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)
    loss_log: list[float] = [_dataset_loss(model, tokenizer, texts, targets)]
    order = list(range(len(texts)))
    model.train()
    try:
        for epoch in range(cfg.epochs):
            random.Random(cfg.seed + epoch).shuffle(order)
            for lo in range(0, len(order), cfg.batch_size):
                batch = order[lo : lo + cfg.batch_size]
                enc = _encode(tokenizer, [texts[i] for i in batch])
                out = model(**enc, labels=targets[batch])
                optimizer.zero_grad()
                out.loss.backward()
                optimizer.step()
                loss_log.append(_dataset_loss(model, tokenizer, texts, targets))
    except torch.OutOfMemoryError as exc:
        raise FineTuneError(
            f"out of memory during fine-tuning (batch {cfg.batch_size}, "
            f"max length {cfg.max_length}); lower one of them"
        ) from exc

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    if isinstance(tokenizer, WordTokenizer):
        tokenizer.save(out_dir)
        tokenizer_kind = "word"
    else:
        tokenizer.save_pretrained(out_dir)
        tokenizer_kind = "pretrained"
    label_map = {
        "task": cfg.task,
        "labels": list(cfg.labels),
        "head": "softmax" if cfg.task == "informative" else "sigmoid",
        "positive_index": 1 if cfg.task == "informative" else None,
        "threshold": cfg.threshold,
        "tokenizer": tokenizer_kind,
    }
    (out_dir / LABEL_MAP_FILE).write_text(json.dumps(label_map, indent=2) + "\n")
    (out_dir / CONFIG_FILE).write_text(json.dumps(cfg.to_json_dict(), indent=2) + "\n")
    (out_dir / LOSS_LOG_FILE).write_text(json.dumps(loss_log) + "\n")
    return loss_log
