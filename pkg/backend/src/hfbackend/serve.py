"""Wire-protocol responder over a saved model directory.

Frames are single lines of UTF-8 JSON on stdin/stdout:

    {"kind": "hello"}                            -> {"kind": "ready", "tasks": [task]}
    {"kind": "predict", "id": N, "task": t,
     "texts": [...]}                             -> {"kind": "result", "id": N,
                                                     "labels": [[...], ...],
                                                     "scores": [[...], ...]}

Request ids must strictly increase; responses keep request order.
`scores[i]` carries one probability per task label in the saved label
order. Malformed input is answered with an error frame and the process
keeps serving.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import torch

from .finetune import LABEL_MAP_FILE
from .tokenizer import WordTokenizer

_BATCH = 32


class LoadedModel:
    def __init__(self, model_dir: str | Path):
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        model_dir = Path(model_dir)
        self.meta = json.loads((model_dir / LABEL_MAP_FILE).read_text(encoding="utf-8"))
        self.model = AutoModelForSequenceClassification.from_pretrained(model_dir)
        self.model.eval()
        if self.meta["tokenizer"] == "word":
            self.tokenizer = WordTokenizer.load(model_dir)
        else:
            self.tokenizer = AutoTokenizer.from_pretrained(model_dir)

    @property
    def task(self) -> str:
        return self.meta["task"]

    def _encode(self, texts: list[str]) -> dict[str, torch.Tensor]:
        if isinstance(self.tokenizer, WordTokenizer):
            return self.tokenizer.encode_batch(texts)
        enc = self.tokenizer(
            texts, padding=True, truncation=True,
            max_length=self.tokenizer.model_max_length, return_tensors="pt",
        )
        return {"input_ids": enc["input_ids"], "attention_mask": enc["attention_mask"]}

    def predict(self, texts: list[str]) -> tuple[list[list[str]], list[list[float]]]:
        """Label lists and per-task-label probability rows for each text."""
        labels_out: list[list[str]] = []
        scores_out: list[list[float]] = []
        threshold = self.meta["threshold"]
        names = self.meta["labels"]
        with torch.no_grad():
            for lo in range(0, len(texts), _BATCH):
                chunk = texts[lo : lo + _BATCH]
                logits = self.model(**self._encode(chunk)).logits
                if self.meta["head"] == "softmax":
                    pos = torch.softmax(logits, dim=-1)[:, self.meta["positive_index"]]
                    probs = pos.unsqueeze(-1)
                else:
                    probs = torch.sigmoid(logits)
                for row in probs.tolist():
                    scores_out.append([float(p) for p in row])
                    labels_out.append([n for n, p in zip(names, row) if p > threshold])
        return labels_out, scores_out


def _error(out, req_id, message: str) -> None:
    out.write(json.dumps({"kind": "error", "id": req_id, "message": message}) + "\n")
    out.flush()


def serve(model_dir: str | Path, stdin=None, stdout=None) -> int:
    """Answer frames until EOF. Never dies on bad input; always exits 0."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    loaded = LoadedModel(model_dir)
    last_id = 0
    for line in stdin:
        if not line.strip():
            continue
        try:
            frame = json.loads(line)
        except json.JSONDecodeError:
            _error(stdout, 0, "frame is not valid JSON")
            continue
        if not isinstance(frame, dict):
            _error(stdout, 0, "frame is not an object")
            continue
        kind = frame.get("kind")
        if kind == "hello":
            stdout.write(json.dumps({"kind": "ready", "tasks": [loaded.task]}) + "\n")
            stdout.flush()
            continue
        if kind != "predict":
            _error(stdout, frame.get("id", 0), f"unsupported frame kind {kind!r}")
            continue
        req_id = frame.get("id")
        if not isinstance(req_id, int) or req_id <= last_id:
            _error(stdout, req_id if isinstance(req_id, int) else 0,
                   f"request id must be an integer above {last_id}")
            continue
        last_id = req_id
        if frame.get("task") != loaded.task:
            _error(stdout, req_id,
                   f"this backend serves {loaded.task!r}, not {frame.get('task')!r}")
            continue
        texts = frame.get("texts")
        if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
            _error(stdout, req_id, "texts must be a list of strings")
            continue
        labels, scores = loaded.predict(texts)
        stdout.write(json.dumps(
            {"kind": "result", "id": req_id, "labels": labels, "scores": scores}
        ) + "\n")
        stdout.flush()
    return 0
