"""Reader for the labeled corpus JSONL format.

One object per line: {"id", "text", ..., "labels": {"informative":
bool|null, "intent": [..]|null, "aid": [..]|null}}. A null entry means
the task was never annotated for that tweet; such records are skipped
for that task.
"""

from __future__ import annotations

import json
from pathlib import Path

from .config import TASK_LABELS


class TrainingDataError(Exception):
    pass


def load_task_examples(path: str | Path, task: str) -> tuple[list[str], list[list[float]]]:
    """Texts and multi-hot label rows (canonical label order) for `task`.

    The binary task yields one-column rows (1.0 = informative). Raises
    TrainingDataError for unreadable rows or when no record carries an
    annotation for the task.
    """
    labels = TASK_LABELS[task]
    texts: list[str] = []
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                text = rec["text"]
                ann = (rec.get("labels") or {}).get(task)
            except (json.JSONDecodeError, TypeError, KeyError, AttributeError) as exc:
                raise TrainingDataError(f"{path}:{lineno}: unreadable record ({exc})") from exc
            if ann is None:
                continue
            if task == "informative":
                rows.append([1.0 if ann else 0.0])
            else:
                chosen = set(ann)
                unknown = chosen - set(labels)
                if unknown:
                    raise TrainingDataError(
                        f"{path}:{lineno}: unknown {task} labels {sorted(unknown)}"
                    )
                rows.append([1.0 if lab in chosen else 0.0 for lab in labels])
            texts.append(str(text))
    if not texts:
        raise TrainingDataError(f"{path}: no records carry {task!r} annotations")
    return texts, rows
