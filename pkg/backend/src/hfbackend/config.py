"""Fine-tuning configuration and the task/label contract.

The label tuples restate the wire-protocol contract: `scores[i]` rows
carry one number per task label in exactly this order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

TASK_LABELS: dict[str, tuple[str, ...]] = {
    "informative": ("informative",),
    "intent": ("need", "supply"),
    "aid": ("food", "shelter", "health", "wash"),
}

#: tasks whose head is one sigmoid per label rather than a softmax
MULTILABEL_TASKS = frozenset({"intent", "aid"})


@dataclass(frozen=True)
class FineTuneConfig:
    """Hyperparameters for one fine-tuning run.

    `base_model` is either a pretrained checkpoint name to download, or
    the literal "tiny" for a small randomly initialized model with a
    word-level vocabulary built from the training file — the fully
    offline path used in tests.

    `dropout` applies to the tiny model only; pretrained checkpoints
    keep their own architecture. A randomly initialized model has no
    pretrained features to exploit, so on tiny runs plain `sgd` with a
    large batch descends the training loss far more predictably than
    `adamw` does; the default stays `adamw` for the checkpoint path.
    """

    task: str
    base_model: str = "tiny"
    epochs: int = 3
    batch_size: int = 16
    learning_rate: float = 2e-5
    max_length: int = 128
    seed: int = 0
    threshold: float = 0.5
    optimizer: str = "adamw"
    dropout: float = 0.1

    def __post_init__(self):
        if self.task not in TASK_LABELS:
            raise ValueError(f"unknown task {self.task!r} (expected one of {sorted(TASK_LABELS)})")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.optimizer not in ("adamw", "sgd"):
            raise ValueError("optimizer must be 'adamw' or 'sgd'")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    @property
    def multilabel(self) -> bool:
        return self.task in MULTILABEL_TASKS

    @property
    def labels(self) -> tuple[str, ...]:
        return TASK_LABELS[self.task]

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> FineTuneConfig:
        return cls(**d)
