"""Transformer-based prediction backend.

Fine-tunes a sequence-classification model per triage task and serves
predictions over the line-delimited JSON wire protocol, as a companion
process to the core triage package. The only coupling to that package
is the protocol itself and the corpus JSONL file format; nothing is
imported from it.
"""

from .config import TASK_LABELS, FineTuneConfig
from .finetune import finetune
from .serve import serve

__all__ = ["FineTuneConfig", "TASK_LABELS", "finetune", "serve"]
