"""Flat pipeline configuration shared by the CLI subcommands.

Defaults pin the published constants: 0.85 dedup threshold, 80/20
split, five runs. A config file is a flat JSON object using exactly
these field names; command-line flags override file values, which
override defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import TASKS
from .models import LrHyper
from .preprocess import NormalizationConfig


@dataclass(frozen=True)
class PipelineConfig:
    # normalization
    remove_urls: bool = True
    remove_image_links: bool = True
    remove_numbers: bool = True
    remove_hashtags: bool = True
    remove_mentions: bool = True
    remove_non_ascii: bool = True
    lowercase: bool = True
    collapse_whitespace: bool = True
    # near-duplicate removal
    dedup_threshold: float = 0.85
    # splitting and experiment runs
    train_fraction: float = 0.8
    seed: int = 0
    n_runs: int = 5
    stratify: bool = False
    # model selection and hyperparameters
    task: str = "informative"
    model: str = "mnb"
    alpha: float = 1.0
    learning_rate: float = 0.1
    l2: float = 1e-4
    max_iter: int = 1000
    tolerance: float = 1e-6
    threshold: float = 0.5
    # annotation aggregation
    min_agree: int = 3
    # external backend
    backend: str | None = None
    backend_timeout: float = 60.0

    def __post_init__(self):
        if not 0.0 <= self.dedup_threshold <= 1.0:
            raise ValueError("dedup_threshold must lie in [0, 1]")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {', '.join(TASKS)}")
        if self.model not in ("mnb", "lr"):
            raise ValueError("model must be 'mnb' or 'lr'")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.min_agree < 1:
            raise ValueError("min_agree must be at least 1")
        if self.backend_timeout <= 0:
            raise ValueError("backend_timeout must be positive")

    def normalization(self) -> NormalizationConfig:
        return NormalizationConfig(
            remove_urls=self.remove_urls,
            remove_image_links=self.remove_image_links,
            remove_numbers=self.remove_numbers,
            remove_hashtags=self.remove_hashtags,
            remove_mentions=self.remove_mentions,
            remove_non_ascii=self.remove_non_ascii,
            lowercase=self.lowercase,
            collapse_whitespace=self.collapse_whitespace,
        )

    def lr_hyper(self) -> LrHyper:
        return LrHyper(
            learning_rate=self.learning_rate,
            l2=self.l2,
            max_iter=self.max_iter,
            tolerance=self.tolerance,
        )

    def apply(self, overrides: dict) -> PipelineConfig:
        try:
            return replace(self, **overrides)
        except TypeError as exc:
            raise ValueError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> PipelineConfig:
        """Read a flat JSON config; unknown keys are an error."""
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"{path}: unknown config keys: {', '.join(unknown)}")
        return cls().apply(raw)

    def to_json_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


CONFIG_KEYS = frozenset(f.name for f in fields(PipelineConfig))
