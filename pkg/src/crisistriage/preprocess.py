"""Text normalization and tokenization.

The same normalization must be applied before vectorization, training, and
prediction; models serialized by this package embed their normalization
flags so prediction cannot drift from training.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_URL_RE = re.compile(r"(?<!\S)(?:[a-zA-Z][a-zA-Z0-9+.-]*://\S+|www\.\S+)")
_IMAGE_LINK_RE = re.compile(r"(?<!\S)pic\.twitter\.com/\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"(?<!\S)@\w+")
_HASHTAG_RE = re.compile(r"(?<!\S)#(\w+)")
# whitespace-delimited token that is digits plus digit punctuation ("24",
# "1,000", "1/2"); digits embedded in words ("covid19", "5pm") are kept
_NUMBER_RE = re.compile(r"(?<!\S)\d[\d.,:/%-]*(?!\S)")
_NON_ASCII_RE = re.compile(r"[^\x00-\x7f]")
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class NormalizationConfig:
    """One flag per cleanup rule; whitespace contraction always runs last.

    ``hashtag_strip_marker_only`` keeps the tag word and drops only the
    ``#``; the default removes the whole token.
    """

    remove_urls: bool = True
    remove_image_links: bool = True
    remove_numbers: bool = True
    remove_hashtags: bool = True
    remove_mentions: bool = True
    remove_non_ascii: bool = True
    collapse_whitespace: bool = True
    lowercase: bool = True
    hashtag_strip_marker_only: bool = False

    def to_json_dict(self) -> dict:
        return {
            "remove_urls": self.remove_urls,
            "remove_image_links": self.remove_image_links,
            "remove_numbers": self.remove_numbers,
            "remove_hashtags": self.remove_hashtags,
            "remove_mentions": self.remove_mentions,
            "remove_non_ascii": self.remove_non_ascii,
            "collapse_whitespace": self.collapse_whitespace,
            "lowercase": self.lowercase,
            "hashtag_strip_marker_only": self.hashtag_strip_marker_only,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "NormalizationConfig":
        return cls(**{k: bool(v) for k, v in d.items()})


def _normalize_once(text: str, cfg: NormalizationConfig) -> str:
    if cfg.remove_urls:
        text = _URL_RE.sub(" ", text)
    if cfg.remove_image_links:
        text = _IMAGE_LINK_RE.sub(" ", text)
    if cfg.remove_mentions:
        text = _MENTION_RE.sub(" ", text)
    if cfg.remove_hashtags:
        if cfg.hashtag_strip_marker_only:
            text = _HASHTAG_RE.sub(r"\1", text)
        else:
            text = _HASHTAG_RE.sub(" ", text)
    if cfg.remove_non_ascii:
        text = _NON_ASCII_RE.sub("", text)
    if cfg.remove_numbers:
        text = _NUMBER_RE.sub(" ", text)
    if cfg.lowercase:
        text = text.lower()
    if cfg.collapse_whitespace:
        text = " ".join(text.split())
    return text


def normalize(text: str, cfg: NormalizationConfig | None = None) -> str:
    """Apply the enabled cleanup rules; idempotent and never longer than input.

    One removal can expose a match for another (dropping a non-ASCII byte
    inside "12©3" leaves a bare number), so the pass repeats until the text
    is stable. Every pass only removes characters, so this terminates.
    """
    cfg = cfg or NormalizationConfig()
    while True:
        cleaned = _normalize_once(text, cfg)
        if cleaned == text:
            return cleaned
        text = cleaned


def tokenize(text: str) -> list[str]:
    """Maximal alphanumeric runs, in order; punctuation and '_' delimit."""
    return _TOKEN_RE.findall(text)
