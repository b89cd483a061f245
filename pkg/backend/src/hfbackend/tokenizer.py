"""Word-level tokenizer for the offline "tiny" model path.

Lowercases, splits on word characters, maps each word to a vocabulary
id with the usual special tokens, and pads/truncates to a fixed length.
Pretrained checkpoints use their own tokenizer instead; this one exists
so fine-tuning and serving work with no model downloads at all.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import torch

PAD, UNK, CLS, SEP = 0, 1, 2, 3
_SPECIALS = {"[PAD]": PAD, "[UNK]": UNK, "[CLS]": CLS, "[SEP]": SEP}
_WORD = re.compile(r"[a-z0-9']+")

VOCAB_FILE = "word_vocab.json"


def words(text: str) -> list[str]:
    return _WORD.findall(text.lower())


class WordTokenizer:
    def __init__(self, vocab: dict[str, int], max_length: int):
        self.vocab = vocab
        self.max_length = max_length

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @classmethod
    def build(cls, texts: list[str], max_length: int) -> WordTokenizer:
        vocab = dict(_SPECIALS)
        for text in texts:
            for w in words(text):
                if w not in vocab:
                    vocab[w] = len(vocab)
        return cls(vocab, max_length)

    def encode_batch(self, texts: list[str]) -> dict[str, torch.Tensor]:
        """input_ids and attention_mask, [CLS] w... [SEP], padded."""
        body = self.max_length - 2  # room for [CLS] and [SEP]
        rows = []
        for text in texts:
            ids = [self.vocab.get(w, UNK) for w in words(text)][:body]
            rows.append([CLS, *ids, SEP])
        width = max(len(r) for r in rows)
        input_ids = torch.full((len(rows), width), PAD, dtype=torch.long)
        mask = torch.zeros((len(rows), width), dtype=torch.long)
        for i, r in enumerate(rows):
            input_ids[i, : len(r)] = torch.tensor(r, dtype=torch.long)
            mask[i, : len(r)] = 1
        return {"input_ids": input_ids, "attention_mask": mask}

    def save(self, model_dir: str | Path) -> None:
        payload = {"max_length": self.max_length, "vocab": self.vocab}
        (Path(model_dir) / VOCAB_FILE).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, model_dir: str | Path) -> WordTokenizer:
        payload = json.loads((Path(model_dir) / VOCAB_FILE).read_text(encoding="utf-8"))
        return cls(payload["vocab"], payload["max_length"])
