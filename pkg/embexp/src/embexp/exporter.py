"""Frozen-encoder feature extraction.

For each word in each corpus sentence, runs a pretrained contextual encoder
over the subword sequence and keeps the hidden state of the word's last
subtoken at the selected layer. Output is the CEMB binary format:

    magic "CEMB" | version u32 LE | dim u32 LE |
    per sentence, in corpus order: token count u32 LE, count*dim float32 LE

The encoder is never fine-tuned here; export is deterministic for fixed
encoder weights.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

log = logging.getLogger(__name__)

CEMB_MAGIC = b"CEMB"
CEMB_VERSION = 1


@dataclass
class ExportConfig:
    corpus: str
    encoder: str
    output: str
    layer: int = -1          # index into the hidden-state stack; -1 = final layer
    batch_size: int = 8


def load_corpus_tokens(path) -> list[list[str]]:
    """Token sequences from a JSONL corpus, one record per line."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            tokens = obj["tokens"]
            if not tokens:
                raise ValueError(f"{path}:{lineno}: sentence has no tokens")
            sentences.append([str(t) for t in tokens])
    return sentences


def sanitize_words(tokenizer, words: list[str]) -> list[str]:
    """Replace words the subword model maps to nothing with the unknown token.

    Whitespace- or control-only words can vanish entirely, which would break
    the word/vector alignment.
    """
    out = []
    for word in words:
        if not tokenizer.tokenize(word):
            log.warning("word %r has empty subtokenization; using %s",
                        word, tokenizer.unk_token)
            word = tokenizer.unk_token
        out.append(word)
    return out


@torch.no_grad()
def encode_batch(model, tokenizer, batch: list[list[str]], layer: int) -> list[np.ndarray]:
    """One vector per word for each sentence in the batch: the hidden state
    of the word's last subtoken at the selected layer."""
    sanitized = [sanitize_words(tokenizer, words) for words in batch]
    enc = tokenizer(sanitized, is_split_into_words=True, padding=True,
                    return_tensors="pt")
    out = model(input_ids=enc["input_ids"], attention_mask=enc["attention_mask"],
                output_hidden_states=True)
    hidden = out.hidden_states[layer]
    vectors = []
    for row, words in enumerate(sanitized):
        last = {}
        for pos, word_id in enumerate(enc.word_ids(row)):
            if word_id is not None:
                last[word_id] = pos  # overwritten until the word's final piece
        idx = torch.tensor([last[k] for k in range(len(words))])
        vectors.append(hidden[row, idx].cpu().numpy().astype("<f4"))
    return vectors


def export(config: ExportConfig) -> None:
    """Write one CEMB record per corpus sentence, in corpus order."""
    sentences = load_corpus_tokens(config.corpus)
    tokenizer = AutoTokenizer.from_pretrained(config.encoder)
    model = AutoModel.from_pretrained(config.encoder)
    model.eval()
    dim = model.config.hidden_size

    out_path = Path(config.output)
    with open(out_path, "wb") as fh:
        fh.write(CEMB_MAGIC)
        fh.write(struct.pack("<II", CEMB_VERSION, dim))
        for start in range(0, len(sentences), config.batch_size):
            batch = sentences[start:start + config.batch_size]
            for words, vecs in zip(batch, encode_batch(model, tokenizer, batch, config.layer)):
                assert vecs.shape == (len(words), dim)
                fh.write(struct.pack("<I", len(words)))
                fh.write(vecs.tobytes())
    log.info("wrote %d sentences (dim %d) to %s", len(sentences), dim, out_path)
