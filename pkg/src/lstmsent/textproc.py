"""Review text cleaning, tokenisation, vocabulary and fixed-length encoding."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
DEFAULT_VOCAB_SIZE = 20_000

_TAG = re.compile(r"<[^>]*>")
_ASCII_LOWER = str.maketrans("ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz")


def clean_text(raw: str) -> str:
    """Strip tags and punctuation, lowercase ASCII, drop one-character tokens.

    >>> clean_text("<b>Great!</b> A phone")
    'great phone'
    """
    text = _TAG.sub(" ", raw)
    text = text.translate(_ASCII_LOWER)
    text = "".join(c if (c.isalpha() or c.isdigit() or c.isspace()) else " " for c in text)
    return " ".join(tok for tok in text.split() if len(tok) > 1)


def tokenize(cleaned: str) -> list[str]:
    return cleaned.split()


@dataclass(frozen=True)
class Vocab:
    """Frequency-ranked token/id map. Ids 0 and 1 are PAD and UNK."""

    id_to_token: tuple[str, ...]
    counts: tuple[int, ...]
    max_size: int
    token_to_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.id_to_token) != len(self.counts):
            raise ConfigError("id_to_token and counts differ in length")
        if self.id_to_token[:2] != (PAD_TOKEN, UNK_TOKEN):
            raise ConfigError("ids 0 and 1 must be PAD and UNK")
        if len(self.id_to_token) > self.max_size:
            raise ConfigError(f"{len(self.id_to_token)} entries exceed max_size {self.max_size}")
        mapping = {tok: i for i, tok in enumerate(self.id_to_token)}
        if len(mapping) != len(self.id_to_token):
            raise ConfigError("duplicate tokens in vocabulary")
        object.__setattr__(self, "token_to_id", mapping)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def id_of(self, token: str) -> int:
        i = self.token_to_id.get(token, UNK_ID)
        return UNK_ID if i == PAD_ID else i

    def save(self, path) -> None:
        lines = [f"{tok}\t{i}\t{c}\n" for i, (tok, c) in enumerate(zip(self.id_to_token, self.counts))]
        Path(path).write_text("".join(lines), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocab":
        tokens, counts = [], []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected token<TAB>id<TAB>count")
            tok, i, c = parts[0], int(parts[1]), int(parts[2])
            if i != len(tokens):
                raise DataError(f"{path}:{lineno}: id {i} out of order")
            tokens.append(tok)
            counts.append(c)
        if len(tokens) < 2:
            raise DataError(f"{path}: vocabulary has no PAD/UNK entries")
        return cls(tuple(tokens), tuple(counts), max_size=max(len(tokens), 3))


def build_vocab(corpus: Iterable[Sequence[str]], max_size: int = DEFAULT_VOCAB_SIZE) -> Vocab:
    """Keep the ``max_size - 2`` most frequent tokens, ties by token order."""
    if max_size < 3:
        raise ConfigError(f"max_size must be >= 3, got {max_size}")
    freq = Counter()
    for tokens in corpus:
        freq.update(tokens)
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[: max_size - 2]
    tokens = (PAD_TOKEN, UNK_TOKEN) + tuple(t for t, _ in ranked)
    counts = (0, 0) + tuple(c for _, c in ranked)
    return Vocab(tokens, counts, max_size)


@dataclass(frozen=True)
class EncodedSequence:
    ids: np.ndarray
    original_length: int

    def __len__(self) -> int:
        return len(self.ids)


def encode(tokens: Sequence[str], vocab: Vocab, length: int) -> EncodedSequence:
    """Map tokens to ids, keep the last ``length`` of them and left-pad with PAD."""
    if length < 1:
        raise ConfigError(f"sequence length must be >= 1, got {length}")
    kept = list(tokens)[-length:]
    ids = np.full(length, PAD_ID, dtype=np.int64)
    if kept:
        ids[length - len(kept):] = [vocab.id_of(t) for t in kept]
    return EncodedSequence(ids, len(kept))


def decode(seq: EncodedSequence, vocab: Vocab) -> list[str]:
    """Tokens at the non-PAD positions (OOV comes back as the UNK token)."""
    start = len(seq.ids) - seq.original_length
    return [vocab.id_to_token[i] for i in seq.ids[start:]]


def encode_texts(texts: Iterable[str], vocab: Vocab, length: int) -> np.ndarray:
    """Clean, tokenise and encode raw texts into an ``(n, length)`` id matrix."""
    rows = [encode(tokenize(clean_text(t)), vocab, length).ids for t in texts]
    if not rows:
        return np.zeros((0, length), dtype=np.int64)
    return np.stack(rows)
