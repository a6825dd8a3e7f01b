"""Review files (CSV / JSONL), star-rating labels, a synthetic corpus and pretrained vectors."""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import LABELS, SentimentLabel, binary_target
from .errors import ConfigError, DataError, DomainError, EmptyDatasetError, MissingColumnsError
from .numerics import Rng64
from .textproc import Vocab, encode_texts


def label_from_rating(rating: int) -> SentimentLabel:
    """1-2 stars negative, 3 neutral, 4-5 positive."""
    if isinstance(rating, bool) or int(rating) != rating or not 1 <= rating <= 5:
        raise DomainError(f"rating must be an integer 1..5, got {rating!r}")
    if rating <= 2:
        return SentimentLabel.NEGATIVE
    if rating == 3:
        return SentimentLabel.NEUTRAL
    return SentimentLabel.POSITIVE


@dataclass(frozen=True)
class ReviewRecord:
    text: str
    rating: int | None = None
    label: SentimentLabel | None = None

    def __post_init__(self):
        if self.rating is None and self.label is None:
            raise DomainError("a review needs a rating or a label")
        if self.rating is not None and (isinstance(self.rating, bool) or self.rating not in range(1, 6)):
            raise DomainError(f"rating must be 1..5, got {self.rating!r}")
        if self.label is None:
            object.__setattr__(self, "label", label_from_rating(self.rating))


@dataclass
class Dataset:
    records: list[ReviewRecord]
    errors: list[tuple[int, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def class_counts(self) -> dict[SentimentLabel, int]:
        tally = Counter(r.label for r in self.records)
        return {lab: tally.get(lab, 0) for lab in LABELS}

    @property
    def texts(self) -> list[str]:
        return [r.text for r in self.records]

    @property
    def labels(self) -> list[SentimentLabel]:
        return [r.label for r in self.records]

    def subset(self, labels) -> "Dataset":
        keep = set(labels)
        return Dataset([r for r in self.records if r.label in keep])


def _record(text, label, rating) -> ReviewRecord:
    if not isinstance(text, str):
        raise DomainError("text must be a string")
    lab = None if label in (None, "") else SentimentLabel.parse(label)
    if rating in (None, ""):
        rat = None
    else:
        try:
            value = float(rating)
        except (TypeError, ValueError):
            raise DomainError(f"rating {rating!r} is not a number") from None
        if value != int(value):
            raise DomainError(f"rating {rating!r} is not an integer")
        rat = int(value)
    return ReviewRecord(text, rat, lab)


def _load_csv(path: Path, errors):
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or ())
        if "text" not in cols or not cols & {"label", "rating"}:
            raise MissingColumnsError(f"{path}: header needs 'text' and 'label' or 'rating', got {sorted(cols)}")
        for row in reader:
            line = reader.line_num
            if None in row or any(v is None for v in row.values()):
                errors.append((line, "wrong number of fields"))
                continue
            try:
                records.append(_record(row["text"], row.get("label"), row.get("rating")))
            except DomainError as exc:
                errors.append((line, str(exc)))
    return records


def _load_jsonl(path: Path, errors):
    records = []
    with open(path, encoding="utf-8") as fh:
        for line, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                errors.append((line, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(obj, dict) or "text" not in obj:
                errors.append((line, "expected an object with a 'text' field"))
                continue
            try:
                records.append(_record(obj["text"], obj.get("label"), obj.get("rating")))
            except DomainError as exc:
                errors.append((line, str(exc)))
    return records


def load_reviews(path, fmt: str | None = None) -> Dataset:
    """Parse a CSV or JSONL review file.

    Bad rows do not abort the load; they are listed with their line numbers
    in ``Dataset.errors``.
    """
    path = Path(path)
    fmt = fmt or ("jsonl" if path.suffix.lower() in (".jsonl", ".json") else "csv")
    if not path.is_file():
        raise FileNotFoundError(f"no such review file: {path}")
    errors: list[tuple[int, str]] = []
    if fmt == "csv":
        records = _load_csv(path, errors)
    elif fmt == "jsonl":
        records = _load_jsonl(path, errors)
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if not records:
        raise EmptyDatasetError(f"{path}: no usable reviews ({len(errors)} malformed rows)")
    return Dataset(records, errors)


def save_reviews_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["text", "label"])
        for r in dataset.records:
            writer.writerow([r.text, r.label.value])


def to_arrays(dataset: Dataset, vocab: Vocab, seq_len: int, head: str = "sigmoid"):
    """Encoded ``(n, seq_len)`` ids and integer targets for the given head.

    With the sigmoid head neutral reviews get target -1, which training
    rejects with the offending record index.
    """
    X = encode_texts(dataset.texts, vocab, seq_len)
    if head == "sigmoid":
        y = np.array([binary_target(lab) for lab in dataset.labels], dtype=np.int64)
    else:
        y = np.array([lab.index for lab in dataset.labels], dtype=np.int64)
    return X, y


# --------------------------------------------------------------------------
# synthetic corpus

SYNTH_POOLS = {
    SentimentLabel.NEGATIVE: (
        "terrible", "awful", "broken", "useless", "waste", "disappointing", "poor", "horrible",
        "refund", "defective", "flimsy", "worst", "junk", "faulty", "annoying", "cracked",
    ),
    SentimentLabel.NEUTRAL: (
        "okay", "average", "decent", "acceptable", "fine", "mediocre", "ordinary", "adequate",
        "standard", "expected", "moderate", "fair", "typical", "passable", "reasonable", "plain",
    ),
    SentimentLabel.POSITIVE: (
        "excellent", "great", "amazing", "love", "perfect", "awesome", "fantastic", "recommend",
        "sturdy", "brilliant", "reliable", "superb", "happy", "wonderful", "best", "durable",
    ),
}
SYNTH_FILLER = (
    "product", "the", "this", "it", "is", "was", "item", "phone", "battery", "screen", "delivery",
    "price", "quality", "box", "arrived", "after", "days", "use", "my", "for", "with", "and",
    "size", "color", "shipping", "seller", "cable", "case", "charger", "week", "month", "bought",
    "order", "design", "sound", "works", "material", "package", "time", "still",
)
SYNTH_CLASS_WORD_RATE = 0.6


def largest_remainder(n: int, shares: Sequence[float]) -> list[int]:
    quotas = [n * s for s in shares]
    counts = [int(q) for q in quotas]
    order = sorted(range(len(shares)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def synth_corpus(seed: int, n: int, class_share=(1 / 3, 1 / 3, 1 / 3)) -> Dataset:
    """Labelled reviews of 5-20 tokens drawn from disjoint per-class keyword pools.

    Each token is a class keyword with probability 0.6 and a shared filler
    word otherwise. ``class_share`` is (negative, neutral, positive); a zero
    share drops that class.
    """
    shares = [float(s) for s in class_share]
    if len(shares) != 3 or any(s < 0 for s in shares) or abs(sum(shares) - 1.0) > 1e-9:
        raise ConfigError(f"class_share must be three non-negative fractions summing to 1, got {class_share}")
    if n < 3:
        raise ConfigError(f"n must be >= 3, got {n}")
    rng = Rng64(seed)
    labels = [lab for lab, c in zip(LABELS, largest_remainder(n, shares)) for _ in range(c)]
    labels = [labels[i] for i in rng.permutation(n)]
    records = []
    for lab in labels:
        pool = SYNTH_POOLS[lab]
        length = 5 + rng.randbelow(16)
        words = []
        for _ in range(length):
            if rng.random() < SYNTH_CLASS_WORD_RATE:
                words.append(pool[rng.randbelow(len(pool))])
            else:
                words.append(SYNTH_FILLER[rng.randbelow(len(SYNTH_FILLER))])
        text = " ".join(words)
        records.append(ReviewRecord(text[0].upper() + text[1:] + ".", label=lab))
    return Dataset(records)


# --------------------------------------------------------------------------
# pretrained vectors


def load_pretrained_vectors(path, vocab: Vocab, table: np.ndarray) -> int:
    """Overwrite embedding rows from a ``token v1 ... vd`` text file.

    A leading ``count dim`` header line (word2vec text format) is skipped.
    Rows for tokens missing from the file are left alone. Returns the number
    of rows replaced.
    """
    dim = table.shape[1]
    replaced = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            if not line.strip():
                continue
            if len(parts) != dim + 1:
                raise DataError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            row = vocab.token_to_id.get(parts[0])
            if row is None or row < 2 or row >= table.shape[0]:
                continue
            try:
                table[row] = [float(v) for v in parts[1:]]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric vector entry") from None
            replaced += 1
    return replaced
