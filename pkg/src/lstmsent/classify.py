"""Probability bands for review types and sentiment labels with one-hot codes."""

from __future__ import annotations

import math
from enum import Enum, IntEnum

import numpy as np

from .errors import DomainError


class ReviewType(IntEnum):
    VERY_BAD = 0
    BAD = 1
    GOOD = 2
    BETTER = 3
    EXCELLENT = 4

    @property
    def label(self) -> str:
        return self.name.lower()


# lower edge of each band; a boundary value belongs to the band above it
_BANDS = (
    (0.80, ReviewType.EXCELLENT),
    (0.60, ReviewType.BETTER),
    (0.50, ReviewType.GOOD),
    (0.30, ReviewType.BAD),
    (0.0, ReviewType.VERY_BAD),
)


def review_type_of(p: float) -> ReviewType:
    """Five half-open bands: [0,.3) [.3,.5) [.5,.6) [.6,.8) [.8,1]."""
    p = float(p)
    if math.isnan(p) or not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    for lower, kind in _BANDS:
        if p >= lower:
            return kind
    raise AssertionError("unreachable")


class SentimentLabel(Enum):
    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    POSITIVE = "positive"

    @property
    def index(self) -> int:
        return _LABEL_ORDER.index(self)

    @property
    def one_hot(self) -> tuple[int, int, int]:
        vec = [0, 0, 0]
        vec[self.index] = 1
        return tuple(vec)

    @classmethod
    def parse(cls, text: str) -> "SentimentLabel":
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise DomainError(f"unknown sentiment label {text!r}") from None


_LABEL_ORDER = (SentimentLabel.NEGATIVE, SentimentLabel.NEUTRAL, SentimentLabel.POSITIVE)
LABELS = _LABEL_ORDER


def one_hot(label: SentimentLabel) -> tuple[int, int, int]:
    return label.one_hot


def from_index(i: int) -> SentimentLabel:
    return _LABEL_ORDER[i]


def decode_one_hot(vec) -> SentimentLabel:
    """Argmax decoding in (negative, neutral, positive) order; ties go to the first."""
    return _LABEL_ORDER[int(np.argmax(np.asarray(vec, dtype=np.float64)))]


def sentiment_of(output, head: str = "sigmoid") -> SentimentLabel:
    """The binary head never yields neutral: p > 0.5 is positive, anything else negative."""
    if head == "sigmoid":
        return SentimentLabel.POSITIVE if float(np.asarray(output).reshape(-1)[0]) > 0.5 else SentimentLabel.NEGATIVE
    return decode_one_hot(output)


def binary_target(label: SentimentLabel) -> int:
    """0/1 target for the sigmoid head. Neutral maps to -1 and is rejected by training."""
    return {SentimentLabel.NEGATIVE: 0, SentimentLabel.POSITIVE: 1}.get(label, -1)
