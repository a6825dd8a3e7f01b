"""Train/test split, Adam with global-norm clipping, epoch loop and curve export."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ShapeError
from .model import ModelConfig, backward, forward, loss
from .numerics import Rng64


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float = 5.0
    seed: int = 0
    train_frac: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.train_frac < 1.0:
            raise ConfigError(f"train_frac must lie in (0, 1), got {self.train_frac}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0 or self.clip_norm <= 0:
            raise ConfigError("learning_rate and clip_norm must be positive")


def split_indices(n: int, train_frac: float, seed: int) -> tuple[list[int], list[int]]:
    if n <= 0:
        raise ConfigError("cannot split an empty dataset")
    if not 0.0 < train_frac < 1.0:
        raise ConfigError(f"train_frac must lie in (0, 1), got {train_frac}")
    order = Rng64(seed).permutation(n)
    cut = math.floor(n * train_frac)
    return order[:cut], order[cut:]


def split_dataset(data: Sequence, train_frac: float = 0.7, seed: int = 0) -> tuple[list, list]:
    """Seeded shuffle, then the first floor(n * train_frac) items go to training."""
    train_idx, test_idx = split_indices(len(data), train_frac, seed)
    return [data[i] for i in train_idx], [data[i] for i in test_idx]


# --------------------------------------------------------------------------
# optimiser


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls({k: np.zeros_like(a) for k, a in params.items()},
                   {k: np.zeros_like(a) for k, a in params.items()})


def global_norm(grads) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_by_global_norm(grads, clip_norm: float):
    norm = global_norm(grads)
    if norm <= clip_norm:
        return grads, norm
    scale = clip_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm


def adam_step(params, grads, state: AdamState, cfg: TrainConfig):
    """Clip, then one bias-corrected Adam update. ``params`` is updated in place."""
    if grads.keys() != params.keys():
        raise ShapeError(f"gradient keys {sorted(grads)} do not match parameters {sorted(params)}")
    grads, _ = clip_by_global_norm(grads, cfg.clip_norm)
    state.t += 1
    c1 = 1.0 - cfg.beta1 ** state.t
    c2 = 1.0 - cfg.beta2 ** state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"{name}: gradient {g.shape} vs parameter {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)
    return params, state


# --------------------------------------------------------------------------
# epoch loop


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_loss)

    def append(self, train_loss, train_acc, val_loss, val_acc):
        self.train_loss.append(float(train_loss))
        self.train_acc.append(float(train_acc))
        self.val_loss.append(float(val_loss))
        self.val_acc.append(float(val_acc))

    def rows(self):
        return list(zip(self.train_loss, self.train_acc, self.val_loss, self.val_acc))


def run_epoch(params, n: int, cfg: TrainConfig, epoch: int, state: AdamState,
              grad_fn: Callable[[dict, np.ndarray], dict]) -> None:
    """One pass over ``n`` examples in a seed+epoch shuffled order."""
    order = np.asarray(Rng64(cfg.seed + epoch).permutation(n), dtype=np.int64)
    for start in range(0, n, cfg.batch_size):
        idx = order[start:start + cfg.batch_size]
        adam_step(params, grad_fn(params, idx), state, cfg)


def check_labels(y, config: ModelConfig) -> np.ndarray:
    y = np.asarray(y)
    allowed = (0, 1) if config.k == 1 else (0, 1, 2)
    for i, label in enumerate(y.tolist()):
        if label not in allowed:
            raise ConfigError(f"record {i}: label {label!r} is not valid for the {config.head} head "
                              f"(expected one of {allowed})")
    return y.astype(np.int64)


def predict_labels(output, config: ModelConfig) -> np.ndarray:
    out = np.asarray(output)
    if config.k == 1:
        return (out.reshape(-1) > 0.5).astype(np.int64)
    return np.argmax(np.atleast_2d(out), axis=1)


def evaluate(params, config: ModelConfig, X, y, chunk: int = 1024) -> tuple[float, float]:
    """Mean loss and accuracy over a whole labelled set."""
    X = np.atleast_2d(np.asarray(X))
    y = check_labels(y, config)
    n = len(y)
    if n == 0:
        raise ConfigError("cannot evaluate an empty dataset")
    total_loss = 0.0
    correct = 0
    for start in range(0, n, chunk):
        out, _ = forward(X[start:start + chunk], params, config)
        yy = y[start:start + chunk]
        total_loss += loss(out, yy, config.head) * len(yy)
        correct += int(np.sum(predict_labels(out, config) == yy))
    return total_loss / n, correct / n


def train(params, config: ModelConfig, X, y, cfg: TrainConfig, validation=None):
    """Fit a copy of ``params``; returns ``(params, History)``.

    Without ``validation`` the data are split ``train_frac`` / rest by
    ``cfg.seed``; otherwise all of ``X`` trains and ``validation=(Xv, yv)``
    is scored each epoch.
    """
    X = np.atleast_2d(np.asarray(X))
    y = check_labels(y, config)
    if validation is None:
        tr, va = split_indices(len(y), cfg.train_frac, cfg.seed)
        X_tr, y_tr, X_va, y_va = X[tr], y[tr], X[va], y[va]
    else:
        X_tr, y_tr = X, y
        X_va, y_va = np.atleast_2d(np.asarray(validation[0])), check_labels(validation[1], config)
    if len(y_tr) == 0:
        raise ConfigError("training split is empty")

    params = {k: v.copy() for k, v in params.items()}
    state = AdamState.zeros_like(params)
    history = History()

    def grad_fn(p, idx):
        _, cache = forward(X_tr[idx], p, config)
        return backward(cache, y_tr[idx], p, config)

    for epoch in range(cfg.epochs):
        run_epoch(params, len(y_tr), cfg, epoch, state, grad_fn)
        tl, ta = evaluate(params, config, X_tr, y_tr)
        vl, vacc = evaluate(params, config, X_va, y_va) if len(y_va) else (math.nan, math.nan)
        history.append(tl, ta, vl, vacc)
    return params, history


# --------------------------------------------------------------------------
# curves

CURVE_HEADER = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"]


def export_curves(history: History, path) -> None:
    """Per-epoch metrics as CSV, epochs numbered from 1."""
    if len(history) == 0:
        raise ConfigError("history is empty")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for epoch, row in enumerate(history.rows(), 1):
            writer.writerow([epoch] + [f"{x:.6f}" for x in row])


def read_curves(path) -> History:
    history = History()
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CURVE_HEADER:
            raise ConfigError(f"unexpected curve header {reader.fieldnames}")
        for row in reader:
            history.append(*(float(row[k]) for k in CURVE_HEADER[1:]))
    return history
