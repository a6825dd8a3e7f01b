"""One next-token LSTM language model per sentiment class.

A review is assigned to the class whose model finds it least surprising,
measured as mean negative log-likelihood per predicted token. Inputs are
pre-padded id sequences; position ``t`` predicts the id at ``t + 1`` and
positions whose target is PAD are skipped, so the last PAD before the text
acts as the beginning-of-sentence symbol.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import serialization as ser
from .classify import LABELS, SentimentLabel
from .errors import ConfigError, InsufficientLengthError, MalformedWeightsError, ShapeError
from .model import (
    LSTM_NAMES,
    check_gradients,
    embedding_grad,
    glorot,
    init_lstm,
    lstm_sequence,
    lstm_sequence_backward,
    lstm_shapes,
    read_tensors,
    read_vocab,
    check_version,
    reference_hidden_states,
    sample_indices,
    tensor_fields,
    vocab_fields,
)
from .numerics import Rng64, log_softmax
from .textproc import PAD_ID, EncodedSequence, Vocab
from .training import AdamState, TrainConfig, run_epoch

LM_NAMES = ("embedding",) + LSTM_NAMES + ("proj_w", "proj_b")


@dataclass(frozen=True)
class LmConfig:
    vocab_size: int
    embed_dim: int = 16
    hidden: int = 32
    seq_len: int = 100

    def __post_init__(self):
        for name in ("vocab_size", "embed_dim", "hidden", "seq_len"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.seq_len < 2:
            raise ConfigError("a language model needs seq_len >= 2")

    def to_header(self) -> dict:
        return {"V": self.vocab_size, "d": self.embed_dim, "h": self.hidden, "L": self.seq_len, "head": "lm"}


def lm_shapes(config: LmConfig) -> dict[str, tuple[int, ...]]:
    shapes = {"embedding": (config.vocab_size, config.embed_dim)}
    shapes.update(lstm_shapes(config.embed_dim, config.hidden))
    shapes["proj_w"] = (config.hidden, config.vocab_size)
    shapes["proj_b"] = (config.vocab_size,)
    return shapes


def init_lm(config: LmConfig, seed: int) -> dict[str, np.ndarray]:
    rng = Rng64(seed)
    params = {"embedding": rng.uniform_array(-0.05, 0.05, (config.vocab_size, config.embed_dim))}
    params.update(init_lstm(rng, config.embed_dim, config.hidden))
    params["proj_w"] = glorot(rng, config.hidden, config.vocab_size)
    params["proj_b"] = np.zeros(config.vocab_size)
    return params


def zero_lm(config: LmConfig) -> dict[str, np.ndarray]:
    return {name: np.zeros(shape) for name, shape in lm_shapes(config).items()}


@dataclass
class ClassLm:
    label: SentimentLabel
    params: dict
    config: LmConfig


@dataclass
class EnsembleModel:
    lms: dict[SentimentLabel, ClassLm]
    vocab: Vocab | None = None

    def __post_init__(self):
        if not self.lms:
            raise ConfigError("an ensemble needs at least one class model")
        configs = {lm.config for lm in self.lms.values()}
        if len(configs) != 1:
            raise ConfigError("all class models must share vocabulary size and dimensions")

    @property
    def config(self) -> LmConfig:
        return next(iter(self.lms.values())).config

    @property
    def labels(self) -> list[SentimentLabel]:
        return [lab for lab in LABELS if lab in self.lms]


def _ids(seq, config: LmConfig) -> np.ndarray:
    ids = seq.ids if isinstance(seq, EncodedSequence) else seq
    ids = np.atleast_2d(np.asarray(ids, dtype=np.int64))
    if ids.shape[1] != config.seq_len:
        raise ShapeError(f"expected sequences of length {config.seq_len}, got {ids.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise ShapeError(f"token id outside 0..{config.vocab_size - 1}")
    return ids


def _token_nll(params, config: LmConfig, ids: np.ndarray):
    """Per-position NLL ``(B, L-1)``, its mask, and what backward needs."""
    X = params["embedding"][ids]
    seq = lstm_sequence(X, params)
    H = seq.h[:, :-1]
    logp = log_softmax(H @ params["proj_w"] + params["proj_b"])
    targets = ids[:, 1:]
    nll = -np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    mask = targets != PAD_ID
    return nll, mask, (seq, logp, targets)


def lm_loss(params, config: LmConfig, ids) -> float:
    """Mean NLL over every non-PAD target in the batch."""
    ids = _ids(ids, config)
    nll, mask, _ = _token_nll(params, config, ids)
    return float(np.sum(nll * mask) / max(int(mask.sum()), 1))


def lm_loss_and_grads(params, config: LmConfig, ids):
    ids = _ids(ids, config)
    nll, mask, (seq, logp, targets) = _token_nll(params, config, ids)
    count = max(int(mask.sum()), 1)
    value = float(np.sum(nll * mask) / count)

    dlogits = np.exp(logp)
    np.put_along_axis(dlogits, targets[..., None],
                      np.take_along_axis(dlogits, targets[..., None], axis=-1) - 1.0, axis=-1)
    dlogits *= (mask / count)[..., None]

    B, L, hid = seq.h.shape
    H = seq.h[:, :-1].reshape(-1, hid)
    flat = dlogits.reshape(-1, config.vocab_size)
    grads = {"proj_w": H.T @ flat, "proj_b": flat.sum(axis=0)}
    dH = np.zeros_like(seq.h)
    dH[:, :-1] = dlogits @ params["proj_w"].T
    lstm_grads, dX = lstm_sequence_backward(dH, seq, params)
    grads.update(lstm_grads)
    grads["embedding"] = embedding_grad(ids, dX, config.vocab_size)
    return value, {name: grads[name] for name in LM_NAMES}


def reference_lm_loss(params, config: LmConfig, ids) -> float:
    """Mean next-token NLL through the reference loop, in the parameters' dtype."""
    ids = _ids(ids, config)
    H = reference_hidden_states(params, ids)[:, :-1]
    z = H @ params["proj_w"] + params["proj_b"]
    z = z - z.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    targets = ids[:, 1:]
    nll = -np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    mask = targets != PAD_ID
    return np.sum(nll * mask) / max(int(mask.sum()), 1)


def lm_grad_check(params, config: LmConfig, ids, eps: float = 1e-5, *, per_tensor: int = 20, seed: int = 0) -> float:
    ids = _ids(ids, config)
    _, grads = lm_loss_and_grads(params, config, ids)
    picks = sample_indices(params, ids.reshape(-1), per_tensor, Rng64(seed), LM_NAMES)
    return check_gradients(lambda p: reference_lm_loss(p, config, ids), params, grads, picks, eps)


def avg_nll(lm: ClassLm, ids) -> np.ndarray:
    """Mean NLL per sequence for a batch; rows with nothing to predict give NaN."""
    ids = _ids(ids, lm.config)
    nll, mask, _ = _token_nll(lm.params, lm.config, ids)
    counts = mask.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, (nll * mask).sum(axis=1) / np.maximum(counts, 1), np.nan)


def _require_length(ids: np.ndarray) -> None:
    real = (ids != PAD_ID).sum(axis=1)
    short = np.flatnonzero(real < 2)
    if short.size:
        raise InsufficientLengthError(
            f"sequence {int(short[0])} has {int(real[short[0]])} real tokens; at least 2 are needed"
        )


def sequence_avg_nll(lm: ClassLm, seq) -> float:
    ids = _ids(seq, lm.config)
    _require_length(ids)
    return float(avg_nll(lm, ids)[0])


def argmin_class(errors: dict[SentimentLabel, float]) -> SentimentLabel:
    """Smallest error wins; ties go to the earliest of negative, neutral, positive."""
    ordered = [lab for lab in LABELS if lab in errors]
    return min(ordered, key=lambda lab: (errors[lab], ordered.index(lab)))


def classify_by_min_error(ensemble: EnsembleModel, seq):
    """Return ``(label, {label: avg NLL})`` for one encoded review."""
    errors = {lab: sequence_avg_nll(ensemble.lms[lab], seq) for lab in ensemble.labels}
    return argmin_class(errors), errors


def classify_batch(ensemble: EnsembleModel, ids) -> tuple[list[SentimentLabel], np.ndarray]:
    """Vectorised version over a ``(B, L)`` batch; returns labels and a (B, classes) error matrix."""
    ids = _ids(ids, ensemble.config)
    _require_length(ids)
    labels = ensemble.labels
    errors = np.stack([avg_nll(ensemble.lms[lab], ids) for lab in labels], axis=1)
    # np.argmin returns the first minimum, which is the declared tie order
    return [labels[j] for j in np.argmin(errors, axis=1)], errors


# --------------------------------------------------------------------------
# training


def class_seed(seed: int, label: SentimentLabel) -> int:
    return seed + 1009 * LABELS.index(label)


def train_class_lm(label: SentimentLabel, ids, config: LmConfig, cfg: TrainConfig) -> tuple[ClassLm, list[float]]:
    """Fit one class model by next-token prediction; returns it with per-epoch train loss."""
    ids = _ids(ids, config)
    ids = ids[(ids[:, 1:] != PAD_ID).any(axis=1)]
    if len(ids) == 0:
        raise ConfigError(f"class {label.value!r} has no trainable sequences")
    seed = class_seed(cfg.seed, label)
    params = init_lm(config, seed)
    state = AdamState.zeros_like(params)
    epoch_cfg = TrainConfig(**{**cfg.__dict__, "seed": seed})
    losses = []

    def grad_fn(p, idx):
        return lm_loss_and_grads(p, config, ids[idx])[1]

    for epoch in range(cfg.epochs):
        run_epoch(params, len(ids), epoch_cfg, epoch, state, grad_fn)
        losses.append(lm_loss(params, config, ids))
    return ClassLm(label, params, config), losses


def train_class_lms(corpora: dict, config: LmConfig, cfg: TrainConfig, vocab: Vocab | None = None) -> EnsembleModel:
    """Train each class independently; ``corpora`` maps label to a ``(n, L)`` id matrix."""
    lms = {}
    for label in LABELS:
        if label not in corpora:
            continue
        ids = np.asarray(corpora[label])
        if ids.size == 0:
            raise ConfigError(f"class {label.value!r} has an empty corpus")
        lms[label], _ = train_class_lm(label, ids, config, cfg)
    if not lms:
        raise ConfigError("no class corpora given")
    return EnsembleModel(lms, vocab)


# --------------------------------------------------------------------------
# files


def save_ensemble(ensemble: EnsembleModel, path) -> None:
    fields = [("format_version", str(ser.FORMAT_VERSION)), ("kind", json.dumps("ensemble")),
              ("classes", json.dumps([lab.value for lab in ensemble.labels]))]
    for lab in ensemble.labels:
        lm = ensemble.lms[lab]
        inner = [("config", json.dumps(lm.config.to_header()))] + tensor_fields(lm.params, LM_NAMES)
        fields.append((lab.value, ser.object_to_json(inner, indent="  ")))
    if ensemble.vocab is not None:
        fields += vocab_fields(ensemble.vocab)
    Path(path).write_text(ser.object_to_json(fields) + "\n", encoding="utf-8")


def is_ensemble_document(doc: dict) -> bool:
    return doc.get("kind") == "ensemble"


def ensemble_from_document(doc: dict) -> EnsembleModel:
    check_version(doc)
    if not is_ensemble_document(doc):
        raise MalformedWeightsError("not an ensemble weights file")
    lms = {}
    for name in doc.get("classes", []):
        try:
            label = SentimentLabel(name)
        except ValueError:
            raise MalformedWeightsError(f"unknown class {name!r}") from None
        entry = doc.get(name)
        if not isinstance(entry, dict) or "config" not in entry:
            raise MalformedWeightsError(f"missing entry for class {name!r}")
        raw = entry["config"]
        try:
            config = LmConfig(ser.as_int(raw["V"], "V"), ser.as_int(raw["d"], "d"),
                              ser.as_int(raw["h"], "h"), ser.as_int(raw["L"], "L"))
        except (KeyError, TypeError, ConfigError) as exc:
            raise MalformedWeightsError(f"bad config for class {name!r}: {exc}") from None
        lms[label] = ClassLm(label, read_tensors(entry, lm_shapes(config), f"{name}: "), config)
    if not lms:
        raise MalformedWeightsError("ensemble file lists no classes")
    return EnsembleModel(lms, read_vocab(doc))


def load_ensemble(path) -> EnsembleModel:
    return ensemble_from_document(ser.parse_document(Path(path).read_text(encoding="utf-8")))


def uniform_nll(vocab_size: int) -> float:
    return math.log(vocab_size)
