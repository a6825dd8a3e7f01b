"""Embedding -> single LSTM layer -> dense head, with exact BPTT gradients.

Parameters live in a plain ``dict`` of float64 arrays keyed by
:data:`PARAM_NAMES`. Kernels use the row-vector convention ``x @ U``, so an
input kernel is ``(embed_dim, hidden)`` and a recurrent one ``(hidden, hidden)``.

Gate layout per step::

    i = sigmoid(x U_i + h W_i + b_i)      f = sigmoid(x U_f + h W_f + b_f)
    g = tanh(x U_g + h W_g + b_g)          o = sigmoid(x U_o + h W_o + b_o)
    c = f * c_prev + i * g                 h = tanh(c) * o
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import serialization as ser
from .errors import (
    ConfigError,
    EncodingError,
    MalformedWeightsError,
    ShapeError,
    WeightsShapeError,
    WeightsVersionError,
)
from .numerics import Rng64, sigmoid, softmax
from .textproc import EncodedSequence, Vocab

GATES = ("i", "f", "g", "o")
LSTM_NAMES = tuple(f"U_{g}" for g in GATES) + tuple(f"W_{g}" for g in GATES) + tuple(f"b_{g}" for g in GATES)
PARAM_NAMES = ("embedding",) + LSTM_NAMES + ("dense_w", "dense_b")
HEADS = {"sigmoid": 1, "softmax": 3}

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int = 20_000
    embed_dim: int = 32
    hidden: int = 100
    seq_len: int = 100
    head: str = "sigmoid"

    def __post_init__(self):
        for name in ("vocab_size", "embed_dim", "hidden", "seq_len"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.head not in HEADS:
            raise ConfigError(f"head must be one of {sorted(HEADS)}, got {self.head!r}")

    @property
    def k(self) -> int:
        return HEADS[self.head]

    def to_header(self) -> dict:
        return {"V": self.vocab_size, "d": self.embed_dim, "h": self.hidden, "L": self.seq_len, "head": self.head}


class ParamCount(NamedTuple):
    embedding: int
    lstm: int
    dense: int
    total: int


def param_count(config: ModelConfig) -> ParamCount:
    V, d, h, k = config.vocab_size, config.embed_dim, config.hidden, config.k
    emb = V * d
    lstm = 4 * (d * h + h * h + h)
    dense = h * k + k
    return ParamCount(emb, lstm, dense, emb + lstm + dense)


def lstm_shapes(d: int, h: int) -> dict[str, tuple[int, ...]]:
    shapes = {}
    for g in GATES:
        shapes[f"U_{g}"] = (d, h)
    for g in GATES:
        shapes[f"W_{g}"] = (h, h)
    for g in GATES:
        shapes[f"b_{g}"] = (h,)
    return shapes


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    shapes = {"embedding": (config.vocab_size, config.embed_dim)}
    shapes.update(lstm_shapes(config.embed_dim, config.hidden))
    shapes["dense_w"] = (config.hidden, config.k)
    shapes["dense_b"] = (config.k,)
    return shapes


def glorot(rng: Rng64, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform_array(-limit, limit, (fan_in, fan_out))


def init_lstm(rng: Rng64, d: int, h: int) -> dict[str, np.ndarray]:
    """Glorot kernels drawn U_i..U_o then W_i..W_o; zero biases except b_f = 1."""
    p = {}
    for g in GATES:
        p[f"U_{g}"] = glorot(rng, d, h)
    for g in GATES:
        p[f"W_{g}"] = glorot(rng, h, h)
    for g in GATES:
        p[f"b_{g}"] = np.ones(h) if g == "f" else np.zeros(h)
    return p


def init_params(config: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    rng = Rng64(seed)
    params = {"embedding": rng.uniform_array(-0.05, 0.05, (config.vocab_size, config.embed_dim))}
    params.update(init_lstm(rng, config.embed_dim, config.hidden))
    params["dense_w"] = glorot(rng, config.hidden, config.k)
    params["dense_b"] = np.zeros(config.k)
    return params


def count_scalars(params: dict[str, np.ndarray]) -> int:
    return sum(int(np.size(v)) for v in params.values())


# --------------------------------------------------------------------------
# LSTM core


@dataclass
class StepCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    h: np.ndarray


def lstm_step(x_t, h_prev, c_prev, p):
    """One LSTM step, gate by gate. Accepts single vectors or row batches."""
    x_t, h_prev, c_prev = (np.asarray(a, dtype=np.float64) for a in (x_t, h_prev, c_prev))
    d, h = p["U_i"].shape
    if x_t.shape[-1] != d or h_prev.shape[-1] != h or c_prev.shape != h_prev.shape:
        raise ShapeError(
            f"lstm_step got x {x_t.shape}, h {h_prev.shape}, c {c_prev.shape} for d={d}, h={h}"
        )
    i = sigmoid(x_t @ p["U_i"] + h_prev @ p["W_i"] + p["b_i"])
    f = sigmoid(x_t @ p["U_f"] + h_prev @ p["W_f"] + p["b_f"])
    g = np.tanh(x_t @ p["U_g"] + h_prev @ p["W_g"] + p["b_g"])
    c = f * c_prev + i * g
    o = sigmoid(x_t @ p["U_o"] + h_prev @ p["W_o"] + p["b_o"])
    h_t = np.tanh(c) * o
    return h_t, c, StepCache(x_t, h_prev, c_prev, i, f, g, o, c, h_t)


def _fused(p):
    U = np.concatenate([p[f"U_{g}"] for g in GATES], axis=1)
    W = np.concatenate([p[f"W_{g}"] for g in GATES], axis=1)
    b = np.concatenate([p[f"b_{g}"] for g in GATES])
    return U, W, b


@dataclass
class SequenceCache:
    """Per-timestep activations, time on axis 1: arrays are ``(B, L, ·)``."""

    x: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray
    h: np.ndarray

    @property
    def steps(self) -> int:
        return self.x.shape[1]


def lstm_sequence(X: np.ndarray, p) -> SequenceCache:
    """Run the LSTM over ``X`` of shape ``(B, L, d)`` from zero state."""
    B, L, _ = X.shape
    U, W, b = _fused(p)
    hid = W.shape[0]
    pre_x = X @ U + b
    gates = np.empty((4, B, L, hid))
    c_all = np.empty((B, L, hid))
    tc_all = np.empty((B, L, hid))
    h_all = np.empty((B, L, hid))
    h = np.zeros((B, hid))
    c = np.zeros((B, hid))
    for t in range(L):
        z = pre_x[:, t] + h @ W
        i = sigmoid(z[:, :hid])
        f = sigmoid(z[:, hid:2 * hid])
        g = np.tanh(z[:, 2 * hid:3 * hid])
        o = sigmoid(z[:, 3 * hid:])
        c = f * c + i * g
        tc = np.tanh(c)
        h = tc * o
        gates[0, :, t], gates[1, :, t], gates[2, :, t], gates[3, :, t] = i, f, g, o
        c_all[:, t], tc_all[:, t], h_all[:, t] = c, tc, h
    return SequenceCache(X, gates[0], gates[1], gates[2], gates[3], c_all, tc_all, h_all)


def lstm_sequence_backward(dH: np.ndarray, cache: SequenceCache, p):
    """BPTT given ``dL/dh_t`` for every step. Returns (kernel/bias grads, dL/dX)."""
    B, L, hid = cache.h.shape
    _, W, _ = _fused(p)
    dZ = np.empty((B, L, 4 * hid))
    dh_next = np.zeros((B, hid))
    dc_next = np.zeros((B, hid))
    for t in range(L - 1, -1, -1):
        i, f, g, o = cache.i[:, t], cache.f[:, t], cache.g[:, t], cache.o[:, t]
        tc = cache.tanh_c[:, t]
        c_prev = cache.c[:, t - 1] if t > 0 else np.zeros((B, hid))
        dh = dH[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = dZ[:, t]
        dz[:, :hid] = dc * g * i * (1.0 - i)
        dz[:, hid:2 * hid] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * hid:3 * hid] = dc * i * (1.0 - g * g)
        dz[:, 3 * hid:] = dh * tc * o * (1.0 - o)
        dh_next = dz @ W.T
        dc_next = dc * f
    H_prev = np.concatenate([np.zeros((B, 1, hid)), cache.h[:, :-1]], axis=1)
    d = cache.x.shape[2]
    flat_dZ = dZ.reshape(B * L, 4 * hid)
    dU = cache.x.reshape(B * L, d).T @ flat_dZ
    dW = H_prev.reshape(B * L, hid).T @ flat_dZ
    db = flat_dZ.sum(axis=0)
    U, _, _ = _fused(p)
    dX = dZ @ U.T
    grads = {}
    for n, g in enumerate(GATES):
        grads[f"U_{g}"] = dU[:, n * hid:(n + 1) * hid].copy()
    for n, g in enumerate(GATES):
        grads[f"W_{g}"] = dW[:, n * hid:(n + 1) * hid].copy()
    for n, g in enumerate(GATES):
        grads[f"b_{g}"] = db[n * hid:(n + 1) * hid].copy()
    return grads, dX


def embedding_grad(ids: np.ndarray, dX: np.ndarray, vocab_size: int) -> np.ndarray:
    """Scatter-add ``dX`` rows into a dense table gradient; untouched rows stay 0."""
    gE = np.zeros((vocab_size, dX.shape[-1]))
    np.add.at(gE, ids.reshape(-1), dX.reshape(-1, dX.shape[-1]))
    return gE


# --------------------------------------------------------------------------
# classifier forward / backward


@dataclass
class ForwardCache:
    ids: np.ndarray
    seq: SequenceCache
    z: np.ndarray
    out: np.ndarray
    single: bool
    config: ModelConfig


def as_id_batch(seq, config: ModelConfig) -> tuple[np.ndarray, bool]:
    ids = seq.ids if isinstance(seq, EncodedSequence) else seq
    ids = np.asarray(ids)
    single = ids.ndim == 1
    ids = np.atleast_2d(ids).astype(np.int64, copy=False)
    if ids.ndim != 2 or ids.shape[1] != config.seq_len:
        raise ShapeError(f"expected sequences of length {config.seq_len}, got shape {ids.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        bad = int(ids.max()) if ids.max() >= config.vocab_size else int(ids.min())
        raise EncodingError(f"token id {bad} outside embedding table of {config.vocab_size} rows")
    return ids, single


def forward(seq, params, config: ModelConfig):
    """Probability (sigmoid head) or class distribution (softmax head).

    ``seq`` may be an :class:`EncodedSequence`, a 1-D id array or a 2-D batch.
    A single sequence yields a float (k=1) or a length-3 vector (k=3); a
    batch yields ``(B,)`` or ``(B, 3)``.
    """
    ids, single = as_id_batch(seq, config)
    X = params["embedding"][ids]
    sc = lstm_sequence(X, params)
    z = sc.h[:, -1] @ params["dense_w"] + params["dense_b"]
    out = sigmoid(z) if config.k == 1 else softmax(z)
    out = np.asarray(out)
    cache = ForwardCache(ids, sc, z, out, single, config)
    if config.k == 1:
        result = out[:, 0]
        return (float(result[0]) if single else result), cache
    return (out[0] if single else out), cache


def targets_matrix(target, config: ModelConfig, batch: int) -> np.ndarray:
    """Targets as a ``(B, k)`` float array.

    k=1 takes 0/1 labels; k=3 takes class indices (negative, neutral, positive)
    or explicit distributions.
    """
    t = np.asarray(target, dtype=np.float64)
    if config.k == 1:
        return t.reshape(batch, 1)
    if t.ndim >= 1 and t.shape[-1] == 3 and t.size == batch * 3:
        return t.reshape(batch, 3)
    idx = t.reshape(batch).astype(np.int64)
    if np.any((idx < 0) | (idx > 2)):
        raise ConfigError(f"class index outside 0..2: {idx}")
    return np.eye(3)[idx]


def loss(output, target, head: str = "sigmoid") -> float:
    """Mean BCE (sigmoid head) or CCE (softmax head) with outputs clamped."""
    k = HEADS[head]
    p = np.asarray(output, dtype=np.float64)
    if k == 1:
        y = np.asarray(target, dtype=np.float64).reshape(-1)
        p = np.clip(p.reshape(-1), PROB_CLAMP, 1.0 - PROB_CLAMP)
        return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))
    p = np.clip(np.atleast_2d(p), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = targets_matrix(target, ModelConfig(head=head), p.shape[0])
    return float(np.mean(-(y * np.log(p)).sum(axis=1)))


def head_delta(cache: ForwardCache, target) -> np.ndarray:
    """dLoss/dz at the head pre-activation, already divided by the batch size."""
    B = cache.out.shape[0]
    y = targets_matrix(target, cache.config, B)
    return (cache.out - y) / B


def backward(cache: ForwardCache, target, params, config: ModelConfig) -> dict[str, np.ndarray]:
    """Exact gradient of the mean batch loss w.r.t. every parameter."""
    if cache.config != config or cache.seq.x.shape[2] != params["embedding"].shape[1]:
        raise ShapeError("forward cache does not match the model configuration")
    dz = head_delta(cache, target)
    h_last = cache.seq.h[:, -1]
    grads = {"dense_w": h_last.T @ dz, "dense_b": dz.sum(axis=0)}
    dH = np.zeros_like(cache.seq.h)
    dH[:, -1] = dz @ params["dense_w"].T
    lstm_grads, dX = lstm_sequence_backward(dH, cache.seq, params)
    grads.update(lstm_grads)
    grads["embedding"] = embedding_grad(cache.ids, dX, config.vocab_size)
    return {name: grads[name] for name in PARAM_NAMES}


def batch_loss(params, config: ModelConfig, ids, target) -> float:
    out, _ = forward(ids, params, config)
    return loss(out, target, config.head)


# --------------------------------------------------------------------------
# gradient verification


def relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-8)


def reference_hidden_states(params, ids: np.ndarray) -> np.ndarray:
    """Gate-by-gate LSTM loop in the dtype of ``params``; returns ``(B, L, h)``.

    Deliberately shares no code with :func:`lstm_sequence`; finite-difference
    checks evaluate losses through this path in extended precision.
    """
    def sig(z):
        return 1 / (1 + np.exp(-z))

    p = params
    B, L = ids.shape
    hid = p["W_i"].shape[0]
    dtype = p["W_i"].dtype
    h = np.zeros((B, hid), dtype=dtype)
    c = np.zeros((B, hid), dtype=dtype)
    hs = np.zeros((B, L, hid), dtype=dtype)
    for t in range(L):
        x = p["embedding"][ids[:, t]]
        i = sig(x @ p["U_i"] + h @ p["W_i"] + p["b_i"])
        f = sig(x @ p["U_f"] + h @ p["W_f"] + p["b_f"])
        g = np.tanh(x @ p["U_g"] + h @ p["W_g"] + p["b_g"])
        o = sig(x @ p["U_o"] + h @ p["W_o"] + p["b_o"])
        c = f * c + i * g
        h = np.tanh(c) * o
        hs[:, t] = h
    return hs


def reference_loss(params, config: ModelConfig, ids, target) -> float:
    """Mean batch loss evaluated by the reference loop in the parameters' dtype."""
    ids = np.atleast_2d(np.asarray(ids, dtype=np.int64))
    h_last = reference_hidden_states(params, ids)[:, -1]
    z = h_last @ params["dense_w"] + params["dense_b"]
    y = targets_matrix(target, config, ids.shape[0]).astype(z.dtype)
    if config.k == 1:
        # BCE on logits: softplus(z) - y z
        per = np.logaddexp(0, z) - y * z
        return np.mean(per)
    zs = z - z.max(axis=1, keepdims=True)
    logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
    return np.mean(-(y * logp).sum(axis=1))


EXTENDED = np.longdouble


def numeric_grad(loss_fn, params, name: str, index: tuple, eps: float) -> float:
    """Central difference (L(θ+ε) - L(θ-ε)) / 2ε for one scalar, restored afterwards."""
    arr = params[name]
    saved = arr[index]
    arr[index] = saved + eps
    up = loss_fn(params)
    arr[index] = saved - eps
    down = loss_fn(params)
    arr[index] = saved
    return float((up - down) / (2 * arr.dtype.type(eps)))


def sample_indices(params, touched_rows, per_tensor: int, rng: Rng64, names=None):
    """All bias entries plus ``per_tensor`` random entries of every other tensor.

    Embedding samples are drawn from rows the batch actually touches.
    """
    names = PARAM_NAMES if names is None else names
    picks = []
    for name in names:
        if name not in params:
            continue
        arr = params[name]
        if arr.ndim == 1:
            picks.extend((name, (j,)) for j in range(arr.shape[0]))
        elif name == "embedding":
            rows = sorted(set(int(r) for r in touched_rows))
            for _ in range(per_tensor):
                picks.append((name, (rows[rng.randbelow(len(rows))], rng.randbelow(arr.shape[1]))))
        else:
            for _ in range(per_tensor):
                picks.append((name, (rng.randbelow(arr.shape[0]), rng.randbelow(arr.shape[1]))))
    return picks


def check_gradients(loss_fn, params, analytic, picks, eps: float) -> float:
    """Max relative error over ``picks``; ``params`` is perturbed in its own dtype."""
    work = {k: np.array(v, dtype=EXTENDED) for k, v in params.items()}
    worst = 0.0
    for name, index in picks:
        n = numeric_grad(loss_fn, work, name, index, eps)
        worst = max(worst, relative_error(float(analytic[name][index]), n))
    return worst


def grad_check(params, config: ModelConfig, batch, eps: float = 1e-5, *, per_tensor: int = 20,
               seed: int = 0, names=None, grads=None) -> float:
    """Max relative error between backward() and central differences.

    ``batch`` is ``(ids, targets)``. The numeric side runs the reference loop
    in extended precision so round-off does not swamp tiny gradient entries.
    Pass ``grads`` to audit a gradient from elsewhere (e.g. a deliberately
    corrupted one). ``names=()`` checks nothing and returns 0.
    """
    if eps <= 0:
        raise ConfigError("eps must be positive")
    ids, target = batch
    ids = np.atleast_2d(np.asarray(ids))
    if ids.shape[0] == 0:
        raise ConfigError("grad_check needs a non-empty batch")
    if grads is None:
        _, cache = forward(ids, params, config)
        grads = backward(cache, target, params, config)
    picks = sample_indices(params, ids.reshape(-1), per_tensor, Rng64(seed), names)
    return check_gradients(lambda p: reference_loss(p, config, ids, target), params, grads, picks, eps)


# --------------------------------------------------------------------------
# weight files


def tensor_fields(params, names) -> list[tuple[str, str]]:
    return [(name, ser.array_to_json(params[name])) for name in names]


def vocab_fields(vocab: Vocab) -> list[tuple[str, str]]:
    return [("vocab", json.dumps({"tokens": list(vocab.id_to_token), "counts": list(vocab.counts),
                                  "max_size": vocab.max_size}, ensure_ascii=False))]


def model_document(params, config: ModelConfig, vocab: Vocab | None = None) -> str:
    fields = [("format_version", str(ser.FORMAT_VERSION)), ("config", json.dumps(config.to_header()))]
    fields += tensor_fields(params, PARAM_NAMES)
    if vocab is not None:
        fields += vocab_fields(vocab)
    return ser.object_to_json(fields) + "\n"


def save_weights(params, config: ModelConfig, path, vocab: Vocab | None = None) -> None:
    """Write the self-describing JSON weight file (optionally carrying the vocab)."""
    Path(path).write_text(model_document(params, config, vocab), encoding="utf-8")


def check_version(doc: dict) -> None:
    if "format_version" not in doc:
        raise MalformedWeightsError("missing format_version")
    version = doc["format_version"]
    if version != ser.FORMAT_VERSION:
        raise WeightsVersionError(f"unsupported format_version {version!r}, expected {ser.FORMAT_VERSION}")


def read_tensors(doc: dict, shapes: dict[str, tuple[int, ...]], where: str = "") -> dict[str, np.ndarray]:
    params = {}
    for name, shape in shapes.items():
        if name not in doc:
            raise MalformedWeightsError(f"{where}missing tensor {name!r}")
        try:
            arr = np.asarray(doc[name], dtype=np.float64)
        except (TypeError, ValueError):
            raise MalformedWeightsError(f"{where}tensor {name!r} is not a numeric array") from None
        if arr.shape != shape:
            raise WeightsShapeError(f"{where}tensor {name!r} has shape {arr.shape}, header implies {shape}")
        params[name] = arr
    return params


def read_vocab(doc: dict) -> Vocab | None:
    raw = doc.get("vocab")
    if raw is None:
        return None
    try:
        counts = tuple(int(c) for c in raw["counts"])
        return Vocab(tuple(raw["tokens"]), counts, int(raw["max_size"]))
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise MalformedWeightsError(f"bad embedded vocabulary: {exc}") from None


def parse_model_config(raw) -> ModelConfig:
    try:
        return ModelConfig(
            vocab_size=ser.as_int(raw["V"], "V"),
            embed_dim=ser.as_int(raw["d"], "d"),
            hidden=ser.as_int(raw["h"], "h"),
            seq_len=ser.as_int(raw["L"], "L"),
            head=raw["head"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedWeightsError(f"bad config header: {exc}") from None


class WeightsFile(NamedTuple):
    params: dict
    config: ModelConfig
    vocab: Vocab | None


def read_weights(path) -> WeightsFile:
    doc = ser.parse_document(Path(path).read_text(encoding="utf-8"))
    check_version(doc)
    if "config" not in doc:
        raise MalformedWeightsError("missing config")
    config = parse_model_config(doc["config"])
    params = read_tensors(doc, param_shapes(config))
    return WeightsFile(params, config, read_vocab(doc))


def load_weights(path):
    """Load ``(params, config)``; dimensions come from the file header."""
    wf = read_weights(path)
    return wf.params, wf.config


def config_dict(config: ModelConfig) -> dict:
    return asdict(config)
