"""Command-line front end.

Machine-readable results go to stdout as one JSON object per line; diagnostics
go to stderr. Exit codes: 0 ok, 1 usage, 2 data/config, 3 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import data as datamod
from .classify import LABELS, review_type_of, sentiment_of
from .errors import ConfigError, LstmSentError
from .lm_ensemble import (
    LmConfig,
    classify_batch,
    classify_by_min_error,
    ensemble_from_document,
    is_ensemble_document,
    save_ensemble,
    train_class_lms,
)
from .model import (
    ModelConfig,
    forward,
    grad_check,
    init_params,
    param_count,
    read_weights,
    save_weights,
)
from .numerics import Rng64
from .serialization import parse_document
from .textproc import DEFAULT_VOCAB_SIZE, Vocab, build_vocab, clean_text, encode, encode_texts, tokenize
from .training import TrainConfig, evaluate, export_curves, split_dataset, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3

MODEL_KEYS = ("vocab_size", "embed_dim", "hidden", "seq_len", "head")
TRAIN_KEYS = tuple(f.name for f in fields(TrainConfig))
PATH_KEYS = ("data", "vocab", "weights", "curves")
CONFIG_KEYS = frozenset(MODEL_KEYS + TRAIN_KEYS + PATH_KEYS)

GRADCHECK_CONFIG = ModelConfig(vocab_size=50, embed_dim=8, hidden=12, seq_len=6)
GRADCHECK_TOL = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def emit(obj) -> None:
    print(json.dumps(obj), flush=True)


def note(msg: str) -> None:
    print(msg, file=sys.stderr)


def read_config(path) -> dict:
    if path is None:
        return {}
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = sorted(set(raw) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    return raw


def resolve(args, model_defaults: dict) -> dict:
    """Config file values, then flags on top. Everything missing gets a default."""
    cfg = dict(model_defaults)
    cfg.update({f.name: f.default for f in fields(TrainConfig)})
    cfg.update(read_config(getattr(args, "config", None)))
    for key, flag in (("seed", "seed"), ("data", "data"), ("vocab", "vocab"),
                      ("weights", "out"), ("curves", "curves")):
        value = getattr(args, flag, None)
        if value is not None:
            cfg[key] = value
    return cfg


def train_config(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(**{k: cfg[k] for k in TRAIN_KEYS})
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def model_config(cfg: dict) -> ModelConfig:
    try:
        return ModelConfig(**{k: cfg[k] for k in MODEL_KEYS})
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def require(cfg: dict, *keys):
    missing = [k for k in keys if not cfg.get(k)]
    if missing:
        raise UsageError(f"missing required setting(s): {', '.join(missing)}")


def model_vocab(wf_vocab, vocab_path) -> Vocab:
    if vocab_path:
        return Vocab.load(vocab_path)
    if wf_vocab is None:
        raise ConfigError("model file carries no vocabulary; pass --vocab")
    return wf_vocab


# --------------------------------------------------------------------------
# subcommands


def cmd_build_vocab(args) -> int:
    ds = datamod.load_reviews(args.data)
    vocab = build_vocab((tokenize(clean_text(t)) for t in ds.texts), args.max_size)
    vocab.save(args.out)
    emit({"vocab_size": len(vocab), "max_size": vocab.max_size, "records": len(ds), "path": args.out})
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve(args, {k: getattr(ModelConfig, k) for k in MODEL_KEYS})
    require(cfg, "data", "vocab", "weights")
    emit({"config": cfg})
    mcfg, tcfg = model_config(cfg), train_config(cfg)
    vocab = Vocab.load(cfg["vocab"])
    if len(vocab) > mcfg.vocab_size:
        raise ConfigError(f"vocabulary has {len(vocab)} ids but vocab_size is {mcfg.vocab_size}")
    ds = datamod.load_reviews(cfg["data"])
    for line, msg in ds.errors:
        note(f"{cfg['data']}:{line}: skipped ({msg})")
    X, y = datamod.to_arrays(ds, vocab, mcfg.seq_len, mcfg.head)
    params, history = train(init_params(mcfg, tcfg.seed), mcfg, X, y, tcfg)
    save_weights(params, mcfg, cfg["weights"], vocab)
    if cfg.get("curves"):
        export_curves(history, cfg["curves"])
    emit({"epochs": len(history), "train_loss": history.train_loss[-1], "train_acc": history.train_acc[-1],
          "val_loss": history.val_loss[-1], "val_acc": history.val_acc[-1]})
    return EXIT_OK


def cmd_train_ensemble(args) -> int:
    defaults = {"embed_dim": LmConfig.embed_dim, "hidden": LmConfig.hidden, "seq_len": LmConfig.seq_len,
                "vocab_size": None}
    cfg = resolve(args, defaults)
    require(cfg, "data", "vocab", "weights")
    emit({"config": cfg})
    tcfg = train_config(cfg)
    vocab = Vocab.load(cfg["vocab"])
    lcfg = LmConfig(cfg["vocab_size"] or len(vocab), cfg["embed_dim"], cfg["hidden"], cfg["seq_len"])
    if len(vocab) > lcfg.vocab_size:
        raise ConfigError(f"vocabulary has {len(vocab)} ids but vocab_size is {lcfg.vocab_size}")
    ds = datamod.load_reviews(cfg["data"])
    train_recs, test_recs = split_dataset(ds.records, tcfg.train_frac, tcfg.seed)
    corpora = {}
    for lab in LABELS:
        texts = [r.text for r in train_recs if r.label == lab]
        if texts:
            corpora[lab] = encode_texts(texts, vocab, lcfg.seq_len)
    ensemble = train_class_lms(corpora, lcfg, tcfg, vocab)
    save_ensemble(ensemble, cfg["weights"])
    result = {"classes": [lab.value for lab in ensemble.labels], "train_size": len(train_recs),
              "test_size": len(test_recs)}
    usable = [r for r in test_recs if len(tokenize(clean_text(r.text))) >= 2]
    if usable:
        pred, _ = classify_batch(ensemble, encode_texts([r.text for r in usable], vocab, lcfg.seq_len))
        result["test_accuracy"] = float(np.mean([p == r.label for p, r in zip(pred, usable)]))
    emit(result)
    return EXIT_OK


def _load_model(path):
    doc = parse_document(Path(path).read_text(encoding="utf-8"))
    if is_ensemble_document(doc):
        return ensemble_from_document(doc)
    return read_weights(path)


def cmd_eval(args) -> int:
    model = _load_model(args.model)
    ds = datamod.load_reviews(args.data)
    vocab = model_vocab(model.vocab, args.vocab)
    if isinstance(model, tuple):
        mcfg = model.config
        X, y = datamod.to_arrays(ds, vocab, mcfg.seq_len, mcfg.head)
        loss_value, acc = evaluate(model.params, mcfg, X, y)
    else:
        recs = [r for r in ds.records if len(tokenize(clean_text(r.text))) >= 2 and r.label in model.lms]
        if not recs:
            raise ConfigError("no reviews with at least two tokens in a modelled class")
        X = encode_texts([r.text for r in recs], vocab, model.config.seq_len)
        pred, errors = classify_batch(model, X)
        idx = [model.labels.index(r.label) for r in recs]
        loss_value = float(np.mean(errors[np.arange(len(recs)), idx]))
        acc = float(np.mean([p == r.label for p, r in zip(pred, recs)]))
    emit({"loss": loss_value, "accuracy": acc})
    return EXIT_OK


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    vocab = model_vocab(model.vocab, args.vocab)
    tokens = tokenize(clean_text(args.text))
    if isinstance(model, tuple):
        mcfg = model.config
        out, _ = forward(encode(tokens, vocab, mcfg.seq_len), model.params, mcfg)
        prob = float(out) if mcfg.k == 1 else float(out[2])
        emit({"probability": prob, "sentiment": sentiment_of(out, mcfg.head).value,
              "review_type": review_type_of(prob).label})
    else:
        label, errors = classify_by_min_error(model, encode(tokens, vocab, model.config.seq_len))
        emit({"errors": {lab.value: e for lab, e in errors.items()}, "sentiment": label.value})
    return EXIT_OK


def gradcheck_run(seed: int, eps: float = 1e-5) -> float:
    """The tiny-config check: V=50, d=8, h=12, L=6, batch of 3."""
    cfg = GRADCHECK_CONFIG
    params = init_params(cfg, seed)
    rng = Rng64(seed ^ 0x5EED)
    ids = np.array([[rng.randbelow(cfg.vocab_size) for _ in range(cfg.seq_len)] for _ in range(3)])
    y = np.array([rng.randbelow(2) for _ in range(3)])
    return grad_check(params, cfg, (ids, y), eps, seed=seed)


def cmd_gradcheck(args) -> int:
    err = gradcheck_run(args.seed, args.eps)
    emit({"max_relative_error": err, "tolerance": GRADCHECK_TOL, "passed": err < GRADCHECK_TOL})
    return EXIT_OK if err < GRADCHECK_TOL else EXIT_DATA


def cmd_synth(args) -> int:
    try:
        shares = tuple(float(s) for s in args.shares.split(","))
    except ValueError:
        raise UsageError(f"--shares expects three comma-separated numbers, got {args.shares!r}") from None
    ds = datamod.synth_corpus(args.seed, args.n, shares)
    datamod.save_reviews_csv(ds, args.out)
    emit({"n": len(ds), "class_counts": {lab.value: c for lab, c in ds.class_counts.items()}, "path": args.out})
    return EXIT_OK


def cmd_params(args) -> int:
    cfg = resolve(args, {k: getattr(ModelConfig, k) for k in MODEL_KEYS})
    emit({"config": cfg})
    emit(param_count(model_config(cfg))._asdict())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lstmsent", description="LSTM review sentiment toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-vocab", help="build a frequency-ranked vocabulary file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-size", type=int, default=DEFAULT_VOCAB_SIZE)
    p.set_defaults(func=cmd_build_vocab)

    for name, func, helptext in (("train", cmd_train, "train the single LSTM classifier"),
                                 ("train-ensemble", cmd_train_ensemble, "train one language model per class")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--data")
        p.add_argument("--vocab")
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--curves")
        p.set_defaults(func=func)

    p = sub.add_parser("eval", help="loss and accuracy of a model on a labelled file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--vocab")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="score one review")
    p.add_argument("--model", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--vocab")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gradcheck", help="finite-difference check on a tiny model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth", help="write a synthetic labelled review CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--shares", default="0.3333333333333333,0.3333333333333333,0.3333333333333334",
                   help="negative,neutral,positive fractions")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("params", help="parameter count per layer")
    p.add_argument("--config")
    p.set_defaults(func=cmd_params)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        note(str(exc))
        note(parser.format_usage().rstrip())
        return EXIT_USAGE
    except (LstmSentError, ValueError) as exc:
        note(f"error: {exc}")
        return EXIT_DATA
    except OSError as exc:
        note(f"I/O error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
