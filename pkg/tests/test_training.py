import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lstmsent.data import synth_corpus, to_arrays
from lstmsent.errors import ConfigError
from lstmsent.model import ModelConfig, init_params, loss
from lstmsent.numerics import Rng64
from lstmsent.textproc import build_vocab, clean_text, tokenize
from lstmsent.training import (
    AdamState,
    History,
    TrainConfig,
    adam_step,
    clip_by_global_norm,
    evaluate,
    export_curves,
    global_norm,
    read_curves,
    split_dataset,
    train,
)

from conftest import random_batch


# ---------------------------------------------------------------- split


def test_split_25000_sizes():
    train_part, test_part = split_dataset(list(range(25_000)), 0.7, seed=1)
    assert (len(train_part), len(test_part)) == (17_500, 7_500)


def test_split_floor_rule():
    a, b = split_dataset(list(range(10)), 0.7, 3)
    assert (len(a), len(b)) == (7, 3)


def test_split_deterministic():
    data = list(range(50))
    assert split_dataset(data, 0.7, 8) == split_dataset(data, 0.7, 8)
    assert split_dataset(data, 0.7, 8) != split_dataset(data, 0.7, 9)


def test_split_empty_rejected():
    with pytest.raises(ConfigError):
        split_dataset([], 0.7, 0)


@given(st.integers(1, 400), st.floats(0.01, 0.99), st.integers(0, 2**40))
def test_split_partition(n, frac, seed):
    data = list(range(n))
    a, b = split_dataset(data, frac, seed)
    assert len(a) == math.floor(n * frac)
    assert len(b) == n - len(a)
    assert sorted(a + b) == data


# ---------------------------------------------------------------- loss


def test_loss_closed_forms():
    assert loss(0.5, 1) == pytest.approx(math.log(2), abs=1e-12)
    assert loss([[1.0, 0.0, 0.0]], [0], "softmax") == pytest.approx(0.0, abs=1e-11)
    expected = -math.log(1 - 0.1368)
    assert loss(0.1368, 0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.14711, abs=5e-6)


@given(st.floats(0, 1), st.integers(0, 1))
def test_loss_non_negative(p, y):
    assert loss(p, y) >= 0


def test_loss_clamps_extremes():
    assert math.isfinite(loss(0.0, 1))
    assert loss(1.0, 1) == pytest.approx(0.0, abs=1e-11)


# ---------------------------------------------------------------- adam


def scalar_params(value):
    return {"w": np.array([value])}


def test_adam_zero_gradient_is_noop():
    p = scalar_params(0.3)
    state = AdamState.zeros_like(p)
    adam_step(p, {"w": np.zeros(1)}, state, TrainConfig())
    assert p["w"][0] == 0.3
    assert state.t == 1


def test_adam_first_step_moves_by_learning_rate():
    p = scalar_params(1.0)
    adam_step(p, {"w": np.array([0.37])}, AdamState.zeros_like(p), TrainConfig(learning_rate=0.01))
    assert p["w"][0] == pytest.approx(1.0 - 0.01, abs=1e-9)


def test_adam_two_steps_by_hand():
    lr, b1, b2, eps = 0.001, 0.9, 0.999, 1e-8
    w, m, v = 0.5, 0.0, 0.0
    for t in (1, 2):
        m = b1 * m + (1 - b1) * 1.0
        v = b2 * v + (1 - b2) * 1.0
        w -= lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)
    p = scalar_params(0.5)
    state = AdamState.zeros_like(p)
    for _ in range(2):
        adam_step(p, {"w": np.array([1.0])}, state, TrainConfig())
    assert abs(p["w"][0] - w) < 1e-12
    assert state.t == 2


def test_adam_shape_mismatch():
    p = scalar_params(0.0)
    with pytest.raises(ValueError):
        adam_step(p, {"w": np.zeros(2)}, AdamState.zeros_like(p), TrainConfig())


@settings(max_examples=50)
@given(st.integers(0, 2**32), st.floats(0.01, 100), st.floats(0.1, 10))
def test_clipping_bounds_norm(seed, scale, clip):
    rng = Rng64(seed)
    grads = {"a": rng.uniform_array(-1, 1, (3, 4)) * scale, "b": rng.uniform_array(-1, 1, 5) * scale}
    clipped, norm = clip_by_global_norm(grads, clip)
    assert norm == pytest.approx(global_norm(grads))
    assert global_norm(clipped) <= clip + 1e-9
    if norm <= clip:
        assert clipped is grads


# ---------------------------------------------------------------- train / evaluate


def synth_arrays(n, seed, seq_len=24, shares=(0.5, 0.0, 0.5)):
    ds = synth_corpus(seed, n, shares)
    vocab = build_vocab([tokenize(clean_text(t)) for t in ds.texts], 20_000)
    return ds, vocab, to_arrays(ds, vocab, seq_len)


def test_train_history_length_and_determinism(tiny_config):
    ids, y = random_batch(tiny_config, 20, 4)
    cfg = TrainConfig(epochs=3, batch_size=4, seed=5)
    params = init_params(tiny_config, 0)
    p1, h1 = train(params, tiny_config, ids, y, cfg)
    p2, h2 = train(params, tiny_config, ids, y, cfg)
    assert len(h1) == 3
    assert h1.rows() == h2.rows()
    assert all(p1[k].tobytes() == p2[k].tobytes() for k in p1)
    assert not np.array_equal(p1["U_i"], params["U_i"])


def test_train_rejects_label_head_mismatch(tiny_config):
    ids, y = random_batch(tiny_config, 6, 4)
    y[4] = 2
    with pytest.raises(ConfigError, match="record 4"):
        train(init_params(tiny_config, 0), tiny_config, ids, y, TrainConfig(epochs=1))


def test_evaluate_all_correct(tiny_config):
    params = init_params(tiny_config, 0)
    params["dense_w"][:] = 0
    params["dense_b"][:] = 10.0
    ids, _ = random_batch(tiny_config, 5, 1)
    _, acc = evaluate(params, tiny_config, ids, np.ones(5, dtype=int))
    assert acc == 1.0


def test_evaluate_tie_goes_negative(tiny_config):
    params = init_params(tiny_config, 0)
    params["dense_w"][:] = 0
    ids, _ = random_batch(tiny_config, 8, 1)
    y = np.array([1, 0, 1, 0, 0, 1, 0, 0])
    loss_value, acc = evaluate(params, tiny_config, ids, y)
    assert acc == 5 / 8
    assert loss_value == pytest.approx(math.log(2))


def test_evaluate_empty_rejected(tiny_config):
    with pytest.raises(ConfigError):
        evaluate(init_params(tiny_config, 0), tiny_config, np.zeros((0, 6), dtype=int), [])


@pytest.mark.slow
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_overfit_small_separable_set(seed):
    _, vocab, (X, y) = synth_arrays(32, 100 + seed)
    cfg = ModelConfig(len(vocab), 32, 100, 24)
    _, hist = train(init_params(cfg, seed), cfg, X, y, TrainConfig(epochs=300, seed=seed), validation=(X, y))
    assert hist.train_acc[-1] == 1.0
    assert hist.train_loss[-1] < 0.05


# ---------------------------------------------------------------- curves


def make_history(n):
    h = History()
    for e in range(n):
        h.append(0.7 / (e + 1), 0.5 + e / 10, 0.8 / (e + 1), 0.45 + e / 10)
    return h


def test_curves_csv(tmp_path):
    path = tmp_path / "curves.csv"
    hist = make_history(3)
    export_curves(hist, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    assert lines[0] == "epoch,train_loss,train_acc,val_loss,val_acc"
    assert [int(line.split(",")[0]) for line in lines[1:]] == [1, 2, 3]
    assert lines[1].split(",")[1] == "0.700000"
    back = read_curves(path)
    np.testing.assert_allclose(np.array(back.rows()), np.array(hist.rows()), atol=1e-6, rtol=0)


def test_curves_empty_history_rejected(tmp_path):
    with pytest.raises(ConfigError):
        export_curves(History(), tmp_path / "x.csv")


def test_curves_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        export_curves(make_history(1), tmp_path / "missing" / "x.csv")
