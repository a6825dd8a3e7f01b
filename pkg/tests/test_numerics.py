import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lstmsent.errors import RangeError, ShapeError
from lstmsent.numerics import Rng64, identity, matmul, rng_uniform, sigmoid, softmax, tanh_act


def splitmix64_reference(seed, n):
    """Textbook splitmix64 on Python ints."""
    mask = (1 << 64) - 1
    state, out = seed, []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out


def test_matmul_identity():
    m = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(matmul(identity(3), m), m)


def test_matmul_hand_product():
    np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[5], [6]]), [[17], [39]])


def test_matmul_zero_annihilates():
    out = matmul(np.zeros((2, 3)), np.arange(12.0).reshape(3, 4))
    np.testing.assert_array_equal(out, np.zeros((2, 4)))


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
        matmul(np.zeros((2, 3)), np.zeros((2, 2)))


def test_matmul_associative_on_random_triples():
    rng = Rng64(5)
    for _ in range(20):
        a, b, c = (rng.uniform_array(-1, 1, (4, 4)) for _ in range(3))
        np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), atol=1e-9, rtol=0)


def test_activation_fixed_points():
    assert sigmoid(0.0) == 0.5
    assert tanh_act(0.0) == 0.0
    np.testing.assert_array_equal(softmax([0.0, 0.0]), [0.5, 0.5])


def test_sigmoid_symmetry():
    for x in range(-10, 11):
        assert abs(sigmoid(x) + sigmoid(-x) - 1.0) < 1e-12


def test_sigmoid_matches_closed_form_and_survives_extremes():
    for x in (-30.0, -2.5, 0.3, 7.0):
        assert sigmoid(x) == pytest.approx(1 / (1 + math.exp(-x)), rel=1e-15)
    with np.errstate(over="raise", divide="raise", invalid="raise"):
        assert sigmoid(-1000.0) == 0.0
        assert sigmoid(1000.0) == 1.0


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12), st.floats(-100, 100))
def test_softmax_sums_to_one_and_is_shift_invariant(v, shift):
    p = softmax(v)
    assert abs(p.sum() - 1.0) < 1e-12
    np.testing.assert_allclose(softmax(np.asarray(v) + shift), p, atol=1e-12, rtol=0)


def test_rng_matches_textbook_splitmix64():
    rng = Rng64(1234567)
    assert [rng.next_u64() for _ in range(50)] == splitmix64_reference(1234567, 50)


def test_rng_known_first_output():
    # widely published splitmix64 value for seed 0
    assert Rng64(0).next_u64() == 0xE220A8397B1DCDAF


def test_rng_vectorised_draws_equal_scalar_draws():
    a, b = Rng64(99), Rng64(99)
    bulk = a.random_array(1000)
    single = np.array([b.random() for _ in range(1000)])
    np.testing.assert_array_equal(bulk, single)
    assert a.state == b.state


def test_rng_same_seed_same_sequence():
    a, b = Rng64(42), Rng64(42)
    assert [a.random() for _ in range(1000)] == [b.random() for _ in range(1000)]


def test_rng_first_three_draws_fixed():
    runs = []
    for _ in range(2):
        rng = Rng64(42)
        runs.append([rng_uniform(rng, 0.0, 1.0) for _ in range(3)])
    assert runs[0] == runs[1]
    assert runs[0] == [(x >> 11) * 2.0**-53 for x in splitmix64_reference(42, 3)]


def test_uniform_range_and_single_advance():
    rng = Rng64(7)
    before = rng.state
    x = rng.uniform(0.0, 1.0)
    assert 0.0 <= x < 1.0
    assert rng.state == (before + 0x9E3779B97F4A7C15) % 2**64
    for _ in range(1000):
        assert -3.0 <= rng.uniform(-3.0, 2.0) < 2.0


def test_uniform_rejects_empty_range():
    with pytest.raises(RangeError):
        Rng64(1).uniform(1.0, 1.0)
    with pytest.raises(RangeError):
        rng_uniform(Rng64(1), 2.0, 1.0)


def test_uniform_mean_band():
    rng = Rng64(2024)
    mean = np.mean([rng.uniform(0.0, 1.0) for _ in range(10_000)])
    assert 0.48 <= mean <= 0.52


def test_permutation_is_a_permutation():
    perm = Rng64(3).permutation(100)
    assert sorted(perm) == list(range(100))
    assert perm != list(range(100))
