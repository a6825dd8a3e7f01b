"""Small dense numerics: checked matmul, activations and a splitmix64 generator.

Matrices are plain 2-D ``float64`` numpy arrays. Everything here is pure except
:class:`Rng64`, whose state advances on every draw.
"""

from __future__ import annotations

import numpy as np

from .errors import RangeError, ShapeError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / (1 << 53)


def matmul(a, b):
    """Matrix product with an explicit shape check.

    Works for 1-D row vectors on the left as well (``x @ U`` style).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def identity(n):
    return np.eye(n, dtype=np.float64)


def sigmoid(x):
    """Logistic function 1 / (1 + exp(-x)), evaluated without overflow."""
    arr = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(arr))
    out = np.where(arr >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def tanh_act(x):
    out = np.tanh(np.asarray(x, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


def softmax(v, axis=-1):
    """Max-subtracted softmax along ``axis``."""
    v = np.asarray(v, dtype=np.float64)
    z = v - v.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(v, axis=-1):
    v = np.asarray(v, dtype=np.float64)
    z = v - v.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def _mix(z):
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


class Rng64:
    """splitmix64 generator.

    The k-th output only depends on ``seed + k * gamma``, so bulk draws are
    vectorised with wrapping ``uint64`` arithmetic and stay bit-identical to
    the scalar path.
    """

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        return _mix(self.state)

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform(self, lo: float, hi: float) -> float:
        if not lo < hi:
            raise RangeError(f"empty range [{lo}, {hi})")
        u = self.random()
        value = lo + (hi - lo) * u
        # rounding can land exactly on hi for tiny ranges
        return value if value < hi else float(np.nextafter(hi, lo))

    def random_array(self, n: int) -> np.ndarray:
        if n <= 0:
            return np.zeros(0, dtype=np.float64)
        steps = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GAMMA)
        z = steps + np.uint64(self.state)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * _GAMMA) & _MASK64
        return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def uniform_array(self, lo: float, hi: float, shape) -> np.ndarray:
        if not lo < hi:
            raise RangeError(f"empty range [{lo}, {hi})")
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        n = int(np.prod(shape)) if shape else 1
        out = lo + (hi - lo) * self.random_array(n)
        out = np.where(out < hi, out, np.nextafter(hi, lo))
        return out.reshape(shape)

    def randbelow(self, n: int) -> int:
        """Integer in [0, n) (multiply-shift, negligible bias for small n)."""
        if n <= 0:
            raise RangeError(f"randbelow needs n >= 1, got {n}")
        return (self.next_u64() * n) >> 64

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates shuffle of range(n)."""
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randbelow(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx


def rng_uniform(rng: Rng64, lo: float, hi: float) -> float:
    return rng.uniform(lo, hi)
