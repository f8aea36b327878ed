"""Seedable xorshift64* generator.

Every stochastic routine in the package takes one of these explicitly, so a
run is bit-reproducible from its seed alone.

Algorithm (Vigna, "An experimental exploration of Marsaglia's xorshift
generators, scrambled", 2016)::

    x ^= x >> 12; x ^= x << 25; x ^= x >> 27
    return (x * 0x2545F4914F6CDD1D) mod 2**64

The 64-bit seed is passed through one round of splitmix64 to form the state,
so seed 0 is valid and nearby seeds give unrelated streams. Floats take the
top 53 bits of the output; integers below ``n`` use rejection sampling;
normals use the Marsaglia polar method.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Mix integer keys into ``seed`` to get an independent child seed."""
    s = splitmix64(seed & MASK64)
    for k in keys:
        s = splitmix64(s ^ (k & MASK64))
    return s


class Xorshift64Star:
    __slots__ = ("_state", "_spare")

    def __init__(self, seed: int = 0):
        state = splitmix64(int(seed) & MASK64)
        self._state = state or 0x9E3779B97F4A7C15
        self._spare: float | None = None

    @classmethod
    def derive(cls, seed: int, *keys: int) -> "Xorshift64Star":
        return cls(derive_seed(seed, *keys))

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self._state = x
        return (x * _MULT) & MASK64

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def integers(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = MASK64 - (MASK64 + 1) % n
        while True:
            r = self.next_u64()
            if r <= limit:
                return r % n

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        while True:
            u = 2.0 * self.random() - 1.0
            v = 2.0 * self.random() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        f = math.sqrt(-2.0 * math.log(s) / s)
        self._spare = v * f
        return u * f

    def random_array(self, size: int) -> np.ndarray:
        return np.fromiter((self.random() for _ in range(size)), dtype=np.float64, count=size)

    def integers_array(self, n: int, size: int) -> np.ndarray:
        return np.fromiter((self.integers(n) for _ in range(size)), dtype=np.int64, count=size)

    def normal_array(self, shape) -> np.ndarray:
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        count = int(np.prod(shape)) if shape else 1
        out = np.fromiter((self.normal() for _ in range(count)), dtype=np.float64, count=count)
        return out.reshape(shape)

    def uniform_array(self, low: float, high: float, shape) -> np.ndarray:
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        count = int(np.prod(shape)) if shape else 1
        return (low + (high - low) * self.random_array(count)).reshape(shape)
