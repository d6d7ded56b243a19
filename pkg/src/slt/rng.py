"""Portable SplitMix64 generator.

Every source of randomness in the package (parameter init, shuffling,
dropout masks, bootstrap resampling, synthetic data) draws from this one
generator so that a seed reproduces bit-identical results on any platform.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2**64, matching the scalar path
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """SplitMix64 pseudo-random generator with a 64-bit state."""

    def __init__(self, seed: int = 0):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return _mix(self.state)

    def next_u64_array(self, n: int) -> np.ndarray:
        """The next ``n`` outputs, identical to ``n`` calls of :meth:`next_u64`."""
        if n <= 0:
            return np.zeros(0, dtype=np.uint64)
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
            out = _mix_array(states)
        self.state = (self.state + n * GOLDEN_GAMMA) & MASK64
        return out

    def random(self, size=None):
        """Uniform doubles in [0, 1) built from the top 53 bits."""
        if size is None:
            return (self.next_u64() >> 11) * 2.0**-53
        shape = (size,) if isinstance(size, int) else tuple(size)
        n = math.prod(shape)
        u = self.next_u64_array(n) >> np.uint64(11)
        return (u.astype(np.float64) * 2.0**-53).reshape(shape)

    def randint(self, high: int, size=None):
        """Integers in [0, high)."""
        if high <= 0:
            raise ValueError("high must be positive")
        if size is None:
            return int(self.random() * high)
        return np.floor(self.random(size) * high).astype(np.int64)

    def normal(self, size, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """Box-Muller normals; consumes two uniforms per sample."""
        shape = (size,) if isinstance(size, int) else tuple(size)
        n = math.prod(shape)
        u = self.random(2 * n).reshape(2, n) if n else np.zeros((2, 0))
        r = np.sqrt(-2.0 * np.log1p(-u[0]))
        z = r * np.cos(2.0 * np.pi * u[1])
        return (mean + std * z).reshape(shape)

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return low + (high - low) * self.random(size)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.randint(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def choice(self, n: int, size: int, p: np.ndarray | None = None) -> np.ndarray:
        """Sample ``size`` indices from ``range(n)`` with replacement."""
        if p is None:
            return self.randint(n, size)
        cdf = np.cumsum(np.asarray(p, dtype=np.float64))
        cdf /= cdf[-1]
        idx = np.searchsorted(cdf, self.random(size), side="right")
        return np.minimum(idx, n - 1)

    def spawn(self, n: int) -> list["SplitMix64"]:
        """Independent substreams; substream i is seeded by output i of this stream."""
        return [SplitMix64(int(s)) for s in self.next_u64_array(n)]

    def getstate(self) -> int:
        return self.state

    def setstate(self, state: int) -> None:
        self.state = int(state) & MASK64
