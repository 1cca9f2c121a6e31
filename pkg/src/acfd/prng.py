"""Deterministic 64-bit PRNG (splitmix64).

Every source of randomness in the toolkit (synthesis, weight init,
shuffling) draws from this generator so results are bit-reproducible
across runs and platforms.  The state advances by a fixed increment per
draw, which makes block generation vectorizable: the i-th output is a
pure function of seed and i.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 output function on a uint64 array (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def mix64(value: int) -> int:
    """Scalar splitmix64 finalizer; bijective on 64-bit integers."""
    return int(_mix(np.uint64(value & _MASK)))


def combine_seed(seed: int, index: int) -> int:
    """Derive an independent child seed, e.g. per clip or per epoch."""
    return mix64((seed + (index + 1) * _GAMMA) & _MASK)


class SplitMix64:
    """Sequential splitmix64 stream with vectorized block draws."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & _MASK)
        self._count = 0

    def u64(self, n: int) -> np.ndarray:
        """Next n raw 64-bit outputs."""
        idx = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            return _mix(self._seed + idx * np.uint64(_GAMMA))

    def next_u64(self) -> int:
        return int(self.u64(1)[0])

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles in (0, 1], one draw each."""
        return ((self.u64(n) >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * float(self.uniforms(1)[0])

    def gaussians(self, n: int) -> np.ndarray:
        """n standard normals via Box-Muller on consecutive uniform pairs."""
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        r = np.sqrt(-2.0 * np.log(u[0::2]))
        theta = 2.0 * np.pi * u[1::2]
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n]

    def exponential(self, rate: float) -> float:
        """One exponential gap (inverse CDF), mean 1/rate."""
        return -math.log(float(self.uniforms(1)[0])) / rate

    def randint(self, bound: int) -> int:
        """Integer in [0, bound) by modular reduction (bound << 2^64)."""
        return self.next_u64() % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]
