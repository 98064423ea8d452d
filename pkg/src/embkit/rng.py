"""Deterministic 64-bit PRNG (splitmix64) used wherever randomness is needed.

Data splits, parameter initialization and the training kernels all draw from
this generator instead of numpy's global state, so a fixed seed produces the
same stream on every platform and numpy version.  The compiled kernels embed
the same step function and therefore consume identical streams.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """One splitmix64 output step applied to ``x`` (stateless finalizer)."""
    z = (x + _GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *salts: int) -> int:
    """Deterministically derive an independent stream seed from ``seed``.

    Used to give each (epoch, thread, purpose) its own stream without any
    correlation between them.
    """
    h = mix64(seed & MASK64)
    for s in salts:
        h = mix64(h ^ mix64(s & MASK64))
    return h


class SplitMix64:
    """Sequential splitmix64 generator with a tiny convenience API."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform_range(self, low: float, high: float) -> float:
        return low + (high - low) * self.uniform()

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def shuffle(self, seq) -> None:
        """In-place Fisher-Yates shuffle of a list or 1-d numpy array."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def uniform_block(self, n: int):
        """Vectorized batch of ``n`` uniforms, identical to n uniform() calls.

        splitmix64 outputs are a pure function of state0 + i * gamma, so the
        whole block can be produced with numpy's wrapping uint64 arithmetic
        while advancing the state exactly as the scalar path would.
        """
        import numpy as np

        idx = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self.state) + np.uint64(_GAMMA) * idx
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z ^= z >> np.uint64(31)
        self.state = (self.state + n * _GAMMA) & MASK64
        return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)
