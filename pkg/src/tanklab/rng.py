"""Deterministic pseudo-random numbers (SplitMix64).

Every random draw in the workbench flows through this module so that a run is
a pure function of its integer seed: same seed, same bytes, on any platform.
The generator state is a single 64-bit integer; `uniform01` is the pure
transition function, `SplitMix64` the convenience wrapper used everywhere else.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0x5851F42D4C957F2D

_TWO53_INV = 2.0 ** -53

# RngState is just the 64-bit integer state.
RngState = int


def mix64(z: int) -> int:
    """SplitMix64 output function: avalanche a 64-bit state into an output word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def next_state(state: RngState) -> RngState:
    return (state + GOLDEN) & MASK64


def uniform01(state: RngState) -> tuple[RngState, float]:
    """Advance the state once and return (new_state, u) with u in [0, 1).

    Pure function of `state`; the top 53 bits of the mixed word are scaled
    by 2**-53, so every representable result lies in [0, 1).
    """
    s = next_state(state)
    return s, (mix64(s) >> 11) * _TWO53_INV


def fnv1a64(text: str) -> int:
    """FNV-1a hash of a string, used for stable stream labels."""
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def derive_seed(seed: int, *tags: int | str) -> int:
    """Derive an independent child seed from `seed` and a label path.

    Labels may be ints or strings; strings are hashed with FNV-1a so the
    derivation never depends on Python's randomized `hash()`.
    """
    h = mix64((seed ^ _STREAM_SALT) & MASK64)
    for tag in tags:
        t = fnv1a64(tag) if isinstance(tag, str) else (tag & MASK64)
        h = mix64((h + GOLDEN) ^ t)
    return h


class SplitMix64:
    """Stateful wrapper over the pure SplitMix64 step, with vectorized draws.

    Scalar and vectorized paths produce the same stream: `uniforms(n)`
    consumes exactly n states, `normals(n)` consumes 2*ceil(n/2).
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def u64(self) -> int:
        self.state = next_state(self.state)
        return mix64(self.state)

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return (self.u64() >> 11) * _TWO53_INV

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles in [0, 1), bit-identical to n successive `uniform()` calls."""
        if n <= 0:
            return np.empty(0, dtype=np.float64)
        idx = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self.state) + idx * np.uint64(GOLDEN)
        self.state = (self.state + n * GOLDEN) & MASK64
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) * _TWO53_INV

    def normals(self, n: int) -> np.ndarray:
        """n standard normal doubles via Box-Muller on pairs of uniforms."""
        if n <= 0:
            return np.empty(0, dtype=np.float64)
        m = (n + 1) // 2
        u = self.uniforms(2 * m)
        # 1-u is in (0, 1], keeping the log argument strictly positive
        r = np.sqrt(-2.0 * np.log1p(-u[:m]))
        theta = (2.0 * math.pi) * u[m:]
        out = np.empty(2 * m, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def normal(self) -> float:
        return float(self.normals(1)[0])

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randint upper bound must be positive")
        return int(self.uniform() * n)

    def spawn(self, *tags: int | str) -> "SplitMix64":
        """Child generator on an independent stream; does not advance self."""
        return SplitMix64(derive_seed(self.state, *tags))
