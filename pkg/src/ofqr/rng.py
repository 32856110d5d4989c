"""SplitMix64 streams keyed by (master seed, sample id, purpose).

Every random draw in dataset generation and the sweeps comes from a stream
derived here, so results do not depend on worker count or iteration order.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

PURPOSES = {
    "payload": 0x7061796C6F616401,
    "noise": 0x6E6F697365000002,
    "pose": 0x706F736500000003,
    "shuffle": 0x73687566666C6504,
    "init": 0x696E697400000005,
}

ALPHANUMERIC = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"


def mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        limit = (1 << 64) - (1 << 64) % n
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n


def stream_seed(master_seed: int, sample_id: int, purpose: str) -> int:
    """Seed of the substream for one sample and purpose."""
    key = mix64((master_seed & MASK64) ^ PURPOSES[purpose])
    return mix64((key + (sample_id & MASK64) * GOLDEN) & MASK64)


def stream(master_seed: int, sample_id: int, purpose: str) -> SplitMix64:
    return SplitMix64(stream_seed(master_seed, sample_id, purpose))


def numpy_rng(master_seed: int, sample_id: int, purpose: str) -> np.random.Generator:
    """PCG64 generator seeded from a SplitMix64 substream (for bulk sampling)."""
    return np.random.Generator(np.random.PCG64(stream_seed(master_seed, sample_id, purpose)))


def random_payload(master_seed: int, sample_id: int, length: int = 10,
                   charset: str = ALPHANUMERIC) -> str:
    s = stream(master_seed, sample_id, "payload")
    return "".join(charset[s.below(len(charset))] for _ in range(length))
