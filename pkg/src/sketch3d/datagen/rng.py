"""
SplitMix64 Generator

State transition and output function:
    state <- state + 0x9E3779B97F4A7C15            (mod 2^64)
    z <- state
    z <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9      (mod 2^64)
    z <- (z ^ (z >> 27)) * 0x94D049BB133111EB      (mod 2^64)
    output z ^ (z >> 31)

The k-th output (k = 0, 1, ...) of a generator seeded with s depends only on
(s, k), so value_at(s, k) gives random access and sample i of a dataset can
be produced independently of every other sample.
"""

import math

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def value_at(seed: int, index: int) -> int:
    """Output number `index` of SplitMix64 seeded with `seed`"""
    return mix64((seed + (index + 1) * GOLDEN_GAMMA) & MASK64)


def derive_seed(seed: int, *indices: int) -> int:
    """Chain value_at over indices, e.g. derive_seed(train_seed, step, sample)"""
    for index in indices:
        seed = value_at(seed & MASK64, index)
    return seed


class SplitMix64:
    """Sequential SplitMix64 stream"""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision"""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_float()

    def below(self, n: int) -> int:
        """Integer in [0, n)"""
        return self.next_u64() % n

    def normal(self) -> float:
        """Standard normal draw (Box-Muller, one value per call)"""
        u1 = 1.0 - self.next_float()
        u2 = self.next_float()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


__all__ = ["MASK64", "GOLDEN_GAMMA", "mix64", "value_at", "derive_seed", "SplitMix64"]
