from bisect import bisect_right
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Sequence, Tuple

import numpy as np


BIT_GENERATOR = "PCG64"
_MAX_EXACT_DENOMINATOR = 2 ** 62


@lru_cache(maxsize=4096)
def _thresholds(weights: Tuple[Fraction, ...]) -> Tuple[int, Tuple[int, ...]]:
    denominator = lcm(*(w.denominator for w in weights))
    cumulative = []
    total = 0
    for w in weights:
        total += w.numerator * (denominator // w.denominator)
        cumulative.append(total)
    return denominator, tuple(cumulative)


class RngStream():
    """Seedable, splittable random stream.

    The stream with seed `s` and key `(k1, ..., kn)` draws from
    `numpy.random.default_rng(SeedSequence([s, k1, ..., kn]))`. Replication `i`
    of an experiment seeded with `s` uses `RngStream(s).split(i)`, which is the
    whole replay contract together with the bit generator name.

    :param seed: non-negative root seed
    :param key: split path below the root
    """
    def __init__(self, seed: int, key: Tuple[int, ...] = ()) -> None:
        if seed < 0:
            raise ValueError("rng seed must be non-negative")
        self.seed = seed
        self.key = tuple(key)
        self.generator = np.random.default_rng(np.random.SeedSequence([seed, *self.key]))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self.key}, bit_generator={BIT_GENERATOR})"

    def split(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.key + (index,))

    def index(self, weights: Sequence[Fraction]) -> int:
        """Index drawn with probability proportional to exact rational weights"""
        denominator, cumulative = _thresholds(tuple(weights))
        if denominator <= _MAX_EXACT_DENOMINATOR:
            draw = int(self.generator.integers(0, cumulative[-1]))
        else:
            draw = int(self.generator.random() * cumulative[-1])
        return bisect_right(cumulative, draw)

    def uniform(self) -> float:
        return float(self.generator.random())
