"""Seeded randomness and exact sampling from rational distributions.

Every random stream is a :class:`random.Random` (MT19937) seeded with an
integer derived from a root seed and a tuple of stream keys::

    derive_seed(seed, *keys) = int(blake2b(repr((seed,) + keys), 8 bytes), "big")

Trials of an experiment seeded with ``s`` are split into blocks of
``TRIAL_BLOCK``; trial ``i`` draws, in trial order, from the stream
``make_rng(s, i // TRIAL_BLOCK)``. Blocks can therefore run concurrently
and still reproduce the sequential result. Sweeps derive one experiment
seed per (instance, decoder) with ``derive_seed(s, i, j)``. Draws only use
``randrange`` on integers, so sampling never touches floating point.
"""

from __future__ import annotations

import hashlib
import random
from bisect import bisect_right
from fractions import Fraction
from itertools import accumulate
from math import lcm
from typing import Sequence


def derive_seed(seed: int, *keys: int | str) -> int:
    digest = hashlib.blake2b(repr((seed,) + keys).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def make_rng(seed: int, *keys: int | str) -> random.Random:
    return random.Random(derive_seed(seed, *keys))


TRIAL_BLOCK = 1024


def trial_rngs(seed: int, num_trials: int):
    """Yield the generator each trial must draw from (shared within a block)."""
    rng = None
    for i in range(num_trials):
        if i % TRIAL_BLOCK == 0:
            rng = make_rng(seed, i // TRIAL_BLOCK)
        yield rng


class RowSampler:
    """Exact categorical sampler over a row of nonnegative rationals.

    The row does not need to be normalized; weights are scaled to integers
    over their common denominator and a uniform integer picks the bucket.
    """

    __slots__ = ("_cum", "_total")

    def __init__(self, weights: Sequence[Fraction]):
        den = lcm(*(Fraction(w).denominator for w in weights)) if weights else 1
        ints = [int(Fraction(w) * den) for w in weights]
        if any(n < 0 for n in ints):
            raise ValueError("negative weight in row")
        self._cum = list(accumulate(ints))
        self._total = self._cum[-1] if self._cum else 0
        if self._total == 0:
            raise ValueError("row has zero total mass")

    def draw(self, rng: random.Random) -> int:
        return bisect_right(self._cum, rng.randrange(self._total))


def sample_index(rng: random.Random, weights: Sequence[Fraction]) -> int:
    return RowSampler(weights).draw(rng)
