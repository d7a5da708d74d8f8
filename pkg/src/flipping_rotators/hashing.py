"""64-bit avalanche hash used for lazy, order-independent sampling.

The finalizer is SplitMix64 (Steele, Lea & Flood).  The Python and numba
versions must agree bit for bit; ``tests/test_medium.py`` checks that.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def hash_key(seed: int, key: int) -> int:
    """Hash of an integer site/face key under ``seed`` (keys may be negative)."""
    return mix64((seed ^ key) & MASK64)


def derive_seed(master: int, index: int) -> int:
    return mix64((master & MASK64) ^ mix64(index & MASK64))


def threshold(prob: float) -> tuple[int, bool]:
    """``(floor(prob * 2**64), always)``; ``always`` is set for prob == 1.

    An orientation is "right" when ``hash < threshold`` (or ``always``).
    """
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability out of range: {prob!r}")
    if prob == 1.0:
        return 0, True
    return int(Fraction(prob) * (1 << 64)), False


_GOLDEN_U = np.uint64(GOLDEN)
_M1_U = np.uint64(_M1)
_M2_U = np.uint64(_M2)


@njit(cache=True, inline="always")
def nb_mix64(x):
    z = x + _GOLDEN_U
    z = (z ^ (z >> np.uint64(30))) * _M1_U
    z = (z ^ (z >> np.uint64(27))) * _M2_U
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def nb_hash_key(seed, key):
    # seed: uint64, key: int64 (two's complement reinterpretation)
    return nb_mix64(seed ^ np.uint64(key & np.int64(-1)))
