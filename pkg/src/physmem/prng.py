"""SplitMix64 streams shared by every workload variant.

Output ``k`` (0-based) of the stream seeded with ``s`` is
``mix(s + (k + 1) * GAMMA)``, so any slice of the stream can be generated
independently and in bulk.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

_GAMMA = np.uint64(GAMMA)
_MIX1 = np.uint64(MIX1)
_MIX2 = np.uint64(MIX2)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)

_CHUNK = 1 << 20


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Scalar reference generator."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def __iter__(self):
        return self

    def __next__(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)


def stream(seed: int, n: int, start: int = 0) -> np.ndarray:
    """Outputs ``start .. start+n-1`` of the stream as ``uint64``."""
    out = np.empty(n, dtype=np.uint64)
    base = np.uint64(seed & MASK64)
    with np.errstate(over="ignore"):
        for lo in range(0, n, _CHUNK):
            hi = min(n, lo + _CHUNK)
            z = np.arange(start + lo + 1, start + hi + 1, dtype=np.uint64)
            z *= _GAMMA
            z += base
            z ^= z >> _S30
            z *= _MIX1
            z ^= z >> _S27
            z *= _MIX2
            z ^= z >> _S31
            out[lo:hi] = z
    return out


def init_elements(seed: int, n: int, dtype=np.uint32) -> np.ndarray:
    """Deterministic array contents: the stream truncated to ``dtype``'s width."""
    return stream(seed, n).astype(dtype, copy=False)


def derive_seed(seed: int, salt: int) -> int:
    """Independent sub-stream seed, e.g. for GUPS indices vs. table contents."""
    return mix64((seed ^ (salt * GAMMA)) & MASK64)


@njit(inline="always")
def next64(state):
    """Advance a ``uint64`` state; returns ``(new_state, output)``."""
    state = state + _GAMMA
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)
