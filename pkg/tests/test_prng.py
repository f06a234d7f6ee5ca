import itertools

import numpy as np
from numba import njit

from physmem.prng import SplitMix64, derive_seed, init_elements, next64, stream

# Published SplitMix64 outputs for seed 1234567.
REFERENCE_1234567 = [
    6457827717110365317,
    3203168211198807973,
    9817491932198370423,
    4593380528125082431,
    16408922859458223821,
]

# Recorded once from this implementation; guards against silent drift.
GOLDEN_XOR_5EED_1M = 4309834485487223392
GOLDEN_XOR_42_4097 = 17111131755507720897


def test_scalar_reference_values():
    assert list(itertools.islice(SplitMix64(1234567), 5)) == REFERENCE_1234567


def test_vector_matches_scalar():
    assert stream(1234567, 5).tolist() == REFERENCE_1234567
    scalar = list(itertools.islice(SplitMix64(99), 3000))
    assert stream(99, 3000).tolist() == scalar
    assert stream(99, 1000, start=2000).tolist() == scalar[2000:]


@njit
def _jit_stream(seed, n):
    out = np.empty(n, dtype=np.uint64)
    s = np.uint64(seed)
    for k in range(n):
        s, out[k] = next64(s)
    return out


def test_compiled_matches_vector():
    assert np.array_equal(_jit_stream(777, 5000), stream(777, 5000))


def test_chunk_boundaries():
    a = stream(5, (1 << 20) + 17)
    assert np.array_equal(a[(1 << 20) - 3 :], stream(5, 20, start=(1 << 20) - 3))


def test_deterministic_and_seed_sensitive():
    assert np.array_equal(stream(11, 100), stream(11, 100))
    a, b = stream(11, 10), stream(12, 10)
    assert (a != b).all()
    assert derive_seed(11, 1) != derive_seed(11, 2) != 11


def test_init_elements_truncates():
    full = stream(3, 50)
    assert np.array_equal(init_elements(3, 50, np.uint8), (full & 0xFF).astype(np.uint8))


def test_golden_xor():
    assert int(np.bitwise_xor.reduce(stream(0x5EED, 1_000_000))) == GOLDEN_XOR_5EED_1M
    assert int(np.bitwise_xor.reduce(stream(42, 4097))) == GOLDEN_XOR_42_4097
