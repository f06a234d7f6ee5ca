import random
import threading

import numpy as np
import pytest

from physmem import BlockPool, ConfigError, OutOfBlocksError, PoolConfig, UsageError
from oracles import ShadowPool


@pytest.mark.parametrize("block_size", [12 * 1024, 2048, 0, -4096, 3 << 20, 1 << 31])
def test_bad_block_size(block_size):
    with pytest.raises(ConfigError):
        PoolConfig(block_size=block_size, capacity_blocks=8)


def test_bad_capacity():
    with pytest.raises(ConfigError):
        PoolConfig(capacity_blocks=0)


def test_default_shape():
    pool = BlockPool(PoolConfig(32 * 1024, 1024))
    assert pool.blocks_free == 1024
    assert pool.block_size == 32768
    assert pool.arena.nbytes == 32 * 1024 * 1024


def test_single_block_pool():
    pool = BlockPool(PoolConfig(4096, 1))
    pool.acquire()
    with pytest.raises(OutOfBlocksError):
        pool.acquire()


def test_for_bytes_rounds_up():
    assert PoolConfig.for_bytes(1, 4096).capacity_blocks == 1
    assert PoolConfig.for_bytes(4097, 4096).capacity_blocks == 2


def test_two_distinct_then_exhausted():
    pool = BlockPool(PoolConfig(4096, 2))
    a, b = pool.acquire(), pool.acquire()
    assert a != b
    assert abs(pool.address(a) - pool.address(b)) >= 4096
    with pytest.raises(OutOfBlocksError):
        pool.acquire()


def test_round_trip_and_double_release():
    pool = BlockPool(PoolConfig(4096, 4))
    h = pool.acquire()
    pool.release(h)
    assert pool.blocks_live == 0
    with pytest.raises(UsageError):
        pool.release(h)


def test_foreign_handle_rejected():
    p, q = BlockPool(PoolConfig(4096, 2)), BlockPool(PoolConfig(4096, 2))
    h = q.acquire()
    with pytest.raises(UsageError):
        p.release(h)
    with pytest.raises(UsageError):
        p.span(h)


@pytest.mark.parametrize("block_size", [4096, 32768, 1 << 20])
def test_spans_aligned(block_size):
    pool = BlockPool(PoolConfig(block_size, 3))
    for h in pool.acquire_many(3):
        assert pool.address(h) % block_size == 0
        span = pool.span(h)
        assert span.nbytes == block_size
        assert span.ctypes.data == pool.address(h)


def test_reused_block_is_zeroed():
    pool = BlockPool(PoolConfig(4096, 1))
    h = pool.acquire()
    pool.span(h)[:] = 0xAB
    pool.release(h)
    assert not pool.span(pool.acquire()).any()


def test_zeroing_can_be_disabled():
    pool = BlockPool(PoolConfig(4096, 1, zero_on_acquire=False))
    h = pool.acquire()
    pool.span(h)[:] = 7
    pool.release(h)
    assert (pool.span(pool.acquire()) == 7).all()


def test_free_list_is_lifo():
    pool = BlockPool(PoolConfig(4096, 8))
    hs = pool.acquire_many(4)
    pool.release(hs[1])
    pool.release(hs[3])
    assert pool.acquire() == hs[3]
    assert pool.acquire() == hs[1]


def test_acquire_many_is_all_or_nothing():
    pool = BlockPool(PoolConfig(4096, 4))
    pool.acquire()
    with pytest.raises(OutOfBlocksError):
        pool.acquire_many(4)
    assert pool.blocks_live == 1


def test_stats():
    pool = BlockPool(PoolConfig(4096, 8))
    s = pool.stats()
    assert (s.blocks_live, s.acquires, s.peak_live, s.blocks_total) == (0, 0, 0, 8)
    hs = [pool.acquire() for _ in range(5)]
    s = pool.stats()
    assert (s.blocks_live, s.peak_live) == (5, 5)
    for h in hs[:3]:
        pool.release(h)
    s = pool.stats()
    assert (s.blocks_live, s.acquires, s.releases, s.peak_live) == (2, 5, 3, 5)


def test_random_trace_matches_shadow_interval_set():
    rng = random.Random(20240611)
    cap, bs = 64, 4096
    pool = BlockPool(PoolConfig(bs, cap))
    shadow = ShadowPool(cap, bs)
    live = []
    for _ in range(100_000):
        if live and (len(live) == cap or rng.random() < 0.45):
            h = live.pop(rng.randrange(len(live)))
            shadow.on_release(pool.address(h))
            pool.release(h)
        else:
            h = pool.acquire()
            shadow.on_acquire(pool.address(h))
            live.append(h)
        assert pool.blocks_live == shadow.count
    s = pool.stats()
    assert (s.blocks_live, s.acquires, s.releases, s.peak_live) == (
        shadow.count, shadow.acquires, shadow.releases, shadow.peak,
    )
    assert s.blocks_live <= s.peak_live <= s.blocks_total


def test_concurrent_acquire_release():
    pool = BlockPool(PoolConfig(4096, 64))
    seen = [[] for _ in range(4)]

    def worker(k):
        for _ in range(2000):
            h = pool.acquire()
            seen[k].append(h.index)
            pool.span(h)[0] = k
            assert pool.span(h)[0] == k
            pool.release(h)

    threads = [threading.Thread(target=worker, args=(k,)) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    s = pool.stats()
    assert s.blocks_live == 0
    assert s.acquires == s.releases == 8000


def test_views_alias_the_arena():
    pool = BlockPool(PoolConfig(4096, 2))
    h = pool.acquire()
    pool.view(np.uint32)[h.index * 1024] = 0xDEADBEEF
    assert pool.memview("I")[h.index * 1024] == 0xDEADBEEF
    assert pool.span(h)[:4].tobytes() == (0xDEADBEEF).to_bytes(4, "little")
