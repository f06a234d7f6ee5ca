"""Fixed-size block allocator over a single pre-reserved arena.

The arena is reserved once, aligned to the block size, and carved into
uniformly sized blocks. Blocks are the only unit of allocation: there is no
variable-size request and the pool never grows, so exhaustion surfaces as
:class:`OutOfBlocksError` and the caller picks the policy.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, OutOfBlocksError, UsageError

DEFAULT_BLOCK_SIZE = 32 * 1024
MIN_BLOCK_SIZE = 4096
MAX_BLOCK_SIZE = 1 << 30

_pool_ids = itertools.count(1)


@dataclass(frozen=True)
class PoolConfig:
    block_size: int = DEFAULT_BLOCK_SIZE
    capacity_blocks: int = 1024
    zero_on_acquire: bool = True

    def __post_init__(self):
        bs = self.block_size
        if not isinstance(bs, int) or bs <= 0 or bs & (bs - 1):
            raise ConfigError(f"block_size must be a power of two, got {bs!r}")
        if not MIN_BLOCK_SIZE <= bs <= MAX_BLOCK_SIZE:
            raise ConfigError(
                f"block_size must lie in [{MIN_BLOCK_SIZE}, {MAX_BLOCK_SIZE}], got {bs}"
            )
        if not isinstance(self.capacity_blocks, int) or self.capacity_blocks < 1:
            raise ConfigError(f"capacity_blocks must be >= 1, got {self.capacity_blocks!r}")

    @classmethod
    def for_bytes(cls, nbytes: int, block_size: int = DEFAULT_BLOCK_SIZE, **kw) -> "PoolConfig":
        """Smallest config whose arena holds at least ``nbytes``."""
        return cls(block_size=block_size, capacity_blocks=max(1, -(-nbytes // block_size)), **kw)


@dataclass(frozen=True, slots=True)
class BlockHandle:
    """Names one block of one pool. Resolve it with :meth:`BlockPool.span`."""

    pool_id: int
    index: int


@dataclass(frozen=True)
class PoolStats:
    blocks_total: int
    blocks_live: int
    acquires: int
    releases: int
    peak_live: int


class BlockPool:
    """Arena of ``capacity_blocks`` blocks of ``block_size`` bytes.

    Free blocks are reused LIFO. ``acquire``/``release``/``stats`` take an
    internal lock; resolving a handle to memory does not need it.
    """

    def __init__(self, config: PoolConfig | None = None):
        self.config = config or PoolConfig()
        bs = self.config.block_size
        cap = self.config.capacity_blocks
        self.id = next(_pool_ids)

        # One upfront reservation, over-allocated by a block so the base can be aligned.
        self._raw = np.zeros(cap * bs + bs, dtype=np.uint8)
        skew = (-self._raw.ctypes.data) % bs
        self.arena = self._raw[skew : skew + cap * bs]
        self.base_address = self.arena.ctypes.data

        self._free = list(range(cap - 1, -1, -1))
        self._live = bytearray(cap)
        # Blocks start zeroed (calloc); only reused blocks need clearing.
        self._dirty = bytearray(cap)
        self._handles = [BlockHandle(self.id, i) for i in range(cap)]
        self._lock = threading.Lock()
        self._acquires = 0
        self._releases = 0
        self._peak = 0
        self._views: dict[np.dtype, np.ndarray] = {}
        self._memviews: dict[str, memoryview] = {}

    def __repr__(self):
        return (
            f"BlockPool(block_size={self.block_size}, "
            f"capacity_blocks={self.capacity_blocks}, live={self.blocks_live})"
        )

    @property
    def block_size(self) -> int:
        return self.config.block_size

    @property
    def capacity_blocks(self) -> int:
        return self.config.capacity_blocks

    @property
    def blocks_live(self) -> int:
        return self._acquires - self._releases

    @property
    def blocks_free(self) -> int:
        return len(self._free)

    def acquire(self) -> BlockHandle:
        with self._lock:
            if not self._free:
                raise OutOfBlocksError(
                    f"pool exhausted: all {self.capacity_blocks} blocks of "
                    f"{self.block_size} bytes are live"
                )
            i = self._free.pop()
            self._live[i] = 1
            self._acquires += 1
            live = self._acquires - self._releases
            if live > self._peak:
                self._peak = live
            dirty = self._dirty[i]
        if dirty and self.config.zero_on_acquire:
            bs = self.block_size
            self.arena[i * bs : (i + 1) * bs] = 0
        return self._handles[i]

    def acquire_many(self, count: int) -> list[BlockHandle]:
        """Acquire ``count`` blocks or none at all."""
        if count > len(self._free):
            raise OutOfBlocksError(
                f"need {count} blocks, only {len(self._free)} of {self.capacity_blocks} free"
            )
        out = []
        try:
            for _ in range(count):
                out.append(self.acquire())
        except OutOfBlocksError:
            # lost a race with another thread
            for h in out:
                self.release(h)
            raise
        return out

    def release(self, handle: BlockHandle) -> None:
        i = self._check(handle)
        with self._lock:
            if not self._live[i]:
                raise UsageError(f"block {i} released twice or never acquired")
            self._live[i] = 0
            self._dirty[i] = 1
            self._free.append(i)
            self._releases += 1

    def stats(self) -> PoolStats:
        with self._lock:
            return PoolStats(
                blocks_total=self.capacity_blocks,
                blocks_live=self._acquires - self._releases,
                acquires=self._acquires,
                releases=self._releases,
                peak_live=self._peak,
            )

    def is_live(self, handle: BlockHandle) -> bool:
        return handle.pool_id == self.id and bool(self._live[handle.index])

    def owns(self, handle: BlockHandle) -> bool:
        return handle.pool_id == self.id and 0 <= handle.index < self.capacity_blocks

    def span(self, handle: BlockHandle) -> np.ndarray:
        """Writable ``uint8`` view of exactly one block."""
        i = self._check(handle)
        bs = self.block_size
        return self.arena[i * bs : (i + 1) * bs]

    def address(self, handle: BlockHandle) -> int:
        """Host address of the block's first byte; always block-aligned."""
        return self.base_address + self._check(handle) * self.block_size

    def handle(self, index: int) -> BlockHandle:
        """Handle for a block index read back out of pool memory."""
        if not 0 <= index < self.capacity_blocks:
            raise UsageError(f"block index {index} outside pool")
        return self._handles[index]

    def view(self, dtype) -> np.ndarray:
        """The whole arena reinterpreted as ``dtype`` (cached)."""
        dt = np.dtype(dtype)
        v = self._views.get(dt)
        if v is None:
            v = self._views[dt] = self.arena.view(dt)
        return v

    def memview(self, fmt: str) -> memoryview:
        """The whole arena as a flat ``memoryview`` of struct format ``fmt``.

        Item access on a memoryview returns plain ints, which keeps the
        pure-Python access paths cheap.
        """
        mv = self._memviews.get(fmt)
        if mv is None:
            mv = self._memviews[fmt] = memoryview(self.arena).cast(fmt)
        return mv

    def _check(self, handle: BlockHandle) -> int:
        if not isinstance(handle, BlockHandle) or handle.pool_id != self.id:
            raise UsageError(f"{handle!r} was not issued by this pool")
        return handle.index
