"""Split call stack built from pool blocks.

Frames are packed into the current block while they fit. A push that does
not fit acquires a fresh block, links it to the previous one through a
small header, and copies the caller's spilled (non-register) arguments into
the new frame. Popping the last frame of a block releases the block and
restores the previous block's cursor from the header; pops that stay inside
a block only move the cursor.

Block layout::

    +0   int64  index of the previous block, -1 for the first
    +8   int64  cursor of the previous block when this one was chained
    +16  frames ...
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .block_pool import BlockHandle, BlockPool, PoolConfig
from .errors import FrameSizeError, UsageError

HEADER_SIZE = 16


@dataclass(frozen=True, slots=True)
class Frame:
    block: BlockHandle
    offset: int
    size: int
    spilled_args_size: int


class SegStack:
    """One thread's stack. Counters: ``pushes``, ``overflows``, ``bytes_copied``."""

    def __init__(self, pool: BlockPool):
        self.pool = pool
        self.block_size = pool.block_size
        self.max_frame = self.block_size - HEADER_SIZE
        self._words = pool.view(np.int64)
        self._chain: list[BlockHandle] = []
        self._frames: list[Frame] = []
        self.cursor = 0
        self.pushes = 0
        self.pops = 0
        self.overflows = 0
        self.bytes_copied = 0

    def __len__(self):
        return len(self._frames)

    def __repr__(self):
        return (
            f"SegStack(frames={len(self._frames)}, blocks={len(self._chain)}, "
            f"cursor={self.cursor}, overflows={self.overflows})"
        )

    @property
    def chain_length(self) -> int:
        return len(self._chain)

    @property
    def top(self) -> Frame:
        if not self._frames:
            raise UsageError("stack is empty")
        return self._frames[-1]

    def push_frame(self, frame_size: int, spilled_args_size: int = 0) -> Frame:
        if frame_size <= 0 or not 0 <= spilled_args_size <= frame_size:
            raise FrameSizeError(
                f"need 0 < frame_size and 0 <= spilled_args_size <= frame_size, "
                f"got {frame_size}, {spilled_args_size}"
            )
        if frame_size > self.max_frame:
            raise FrameSizeError(
                f"frame of {frame_size} bytes cannot fit a {self.block_size}-byte block "
                f"({self.max_frame} usable)"
            )
        if self._chain and self.cursor + frame_size <= self.block_size:
            block = self._chain[-1]
        else:
            block = self._new_block(frame_size, spilled_args_size)
        frame = Frame(block, self.cursor, frame_size, spilled_args_size)
        self.cursor += frame_size
        self._frames.append(frame)
        self.pushes += 1
        return frame

    def _new_block(self, frame_size: int, spilled: int) -> BlockHandle:
        block = self.pool.acquire()
        w = block.index * (self.block_size // 8)
        if self._chain:
            self._words[w] = self._chain[-1].index
            self._words[w + 1] = self.cursor
            self.overflows += 1
            if spilled and self._frames:
                caller = self._frames[-1]
                k = min(spilled, caller.size)
                src = self.pool.span(caller.block)
                dst = self.pool.span(block)
                end = caller.offset + caller.size
                dst[HEADER_SIZE : HEADER_SIZE + k] = src[end - k : end]
                self.bytes_copied += k
        else:
            self._words[w] = -1
            self._words[w + 1] = 0
        self._chain.append(block)
        self.cursor = HEADER_SIZE
        return block

    def pop_frame(self) -> None:
        if not self._frames:
            raise UsageError("pop on an empty stack")
        frame = self._frames.pop()
        self.pops += 1
        self.cursor = frame.offset
        if self.cursor == HEADER_SIZE:
            block = self._chain.pop()
            self.cursor = int(self._words[block.index * (self.block_size // 8) + 1])
            self.pool.release(block)

    def frame_memory(self, frame: Frame) -> np.ndarray:
        """Writable bytes of a live frame."""
        return self.pool.span(frame.block)[frame.offset : frame.offset + frame.size]

    def clear(self) -> None:
        while self._frames:
            self.pop_frame()


@dataclass(frozen=True)
class FibResult:
    value: int
    pushes: int
    overflows: int
    bytes_copied: int
    peak_blocks: int
    pool_live_after: int


def fib_plain(n: int) -> int:
    return n if n < 2 else fib_plain(n - 1) + fib_plain(n - 2)


def fib_bench(
    n: int,
    frame_size: int = 64,
    spilled_args_size: int = 0,
    pool: BlockPool | None = None,
    block_size: int = 32 * 1024,
) -> FibResult:
    """Recursive Fibonacci where every call runs in its own :class:`SegStack` frame."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if pool is None:
        # one frame per block is the worst case
        pool = BlockPool(PoolConfig(block_size=block_size, capacity_blocks=n + 2))
    stack = SegStack(pool)
    push, pop = stack.push_frame, stack.pop_frame

    def fib(k):
        push(frame_size, spilled_args_size)
        r = k if k < 2 else fib(k - 1) + fib(k - 2)
        pop()
        return r

    value = fib(n)
    return FibResult(
        value=value,
        pushes=stack.pushes,
        overflows=stack.overflows,
        bytes_copied=stack.bytes_copied,
        peak_blocks=pool.stats().peak_live,
        pool_live_after=pool.blocks_live,
    )
