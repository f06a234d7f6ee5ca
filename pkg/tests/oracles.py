"""Independent reference models used by the tests.

None of these import the code under test beyond plain constants; they are
written from the data-structure definitions so a shared bug cannot hide.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ShadowPool:
    """Interval-set model of a block pool: which byte ranges are live."""

    def __init__(self, capacity: int, block_size: int):
        self.capacity = capacity
        self.block_size = block_size
        self.live: dict[int, int] = {}  # start address -> end address
        self.acquires = 0
        self.releases = 0
        self.peak = 0

    def on_acquire(self, address: int) -> None:
        end = address + self.block_size
        assert address % self.block_size == 0, "span not aligned"
        for s, e in self.live.items():
            assert end <= s or address >= e, f"span {address:#x} overlaps live {s:#x}"
        self.live[address] = end
        self.acquires += 1
        self.peak = max(self.peak, len(self.live))

    def on_release(self, address: int) -> None:
        del self.live[address]
        self.releases += 1

    @property
    def count(self) -> int:
        return len(self.live)


def blocks_by_recursion(n: int, leaf_capacity: int, fanout: int) -> int:
    """Blocks a lazily-built radix tree over ``n`` elements needs.

    Builds the tree top-down the slow way: a node covering ``n`` elements at
    depth ``d`` is one block plus its non-empty children.
    """
    depth = 1
    while leaf_capacity * fanout ** (depth - 1) < n:
        depth += 1

    def count(n_sub: int, d: int) -> int:
        if d == 1:
            return 1
        child_cap = leaf_capacity * fanout ** (d - 2)
        total = 1
        left = n_sub
        while left > 0:
            total += count(min(left, child_cap), d - 1)
            left -= child_cap
        return total

    return count(max(n, 1), depth)


@dataclass
class ShadowStack:
    """Byte-level model of a split stack.

    Each block is a list of frame sizes after a fixed header; a push that
    does not fit the top block starts a new one.
    """

    block_size: int
    header: int = 16
    blocks: list[list[int]] = field(default_factory=list)
    overflows: int = 0

    @property
    def cursor(self) -> int:
        if not self.blocks:
            return 0
        return self.header + sum(self.blocks[-1])

    @property
    def chain_length(self) -> int:
        return len(self.blocks)

    def push(self, size: int) -> None:
        if not self.blocks or self.cursor + size > self.block_size:
            if self.blocks:
                self.overflows += 1
            self.blocks.append([])
        self.blocks[-1].append(size)

    def pop(self) -> None:
        self.blocks[-1].pop()
        if not self.blocks[-1]:
            self.blocks.pop()


def fib_trace(n: int):
    """('push'|'pop') events of naive recursive fib(n), one frame per call."""
    out = []

    def fib(k):
        out.append("push")
        r = k if k < 2 else fib(k - 1) + fib(k - 2)
        out.append("pop")
        return r

    fib(n)
    return out


def predicted_fib_overflows(n: int, frame_size: int, block_size: int) -> int:
    sim = ShadowStack(block_size)
    for ev in fib_trace(n):
        sim.push(frame_size) if ev == "push" else sim.pop()
    assert sim.chain_length == 0
    return sim.overflows


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def expected_depth(n: int, leaf_capacity: int, fanout: int) -> int:
    depth, covered = 1, leaf_capacity
    while covered < n:
        depth, covered = depth + 1, covered * fanout
    return depth
