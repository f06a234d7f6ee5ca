"""Red-black tree over raw word memory, with swappable node backing.

A node is four int64 words: key, left, right, and parent with the colour
packed into bit 0 (node references are word offsets, always multiples of 4).
The algorithm only ever sees ``(mem, ref)`` pairs, so the same compiled code
runs over one contiguous host buffer or over nodes bump-allocated in pool
blocks; the backing is the only difference between the two.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .block_pool import BlockHandle, BlockPool

NODE_WORDS = 4
NODE_BYTES = NODE_WORDS * 8
KEY, LEFT, RIGHT, PC = 0, 1, 2, 3
RED, BLACK = 0, 1

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

_STACK_DEPTH = 256


@njit(inline="always")
def _parent(m, x):
    return m[x + PC] & ~np.int64(1)


@njit(inline="always")
def _color(m, x):
    return m[x + PC] & 1


@njit(inline="always")
def _set_parent(m, x, p):
    m[x + PC] = p | (m[x + PC] & 1)


@njit(inline="always")
def _set_color(m, x, c):
    m[x + PC] = (m[x + PC] & ~np.int64(1)) | c


@njit(inline="always")
def _rotate_left(m, state, nil, x):
    y = m[x + RIGHT]
    yl = m[y + LEFT]
    m[x + RIGHT] = yl
    if yl != nil:
        _set_parent(m, yl, x)
    xp = _parent(m, x)
    _set_parent(m, y, xp)
    if xp == nil:
        state[0] = y
    elif x == m[xp + LEFT]:
        m[xp + LEFT] = y
    else:
        m[xp + RIGHT] = y
    m[y + LEFT] = x
    _set_parent(m, x, y)


@njit(inline="always")
def _rotate_right(m, state, nil, x):
    y = m[x + LEFT]
    yr = m[y + RIGHT]
    m[x + LEFT] = yr
    if yr != nil:
        _set_parent(m, yr, x)
    xp = _parent(m, x)
    _set_parent(m, y, xp)
    if xp == nil:
        state[0] = y
    elif x == m[xp + RIGHT]:
        m[xp + RIGHT] = y
    else:
        m[xp + LEFT] = y
    m[y + RIGHT] = x
    _set_parent(m, x, y)


@njit(nogil=True, cache=True)
def _insert(m, state, nil, z, key):
    """Insert node ``z`` carrying ``key``; equal keys go right. ``state[0]`` is the root."""
    y = nil
    x = state[0]
    while x != nil:
        y = x
        if key < m[x + KEY]:
            x = m[x + LEFT]
        else:
            x = m[x + RIGHT]
    m[z + KEY] = key
    m[z + LEFT] = nil
    m[z + RIGHT] = nil
    m[z + PC] = y | RED
    if y == nil:
        state[0] = z
    elif key < m[y + KEY]:
        m[y + LEFT] = z
    else:
        m[y + RIGHT] = z

    while _color(m, _parent(m, z)) == RED:
        p = _parent(m, z)
        g = _parent(m, p)
        if p == m[g + LEFT]:
            u = m[g + RIGHT]
            if _color(m, u) == RED:
                _set_color(m, p, BLACK)
                _set_color(m, u, BLACK)
                _set_color(m, g, RED)
                z = g
            else:
                if z == m[p + RIGHT]:
                    z = p
                    _rotate_left(m, state, nil, z)
                    p = _parent(m, z)
                    g = _parent(m, p)
                _set_color(m, p, BLACK)
                _set_color(m, g, RED)
                _rotate_right(m, state, nil, g)
        else:
            u = m[g + LEFT]
            if _color(m, u) == RED:
                _set_color(m, p, BLACK)
                _set_color(m, u, BLACK)
                _set_color(m, g, RED)
                z = g
            else:
                if z == m[p + LEFT]:
                    z = p
                    _rotate_right(m, state, nil, z)
                    p = _parent(m, z)
                    g = _parent(m, p)
                _set_color(m, p, BLACK)
                _set_color(m, g, RED)
                _rotate_left(m, state, nil, g)
    _set_color(m, state[0], BLACK)


@njit(nogil=True, cache=True)
def _insert_all(m, state, nil, refs, keys):
    for j in range(keys.shape[0]):
        _insert(m, state, nil, refs[j], keys[j])


@njit(nogil=True, cache=True)
def _inorder(m, root, nil, out):
    """Write keys in order into ``out``; returns ``(count, hash)``."""
    stack = np.empty(_STACK_DEPTH, dtype=np.int64)
    sp = 0
    x = root
    count = 0
    h = np.uint64(FNV_OFFSET)
    prime = np.uint64(FNV_PRIME)
    while sp > 0 or x != nil:
        while x != nil:
            stack[sp] = x
            sp += 1
            x = m[x + LEFT]
        sp -= 1
        x = stack[sp]
        k = m[x + KEY]
        if count < out.shape[0]:
            out[count] = k
        h = (h ^ np.uint64(k)) * prime
        count += 1
        x = m[x + RIGHT]
    return count, h


def order_hash(keys) -> int:
    """Order-sensitive 64-bit hash of a key sequence (FNV-1a over whole words)."""
    h = FNV_OFFSET
    for k in keys:
        h = ((h ^ (int(k) & _MASK64)) * FNV_PRIME) & _MASK64
    return h


class HostNodeStore:
    """Nodes in one contiguous host buffer, grown by doubling."""

    def __init__(self, capacity: int = 1024):
        self.mem = np.zeros(max(1, capacity) * NODE_WORDS, dtype=np.int64)
        self.nodes = 0
        self.allocations = 1

    def alloc_many(self, count: int) -> np.ndarray:
        need = (self.nodes + count) * NODE_WORDS
        if need > self.mem.shape[0]:
            grown = np.zeros(max(need, 2 * self.mem.shape[0]), dtype=np.int64)
            grown[: self.mem.shape[0]] = self.mem
            self.mem = grown
            self.allocations += 1
        refs = np.arange(self.nodes, self.nodes + count, dtype=np.int64) * NODE_WORDS
        self.nodes += count
        return refs

    def word_view(self) -> memoryview:
        return memoryview(self.mem)

    def release(self) -> None:
        self.mem = np.zeros(NODE_WORDS, dtype=np.int64)
        self.nodes = 0


class PoolNodeStore:
    """Nodes bump-allocated inside pool blocks; a node never straddles blocks."""

    def __init__(self, pool: BlockPool):
        self.pool = pool
        self.mem = pool.view(np.int64)
        self.per_block = pool.block_size // NODE_BYTES
        self.blocks: list[BlockHandle] = []
        self._bases = np.empty(0, dtype=np.int64)
        self.nodes = 0

    @property
    def allocations(self) -> int:
        return len(self.blocks)

    def alloc_many(self, count: int) -> np.ndarray:
        j = np.arange(self.nodes, self.nodes + count, dtype=np.int64)
        need = -(-(self.nodes + count) // self.per_block)
        if need > len(self.blocks):
            self.blocks += self.pool.acquire_many(need - len(self.blocks))
            words = self.pool.block_size // 8
            self._bases = np.array([b.index * words for b in self.blocks], dtype=np.int64)
        self.nodes += count
        return self._bases[j // self.per_block] + (j % self.per_block) * NODE_WORDS

    def word_view(self) -> memoryview:
        return self.pool.memview("q")

    def release(self) -> None:
        for b in self.blocks:
            self.pool.release(b)
        self.blocks = []
        self._bases = np.empty(0, dtype=np.int64)
        self.nodes = 0


class RedBlackTree:
    """Multiset of int64 keys. ``store`` decides where nodes live."""

    def __init__(self, store: HostNodeStore | PoolNodeStore | None = None):
        self.store = store if store is not None else HostNodeStore()
        (self.nil,) = self.store.alloc_many(1).tolist()
        m = self.store.mem
        m[self.nil : self.nil + NODE_WORDS] = (0, self.nil, self.nil, self.nil | BLACK)
        self._state = np.array([self.nil], dtype=np.int64)
        self.size = 0

    def __len__(self):
        return self.size

    @property
    def root(self) -> int:
        return int(self._state[0])

    def insert(self, key: int) -> None:
        (ref,) = self.store.alloc_many(1).tolist()
        _insert(self.store.mem, self._state, self.nil, ref, np.int64(key))
        self.size += 1

    def insert_many(self, keys) -> None:
        keys = np.ascontiguousarray(keys, dtype=np.int64)
        refs = self.store.alloc_many(len(keys))
        _insert_all(self.store.mem, self._state, self.nil, refs, keys)
        self.size += len(keys)

    def inorder(self) -> np.ndarray:
        out = np.empty(self.size, dtype=np.int64)
        _inorder(self.store.mem, self._state[0], self.nil, out)
        return out

    def traversal_hash(self) -> int:
        count, h = _inorder(self.store.mem, self._state[0], self.nil, np.empty(0, dtype=np.int64))
        assert count == self.size
        return int(h)

    def validate(self) -> int:
        """Check every red-black and search-tree invariant; returns the black height."""
        return validate(self.store.word_view(), self.root, self.nil, self.size)


def validate(mem, root: int, nil: int, size: int | None = None) -> int:
    """Structural check of a tree in word memory ``mem``.

    Returns the number of black nodes on every root-to-leaf path. Raises ``AssertionError`` naming the first violated invariant. Iterative,
    so it copes with any height.
    """
    assert mem[nil + PC] & 1 == BLACK, "sentinel must be black"
    if root == nil:
        assert not size, "empty tree with nonzero size"
        return 0
    assert mem[root + PC] & 1 == BLACK, "root must be black"
    assert mem[root + PC] & ~1 == nil, "root must have no parent"

    black_height = None
    count = 0
    prev = None
    # (node, blacks above node) on an explicit stack, in-order
    stack = []
    x, blacks = root, 0
    while stack or x != nil:
        while x != nil:
            pc = mem[x + PC]
            color = pc & 1
            for child in (mem[x + LEFT], mem[x + RIGHT]):
                if child == nil:
                    # a root-to-leaf path ends here
                    if black_height is None:
                        black_height = blacks + color
                    assert blacks + color == black_height, "unequal black heights"
                    continue
                cpc = mem[child + PC]
                assert cpc & ~1 == x, f"node {child} has wrong parent link"
                assert not (color == RED and cpc & 1 == RED), f"red node {x} has a red child"
            stack.append((x, blacks))
            blacks += color
            x = mem[x + LEFT]
        x, blacks = stack.pop()
        key = mem[x + KEY]
        assert prev is None or prev <= key, "in-order keys out of order"
        prev = key
        count += 1
        blacks += mem[x + PC] & 1
        x = mem[x + RIGHT]
    if size is not None:
        assert count == size, f"tree holds {count} nodes, expected {size}"
    return black_height
