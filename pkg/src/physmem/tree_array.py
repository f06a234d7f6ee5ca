"""Discontiguous fixed-length arrays stored as radix trees of pool blocks.

Every node is exactly one block. Leaves hold elements; interior nodes hold
child block indices. An index is split mixed-radix: the low digit selects the
element within a leaf (base ``leaf_capacity``), the remaining quotient is
read base ``fanout`` from the root down.

All accesses are instrumented: a *hop* is one node visited on the way to an
element, so a naive access costs exactly ``depth`` hops. The iterator caches
the current leaf and only pays ``depth`` hops when it crosses into another
leaf, which is the software analogue of a page-walk cache.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple

import numpy as np

from .block_pool import DEFAULT_BLOCK_SIZE, BlockHandle, BlockPool
from .errors import BoundsError, CapacityError, ConfigError, UsageError

MAX_DEPTH = 6
POINTER_WIDTH = 8

_ELEMENT_TYPES = {1: (np.uint8, "B"), 2: (np.uint16, "H"), 4: (np.uint32, "I"), 8: (np.uint64, "Q")}
_POINTER_TYPES = {4: (np.int32, "i"), 8: (np.int64, "q")}
EMPTY_SLOT = -1


def _log2(x: int) -> int:
    return x.bit_length() - 1


@dataclass(frozen=True)
class TreeGeometry:
    """Shape parameters shared by every tree built on one block size."""

    node_size: int = DEFAULT_BLOCK_SIZE
    element_size: int = 4
    pointer_width: int = POINTER_WIDTH

    def __post_init__(self):
        m = self.node_size
        if m <= 0 or m & (m - 1):
            raise ConfigError(f"node_size must be a power of two, got {m}")
        if self.element_size not in _ELEMENT_TYPES:
            raise ConfigError(f"element_size must be one of 1, 2, 4, 8; got {self.element_size}")
        if self.pointer_width not in _POINTER_TYPES:
            raise ConfigError(f"pointer_width must be 4 or 8, got {self.pointer_width}")
        if self.fanout < 2:
            raise ConfigError(f"node_size {m} gives fanout {self.fanout} < 2")
        if self.leaf_capacity < 1:
            raise ConfigError(f"element_size {self.element_size} exceeds node_size {m}")

    @property
    def fanout(self) -> int:
        return self.node_size // self.pointer_width

    @property
    def leaf_capacity(self) -> int:
        return self.node_size // self.element_size

    @property
    def leaf_shift(self) -> int:
        return _log2(self.leaf_capacity)

    @property
    def fanout_shift(self) -> int:
        return _log2(self.fanout)

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(_ELEMENT_TYPES[self.element_size][0])

    @property
    def pointer_dtype(self) -> np.dtype:
        return np.dtype(_POINTER_TYPES[self.pointer_width][0])

    def capacity(self, depth: int) -> int:
        """Elements addressable by a tree of ``depth`` levels."""
        if depth < 1:
            raise ValueError("depth must be >= 1")
        return self.leaf_capacity * self.fanout ** (depth - 1)

    def capacity_bytes(self, depth: int) -> int:
        return self.capacity(depth) * self.element_size

    def depth_for(self, n: int) -> int:
        if n < 1:
            raise ValueError(f"array length must be >= 1, got {n}")
        cap = self.leaf_capacity
        for d in range(1, MAX_DEPTH + 1):
            if n <= cap:
                return d
            cap *= self.fanout
        raise CapacityError(
            f"{n} elements exceed the {self.capacity(MAX_DEPTH)} addressable "
            f"by a depth-{MAX_DEPTH} tree"
        )

    def level_widths(self, n: int) -> list[int]:
        """Node count per level, leaves first."""
        widths = [-(-n // self.leaf_capacity)]
        for _ in range(self.depth_for(n) - 1):
            widths.append(-(-widths[-1] // self.fanout))
        return widths

    def blocks_for(self, n: int) -> int:
        return sum(self.level_widths(n))


@dataclass
class TreeCounters:
    """Instrumentation shared by a tree and its iterators."""

    hops: int = 0
    dispatches: int = 0

    def reset(self) -> None:
        self.hops = 0
        self.dispatches = 0


@dataclass(frozen=True, slots=True)
class DataPage:
    """Live elements of one leaf.

    ``first_ptr``/``last_ptr`` are element positions in the pool arena, so
    ``tree.elements[first_ptr]`` is the element at array index ``first``.
    """

    first: int
    count: int
    first_ptr: int
    last_ptr: int
    span: memoryview


class Accessor(NamedTuple):
    get: Callable[[int], int]
    set: Callable[[int, int], None]


class TreeArray:
    """Fixed-length array of ``n`` unsigned elements backed by pool blocks.

    Elements start zeroed. ``get``/``set`` branch on the stored depth on every
    call; ``fast`` holds access functions generated for this tree's depth at
    creation, which skip that branch. Both record ``depth`` hops per access.
    """

    def __init__(self, pool: BlockPool, geometry: TreeGeometry, n: int):
        if geometry.node_size != pool.block_size:
            raise ConfigError(
                f"tree node size {geometry.node_size} != pool block size {pool.block_size}"
            )
        self.pool = pool
        self.geometry = geometry
        self.n = n
        self.depth = geometry.depth_for(n)
        self.counters = TreeCounters()
        self._destroyed = False

        widths = geometry.level_widths(n)
        self._blocks: list[BlockHandle] = pool.acquire_many(sum(widths))
        try:
            self._build(widths)
        except BaseException:
            for h in self._blocks:
                pool.release(h)
            raise

        self.elements = pool.memview(_ELEMENT_TYPES[geometry.element_size][1])
        self._ptrs = pool.memview(_POINTER_TYPES[geometry.pointer_width][1])
        self._lshift = geometry.leaf_shift
        self._lmask = geometry.leaf_capacity - 1
        self._fshift = geometry.fanout_shift
        self._fmask = geometry.fanout - 1
        # q-digit shifts, root first
        self._digit_shifts = tuple(k * self._fshift for k in range(self.depth - 2, -1, -1))
        self.fast = _SPECIALIZERS.get(self.depth, _specialize_any)(self)

    def _build(self, widths: list[int]) -> None:
        pool, g = self.pool, self.geometry
        blocks = iter(self._blocks)
        level = [next(blocks).index for _ in range(widths[0])]
        self._leaves = np.array(level, dtype=np.int64)
        if not pool.config.zero_on_acquire:
            for b in level:
                pool.arena[b * g.node_size : (b + 1) * g.node_size] = 0
        ptrs = pool.view(g.pointer_dtype)
        for width in widths[1:]:
            parents = [next(blocks).index for _ in range(width)]
            for k, p in enumerate(parents):
                kids = level[k * g.fanout : (k + 1) * g.fanout]
                slots = ptrs[p * g.fanout : (p + 1) * g.fanout]
                slots[: len(kids)] = kids
                slots[len(kids) :] = EMPTY_SLOT
            level = parents
        (self.root_index,) = level
        self.root = pool.handle(self.root_index)

    def __repr__(self):
        return f"TreeArray(n={self.n}, depth={self.depth}, blocks={len(self._blocks)})"

    def __len__(self):
        return self.n

    @property
    def block_count(self) -> int:
        return len(self._blocks)

    @property
    def destroyed(self) -> bool:
        return self._destroyed

    def _locate(self, i: int) -> int:
        """Arena element position of index ``i``; walks depth-1 interior nodes."""
        node = self.root_index
        q = i >> self._lshift
        ptrs, fshift, fmask = self._ptrs, self._fshift, self._fmask
        for shift in self._digit_shifts:
            node = ptrs[(node << fshift) + ((q >> shift) & fmask)]
        return (node << self._lshift) + (i & self._lmask)

    def _check_index(self, i: int) -> None:
        if self._destroyed:
            raise UsageError("tree array used after destroy")
        if not 0 <= i < self.n:
            raise BoundsError(f"index {i} out of range for length {self.n}")

    def get(self, i: int) -> int:
        self._check_index(i)
        c = self.counters
        c.hops += self.depth
        c.dispatches += 1
        if self.depth == 1:
            return self.elements[(self.root_index << self._lshift) + i]
        return self.elements[self._locate(i)]

    def set(self, i: int, value: int) -> None:
        self._check_index(i)
        c = self.counters
        c.hops += self.depth
        c.dispatches += 1
        if self.depth == 1:
            self.elements[(self.root_index << self._lshift) + i] = value
        else:
            self.elements[self._locate(i)] = value

    __getitem__ = get
    __setitem__ = set

    def get_data_page(self, i: int) -> DataPage:
        self._check_index(i)
        self.counters.hops += self.depth
        pos = self._locate(i)
        first = i & ~self._lmask
        count = min(self._lmask + 1, self.n - first)
        first_ptr = pos - (i - first)
        return DataPage(
            first, count, first_ptr, first_ptr + count - 1,
            self.elements[first_ptr : first_ptr + count],
        )

    def iterator(self, start: int = 0) -> TreeIterator:
        return TreeIterator(self, start)

    def __iter__(self) -> Iterator[int]:
        """Elements in index order, one page walk per leaf.

        Same hop cost as draining :meth:`iterator`, but elements within a
        page are produced by the memoryview rather than a Python-level
        ``__next__``.
        """
        i = 0
        while i < self.n:
            dp = self.get_data_page(i)
            yield from dp.span
            i += dp.count

    # Bulk page-level helpers; these go through the leaf list, not the tree,
    # and are not hop-counted.

    def leaf_arrays(self) -> Iterator[np.ndarray]:
        """Writable numpy view of each leaf's live elements, in index order."""
        if self._destroyed:
            raise UsageError("tree array used after destroy")
        elems = self.pool.view(self.geometry.dtype)
        lc = self.geometry.leaf_capacity
        for k, leaf in enumerate(self._leaves.tolist()):
            m = min(lc, self.n - k * lc)
            yield elems[leaf * lc : leaf * lc + m]

    def fill(self, values) -> None:
        values = np.asarray(values)
        if values.shape != (self.n,):
            raise ValueError(f"expected {self.n} values, got shape {values.shape}")
        lo = 0
        for page in self.leaf_arrays():
            page[:] = values[lo : lo + len(page)]
            lo += len(page)

    def to_numpy(self) -> np.ndarray:
        out = np.empty(self.n, dtype=self.geometry.dtype)
        lo = 0
        for page in self.leaf_arrays():
            out[lo : lo + len(page)] = page
            lo += len(page)
        return out

    @classmethod
    def from_array(cls, pool: BlockPool, values, geometry: TreeGeometry | None = None) -> TreeArray:
        values = np.asarray(values)
        if geometry is None:
            geometry = TreeGeometry(pool.block_size, values.dtype.itemsize)
        t = cls(pool, geometry, len(values))
        t.fill(values.astype(geometry.dtype, copy=False))
        return t

    def descriptor(self) -> tuple[int, int, int, int, int]:
        """``(root, depth, n, leaf_shift, fanout_shift)`` for the compiled kernels."""
        return (self.root_index, self.depth, self.n, self._lshift, self._fshift)

    def destroy(self) -> None:
        if self._destroyed:
            raise UsageError("tree array destroyed twice")
        self._destroyed = True
        for h in self._blocks:
            self.pool.release(h)
        self._blocks = []


class TreeIterator:
    """Sequential cursor over a :class:`TreeArray` caching one data page.

    ``next_ptr``/``last_ptr`` are arena positions of the next and last
    element of the cached page; ``last_idx`` is the array index stored at
    ``last_ptr``. While ``next_ptr <= last_ptr`` an element costs no hops.
    """

    __slots__ = ("tree", "next_ptr", "last_ptr", "last_idx", "_page_first", "_page_ptr", "_elems")

    def __init__(self, tree: TreeArray, start: int = 0):
        if tree.destroyed:
            raise UsageError("iterator over a destroyed tree array")
        self.tree = tree
        self._elems = tree.elements
        self.next_ptr = 1
        self.last_ptr = 0
        self.last_idx = start - 1
        self._page_first = -1
        self._page_ptr = 0

    def __iter__(self):
        return self

    def __next__(self) -> int:
        p = self.next_ptr
        if p > self.last_ptr:
            self._load(self.last_idx + 1)
            p = self.next_ptr
        self.next_ptr = p + 1
        return self._elems[p]

    def _load(self, i: int) -> None:
        if i >= self.tree.n:
            raise StopIteration
        dp = self.tree.get_data_page(i)
        self._page_first = dp.first
        self._page_ptr = dp.first_ptr
        self.next_ptr = dp.first_ptr + (i - dp.first)
        self.last_ptr = dp.last_ptr
        self.last_idx = dp.first + dp.count - 1

    def seek(self, i: int) -> None:
        """Position the cursor so the next ``next()`` yields element ``i``.

        Reuses the cached page when ``i`` lies on it, otherwise walks the tree.
        """
        if not 0 <= i < self.tree.n:
            raise BoundsError(f"index {i} out of range for length {self.tree.n}")
        if self._page_first <= i <= self.last_idx and self._page_first >= 0:
            self.next_ptr = self._page_ptr + (i - self._page_first)
        else:
            self._load(i)

    @property
    def position(self) -> int:
        """Array index the next ``next()`` returns (``n`` once exhausted)."""
        if self.next_ptr > self.last_ptr:
            return self.last_idx + 1
        return self.last_idx - (self.last_ptr - self.next_ptr)


# Depth-specialised access paths. Chosen once per tree; none of them branch
# on depth, so they leave the dispatch counter untouched.


def _bounds(n: int, i: int) -> None:
    if not 0 <= i < n:
        raise BoundsError(f"index {i} out of range for length {n}")


def _specialize_1(t: TreeArray) -> Accessor:
    elems, n, c = t.elements, t.n, t.counters
    base = t.root_index << t._lshift

    def get(i):
        _bounds(n, i)
        c.hops += 1
        return elems[base + i]

    def set(i, v):
        _bounds(n, i)
        c.hops += 1
        elems[base + i] = v

    return Accessor(get, set)


def _specialize_2(t: TreeArray) -> Accessor:
    elems, ptrs, n, c = t.elements, t._ptrs, t.n, t.counters
    lshift, lmask, fshift = t._lshift, t._lmask, t._fshift
    root = t.root_index << fshift

    def get(i):
        _bounds(n, i)
        c.hops += 2
        return elems[(ptrs[root + (i >> lshift)] << lshift) + (i & lmask)]

    def set(i, v):
        _bounds(n, i)
        c.hops += 2
        elems[(ptrs[root + (i >> lshift)] << lshift) + (i & lmask)] = v

    return Accessor(get, set)


def _specialize_3(t: TreeArray) -> Accessor:
    elems, ptrs, n, c = t.elements, t._ptrs, t.n, t.counters
    lshift, lmask, fshift, fmask = t._lshift, t._lmask, t._fshift, t._fmask
    root = t.root_index << fshift

    def pos(i):
        q = i >> lshift
        mid = ptrs[root + (q >> fshift)]
        leaf = ptrs[(mid << fshift) + (q & fmask)]
        return (leaf << lshift) + (i & lmask)

    def get(i):
        _bounds(n, i)
        c.hops += 3
        return elems[pos(i)]

    def set(i, v):
        _bounds(n, i)
        c.hops += 3
        elems[pos(i)] = v

    return Accessor(get, set)


def _specialize_any(t: TreeArray) -> Accessor:
    n, c, depth, locate, elems = t.n, t.counters, t.depth, t._locate, t.elements

    def get(i):
        _bounds(n, i)
        c.hops += depth
        return elems[locate(i)]

    def set(i, v):
        _bounds(n, i)
        c.hops += depth
        elems[locate(i)] = v

    return Accessor(get, set)


_SPECIALIZERS: dict[int, Callable[[TreeArray], Accessor]] = {
    1: _specialize_1,
    2: _specialize_2,
    3: _specialize_3,
}


def iter_pages(tree: TreeArray) -> Iterator[DataPage]:
    """Successive data pages tiling ``[0, n)``; ``depth`` hops each."""
    i = 0
    while i < tree.n:
        dp = tree.get_data_page(i)
        yield dp
        i = dp.first + dp.count
