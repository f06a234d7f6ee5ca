"""Benchmark workloads, each runnable over several implementation variants.

A workload is *prepared* once (data generated, structures built, timed
separately as construction) and then its body is run any number of times.
Every variant of a workload computes the same checksum for the same spec;
that equality is the correctness oracle the harness enforces before it
reports any timing.

Variants:

``flat``   contiguous host array (or host allocator / host call stack)
``naive``  tree array, full root-to-leaf walk per access
``iter``   tree array through the cached-page iterator / seek
``pool``   red-black tree nodes bump-allocated from pool blocks
``split``  Fibonacci calls on a block-chained :class:`SegStack`
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels as K
from .block_pool import DEFAULT_BLOCK_SIZE, BlockPool, PoolConfig
from .errors import ConfigError
from .prng import derive_seed, init_elements, stream
from .rbtree import NODE_BYTES, HostNodeStore, PoolNodeStore, RedBlackTree
from .seg_stack import fib_bench, fib_plain
from .tree_array import TreeArray, TreeGeometry

DEFAULT_SEED = 0x5EED
GUPS_SALT = 1


class Kind(str, Enum):
    LINEAR_SCAN = "linear_scan"
    STRIDED_SCAN = "strided_scan"
    GUPS = "gups"
    RBTREE = "rbtree"
    FIB = "fib"

    def __str__(self):
        return self.value


class Variant(str, Enum):
    FLAT = "flat"
    NAIVE = "naive"
    ITER = "iter"
    POOL = "pool"
    SPLIT = "split"

    def __str__(self):
        return self.value


_ARRAY_VARIANTS = (Variant.FLAT, Variant.NAIVE, Variant.ITER)

VARIANTS: dict[Kind, tuple[Variant, ...]] = {
    Kind.LINEAR_SCAN: _ARRAY_VARIANTS,
    Kind.STRIDED_SCAN: _ARRAY_VARIANTS,
    Kind.GUPS: _ARRAY_VARIANTS,
    Kind.RBTREE: (Variant.FLAT, Variant.POOL),
    Kind.FIB: (Variant.FLAT, Variant.SPLIT),
}

# Workloads whose size axis is meaningless.
UNSIZED = frozenset({Kind.FIB})


@dataclass(frozen=True)
class WorkloadSpec:
    kind: Kind
    data_bytes: int = 0
    element_size: int = 4
    stride_elements: int = 1024
    passes: int = 16
    updates: int | None = None
    seed: int = DEFAULT_SEED
    block_size: int = DEFAULT_BLOCK_SIZE
    frame_size: int = 64
    spilled_args_size: int = 0
    fib_n: int = 25

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.FIB:
            if self.fib_n < 0:
                raise ConfigError("fib_n must be >= 0")
            return
        if self.kind is Kind.GUPS and self.element_size != 8:
            raise ConfigError("gups uses 8-byte table elements")
        if self.kind is Kind.RBTREE and self.data_bytes < NODE_BYTES:
            raise ConfigError(f"rbtree needs data_bytes >= one {NODE_BYTES}-byte node")
        if self.data_bytes < self.element_size:
            raise ConfigError(f"data_bytes {self.data_bytes} < element_size {self.element_size}")
        if self.stride_elements < 1 or self.passes < 1:
            raise ConfigError("stride_elements and passes must be >= 1")
        if self.kind is Kind.GUPS and self.n & (self.n - 1):
            raise ConfigError(f"gups table length must be a power of two, got {self.n}")

    @classmethod
    def make(cls, kind, data_bytes: int = 0, **kw) -> WorkloadSpec:
        """Spec with per-kind defaults (8-byte GUPS elements) applied."""
        kind = Kind(kind)
        if kind is Kind.GUPS:
            kw["element_size"] = 8
        return cls(kind, data_bytes, **kw)

    @property
    def n(self) -> int:
        if self.kind is Kind.RBTREE:
            return self.data_bytes // NODE_BYTES
        return self.data_bytes // self.element_size

    @property
    def update_count(self) -> int:
        return self.updates if self.updates is not None else 4 * self.n

    @property
    def geometry(self) -> TreeGeometry:
        return TreeGeometry(self.block_size, self.element_size)

    def blocks_needed(self, variant: Variant) -> int:
        """Pool blocks a variant of this spec uses at its peak."""
        variant = Variant(variant)
        if variant in (Variant.NAIVE, Variant.ITER):
            return self.geometry.blocks_for(self.n)
        if variant is Variant.POOL:
            return -(-(self.n + 1) // (self.block_size // NODE_BYTES))
        if variant is Variant.SPLIT:
            return self.fib_n + 2
        return 0


@dataclass
class WorkloadResult:
    checksum: int
    wall_time: float
    build_time: float
    hops: int
    allocations: int
    accesses: int


@dataclass(frozen=True)
class Sample:
    """One timed execution of a body, ``reps`` times over."""

    elapsed: float
    checksum: int
    hops: int
    accesses: int


class Prepared:
    """A built workload instance; subclasses implement ``_build`` and ``run``."""

    mutates = False

    def __init__(self, spec: WorkloadSpec, variant: Variant, pool: BlockPool | None = None):
        self.spec = spec
        self.variant = Variant(variant)
        if self.variant not in VARIANTS[spec.kind]:
            raise ConfigError(f"{spec.kind} has no {self.variant} variant")
        self.pool = pool
        self.allocations = 0
        t0 = time.perf_counter()
        self._build()
        self.build_time = time.perf_counter() - t0

    def _pool(self) -> BlockPool:
        if self.pool is None:
            need = max(1, self.spec.blocks_needed(self.variant))
            self.pool = BlockPool(PoolConfig(self.spec.block_size, need))
        return self.pool

    def _build(self) -> None:
        raise NotImplementedError

    def run(self, reps: int = 1) -> Sample:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class _ArrayPrepared(Prepared):
    """Shared construction for flat / tree array variants."""

    def _values(self) -> np.ndarray:
        raise NotImplementedError

    def _build(self):
        values = self._values()
        if self.variant is Variant.FLAT:
            self.data = values
            self.tree = None
            self.allocations = 1
        else:
            pool = self._pool()
            self.tree = TreeArray.from_array(pool, values, self.spec.geometry)
            self.allocations = self.tree.block_count
            self.args = (
                pool.view(self.spec.geometry.pointer_dtype),
                pool.view(self.spec.geometry.dtype),
                *self.tree.descriptor(),
            )

    def close(self):
        if self.tree is not None and not self.tree.destroyed:
            self.tree.destroy()
        self.data = None


class LinearScan(_ArrayPrepared):
    def _values(self):
        return init_elements(self.spec.seed, self.spec.n, self.spec.geometry.dtype)

    def run(self, reps=1):
        v = self.variant
        t0 = time.perf_counter()
        if v is Variant.FLAT:
            s, hops = K.sum_flat(self.data, reps), 0
        elif v is Variant.NAIVE:
            s, hops = K.sum_tree_naive(*self.args, reps)
        else:
            s, hops = K.sum_tree_iter(*self.args, reps)
        elapsed = time.perf_counter() - t0
        return Sample(elapsed, int(s), hops, self.spec.n * reps)


class StridedScan(_ArrayPrepared):
    def _values(self):
        return init_elements(self.spec.seed, self.spec.n, self.spec.geometry.dtype)

    def run(self, reps=1):
        v, st, ps = self.variant, self.spec.stride_elements, self.spec.passes
        t0 = time.perf_counter()
        if v is Variant.FLAT:
            s, accesses = K.strided_flat(self.data, st, ps, reps)
            hops = 0
        elif v is Variant.NAIVE:
            s, hops, accesses = K.strided_tree_naive(*self.args, st, ps, reps)
        else:
            s, hops, accesses = K.strided_tree_iter(*self.args, st, ps, reps)
        elapsed = time.perf_counter() - t0
        return Sample(elapsed, int(s), hops, accesses)


class Gups(_ArrayPrepared):
    """Random read-xor-write updates; the table starts as ``table[i] = i``."""

    mutates = True

    def _values(self):
        return np.arange(self.spec.n, dtype=np.uint64)

    def run(self, reps=1):
        v, u = self.variant, self.spec.update_count
        seed = np.uint64(derive_seed(self.spec.seed, GUPS_SALT))
        t0 = time.perf_counter()
        if v is Variant.FLAT:
            K.gups_flat(self.data, seed, u, reps)
            hops = 0
        elif v is Variant.NAIVE:
            hops = K.gups_tree_naive(*self.args, seed, u, reps)
        else:
            hops = K.gups_tree_iter(*self.args, seed, u, reps)
        elapsed = time.perf_counter() - t0
        return Sample(elapsed, self.table_xor(), hops, u * reps)

    def table_xor(self) -> int:
        if self.tree is None:
            return int(K.xor_reduce(self.data))
        x = 0
        for page in self.tree.leaf_arrays():
            x ^= int(K.xor_reduce(page))
        return x


class RBTreeBench(Prepared):
    """Insert pseudorandom keys, then traverse in order.

    Each rep builds a fresh tree, so node allocation is part of the body.
    """

    mutates = True

    def _build(self):
        self.keys = stream(self.spec.seed, self.spec.n).view(np.int64)
        if self.variant is Variant.POOL:
            self._pool()

    def _store(self):
        if self.variant is Variant.FLAT:
            return HostNodeStore(self.spec.n + 1)
        return PoolNodeStore(self.pool)

    def run(self, reps=1):
        h = 0
        t0 = time.perf_counter()
        for _ in range(reps):
            store = self._store()
            tree = RedBlackTree(store)
            tree.insert_many(self.keys)
            h = tree.traversal_hash()
            self.allocations = store.allocations
            store.release()
        elapsed = time.perf_counter() - t0
        return Sample(elapsed, h, 0, self.spec.n * reps)


class Fib(Prepared):
    def _build(self):
        if self.variant is Variant.SPLIT:
            self._pool()

    def run(self, reps=1):
        sp = self.spec
        calls = 0
        t0 = time.perf_counter()
        for _ in range(reps):
            if self.variant is Variant.FLAT:
                value = fib_plain(sp.fib_n)
            else:
                before = self.pool.stats().acquires
                r = fib_bench(sp.fib_n, sp.frame_size, sp.spilled_args_size, pool=self.pool)
                value, calls = r.value, r.pushes
                self.allocations = self.pool.stats().acquires - before
        elapsed = time.perf_counter() - t0
        if self.variant is Variant.FLAT:
            calls = fib_calls(sp.fib_n)
            self.allocations = 0
        return Sample(elapsed, value, 0, calls * reps)


def fib_calls(n: int) -> int:
    """Calls made by naive recursive fib(n): ``2 * fib(n + 1) - 1``."""
    a, b = 0, 1
    for _ in range(n + 1):
        a, b = b, a + b
    return 2 * a - 1


_PREPARED: dict[Kind, type[Prepared]] = {
    Kind.LINEAR_SCAN: LinearScan,
    Kind.STRIDED_SCAN: StridedScan,
    Kind.GUPS: Gups,
    Kind.RBTREE: RBTreeBench,
    Kind.FIB: Fib,
}


def prepare(spec: WorkloadSpec, variant, pool: BlockPool | None = None) -> Prepared:
    return _PREPARED[spec.kind](spec, Variant(variant), pool)


def run_workload(spec: WorkloadSpec, variant, pool: BlockPool | None = None) -> WorkloadResult:
    """Build, run the body once, tear down."""
    with prepare(spec, variant, pool) as p:
        s = p.run(1)
        return WorkloadResult(s.checksum, s.elapsed, p.build_time, s.hops, p.allocations, s.accesses)


def run_linear_scan(spec, variant, pool=None) -> WorkloadResult:
    return run_workload(_as(spec, Kind.LINEAR_SCAN), variant, pool)


def run_strided_scan(spec, variant, pool=None) -> WorkloadResult:
    return run_workload(_as(spec, Kind.STRIDED_SCAN), variant, pool)


def run_gups(spec, variant, pool=None) -> WorkloadResult:
    return run_workload(_as(spec, Kind.GUPS), variant, pool)


def run_rbtree(spec, variant, pool=None) -> WorkloadResult:
    return run_workload(_as(spec, Kind.RBTREE), variant, pool)


def run_fib(spec, variant, pool=None) -> WorkloadResult:
    return run_workload(_as(spec, Kind.FIB), variant, pool)


def _as(spec: WorkloadSpec, kind: Kind) -> WorkloadSpec:
    if spec.kind is not kind:
        raise ConfigError(f"expected a {kind} spec, got {spec.kind}")
    return spec

