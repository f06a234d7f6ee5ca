"""Physically backed data structures on a fixed-size block pool.

``BlockPool`` hands out aligned blocks from one arena; ``TreeArray`` lays a
large array over those blocks as a shallow radix tree; ``SegStack`` runs
call frames on a chain of blocks; ``RedBlackTree`` keeps its nodes either
in one host buffer or in pool blocks. ``physmem.bench`` and the
``physmem-bench`` command compare them with contiguous baselines.
"""

from .block_pool import BlockHandle, BlockPool, PoolConfig, PoolStats
from .errors import (
    BoundsError,
    CapacityError,
    ChecksumMismatchError,
    ConfigError,
    FrameSizeError,
    OutOfBlocksError,
    PhysMemError,
    UsageError,
)
from .rbtree import HostNodeStore, PoolNodeStore, RedBlackTree
from .seg_stack import Frame, SegStack, fib_bench
from .tree_array import DataPage, TreeArray, TreeCounters, TreeGeometry, TreeIterator
from .workloads import Kind, Variant, WorkloadResult, WorkloadSpec, run_workload

__version__ = "0.1.0"

__all__ = [
    "BlockHandle", "BlockPool", "PoolConfig", "PoolStats",
    "BoundsError", "CapacityError", "ChecksumMismatchError", "ConfigError",
    "FrameSizeError", "OutOfBlocksError", "PhysMemError", "UsageError",
    "HostNodeStore", "PoolNodeStore", "RedBlackTree",
    "Frame", "SegStack", "fib_bench",
    "DataPage", "TreeArray", "TreeCounters", "TreeGeometry", "TreeIterator",
    "Kind", "Variant", "WorkloadResult", "WorkloadSpec", "run_workload",
]
