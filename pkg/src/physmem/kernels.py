"""Compiled workload bodies for contiguous arrays and tree arrays.

Tree kernels take the pool arena reinterpreted twice, as pointer slots
(``ptrs``) and as elements (``elems``), plus a tree's descriptor
``(root, depth, n, leaf_shift, fanout_shift)``. They perform the same
address arithmetic as :class:`~physmem.tree_array.TreeArray` and report the
same hop counts.

``reps`` repeats the body inside the kernel so that small arrays can be
timed without per-call dispatch overhead; accumulators carry across reps so
the repeated work cannot be folded away. Verification runs use ``reps=1``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .prng import next64

_U0 = np.uint64(0)

jit = njit(nogil=True, cache=True)


@njit(inline="always")
def _leaf(ptrs, root, depth, q, fshift):
    # depth-1 interior hops from root to the leaf holding leaf-number q
    fmask = (1 << fshift) - 1
    node = np.int64(root)
    level = depth - 2
    while level >= 0:
        node = np.int64(ptrs[(node << fshift) + ((q >> (level * fshift)) & fmask)])
        level -= 1
    return node


@njit(inline="always")
def _pos(ptrs, root, depth, lshift, fshift, i):
    return (_leaf(ptrs, root, depth, i >> lshift, fshift) << lshift) + (i & ((1 << lshift) - 1))


@njit(inline="always")
def _stride_offset(p, stride, passes):
    return (p * stride // passes) % stride


# -- linear scan -----------------------------------------------------------


@jit
def sum_flat(a, reps):
    s = _U0
    for _ in range(reps):
        for i in range(a.shape[0]):
            s += a[i]
    return s


@jit
def sum_tree_naive(ptrs, elems, root, depth, n, lshift, fshift, reps):
    s = _U0
    hops = 0
    for _ in range(reps):
        for i in range(n):
            s += elems[_pos(ptrs, root, depth, lshift, fshift, i)]
            hops += depth
    return s, hops


@jit
def sum_tree_iter(ptrs, elems, root, depth, n, lshift, fshift, reps):
    lcap = 1 << lshift
    s = _U0
    hops = 0
    for _ in range(reps):
        next_ptr = 1
        last_ptr = 0
        last_idx = -1
        while True:
            if next_ptr > last_ptr:
                i = last_idx + 1
                if i >= n:
                    break
                # getDataPage(i)
                leaf = _leaf(ptrs, root, depth, i >> lshift, fshift)
                hops += depth
                first = i & ~(lcap - 1)
                count = min(lcap, n - first)
                next_ptr = (leaf << lshift) + (i - first)
                last_ptr = (leaf << lshift) + count - 1
                last_idx = first + count - 1
            # next() until the cached page runs out. Unsigned positions let
            # the compiler drop the negative-index wraparound check.
            p = np.uint64(next_ptr)
            end = np.uint64(last_ptr)
            while p <= end:
                s += elems[p]
                p += np.uint64(1)
            next_ptr = last_ptr + 1
    return s, hops


# -- strided scan ----------------------------------------------------------


@jit
def strided_flat(a, stride, passes, reps):
    n = a.shape[0]
    s = _U0
    accesses = 0
    for _ in range(reps):
        for p in range(passes):
            i = _stride_offset(p, stride, passes)
            while i < n:
                s += a[i]
                accesses += 1
                i += stride
    return s, accesses


@jit
def strided_tree_naive(ptrs, elems, root, depth, n, lshift, fshift, stride, passes, reps):
    s = _U0
    hops = 0
    accesses = 0
    for _ in range(reps):
        for p in range(passes):
            i = _stride_offset(p, stride, passes)
            while i < n:
                s += elems[_pos(ptrs, root, depth, lshift, fshift, i)]
                hops += depth
                accesses += 1
                i += stride
    return s, hops, accesses


@jit
def strided_tree_iter(ptrs, elems, root, depth, n, lshift, fshift, stride, passes, reps):
    lcap = 1 << lshift
    s = _U0
    hops = 0
    accesses = 0
    for _ in range(reps):
        page_first = -1
        last_idx = -1
        page_ptr = 0
        for p in range(passes):
            i = _stride_offset(p, stride, passes)
            while i < n:
                # seek(i): reuse the cached page when i lies on it
                if i < page_first or i > last_idx:
                    leaf = _leaf(ptrs, root, depth, i >> lshift, fshift)
                    hops += depth
                    page_first = i & ~(lcap - 1)
                    last_idx = page_first + min(lcap, n - page_first) - 1
                    page_ptr = leaf << lshift
                s += elems[page_ptr + (i - page_first)]
                accesses += 1
                i += stride
    return s, hops, accesses


# -- GUPS ------------------------------------------------------------------


@jit
def gups_flat(table, seed, updates, reps):
    mask = np.uint64(table.shape[0] - 1)
    for _ in range(reps):
        state = np.uint64(seed)
        for _u in range(updates):
            state, r = next64(state)
            table[r & mask] ^= r
    return 0


@jit
def gups_tree_naive(ptrs, elems, root, depth, n, lshift, fshift, seed, updates, reps):
    mask = np.uint64(n - 1)
    hops = 0
    for _ in range(reps):
        state = np.uint64(seed)
        for _u in range(updates):
            state, r = next64(state)
            i = np.int64(r & mask)
            v = elems[_pos(ptrs, root, depth, lshift, fshift, i)]
            elems[_pos(ptrs, root, depth, lshift, fshift, i)] = v ^ r
            hops += 2 * depth
    return hops


@jit
def gups_tree_iter(ptrs, elems, root, depth, n, lshift, fshift, seed, updates, reps):
    lcap = 1 << lshift
    mask = np.uint64(n - 1)
    hops = 0
    for _ in range(reps):
        state = np.uint64(seed)
        page_first = -1
        last_idx = -1
        page_ptr = 0
        for _u in range(updates):
            state, r = next64(state)
            i = np.int64(r & mask)
            if i < page_first or i > last_idx:
                leaf = _leaf(ptrs, root, depth, i >> lshift, fshift)
                hops += depth
                page_first = i & ~(lcap - 1)
                last_idx = page_first + min(lcap, n - page_first) - 1
                page_ptr = leaf << lshift
            elems[page_ptr + (i - page_first)] ^= r
    return hops


@jit
def xor_reduce(a):
    x = _U0
    for i in range(a.shape[0]):
        x ^= np.uint64(a[i])
    return x
