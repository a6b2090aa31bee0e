"""Exact monotone subsequences of sequences and d-dimensional paths.

Monotone means weakly increasing: ``S(a) <= S(b)`` coordinatewise whenever
``a < b``.  The strict and non-increasing variants exist as comparators.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numba as nb
import numpy as np

BRUTE_FORCE_MAX = 24


@dataclass(frozen=True, eq=False)
class MonotoneChain:
    """Strictly increasing time indices along which the path is non-decreasing."""

    indices: np.ndarray
    d: int = 1

    def __len__(self):
        return len(self.indices)

    def __eq__(self, other):
        if not isinstance(other, MonotoneChain):
            return NotImplemented
        return self.d == other.d and np.array_equal(self.indices, other.indices)

    def is_valid_for(self, points) -> bool:
        """Re-check the chain against the path it was taken from."""
        pts = _as_points(points)
        idx = np.asarray(self.indices, dtype=np.int64)
        if len(idx) == 0:
            return True
        if idx[0] < 0 or idx[-1] >= len(pts) or np.any(np.diff(idx) <= 0):
            return False
        if pts.shape[1] != self.d:
            return False
        return bool(np.all(np.diff(pts[idx], axis=0) >= 0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index\n")
        for i in self.indices.tolist():
            buf.write(f"{i}\n")
        return buf.getvalue()


def _as_seq(seq) -> np.ndarray:
    values = getattr(seq, "values", seq)
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional sequence")
    if arr.dtype == np.bool_ or not np.issubdtype(arr.dtype, np.number):
        arr = arr.astype(np.float64)
    if np.issubdtype(arr.dtype, np.integer):
        return arr.astype(np.int64)
    return arr.astype(np.float64)


def _as_points(points) -> np.ndarray:
    arr = np.asarray(getattr(points, "positions", points))
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("expected points of shape (n, d)")
    if np.issubdtype(arr.dtype, np.integer):
        return arr.astype(np.int64)
    return arr.astype(np.float64)


@nb.njit(cache=True, nogil=True)
def _lnds_length(seq):
    n = len(seq)
    tails = np.empty(n, dtype=seq.dtype)
    size = 0
    for i in range(n):
        x = seq[i]
        # first tail strictly greater than x (weak placement)
        lo, hi = 0, size
        while lo < hi:
            mid = (lo + hi) >> 1
            if tails[mid] <= x:
                lo = mid + 1
            else:
                hi = mid
        tails[lo] = x
        if lo == size:
            size += 1
    return size


@nb.njit(cache=True, nogil=True)
def _lis_strict_length(seq):
    n = len(seq)
    tails = np.empty(n, dtype=seq.dtype)
    size = 0
    for i in range(n):
        x = seq[i]
        lo, hi = 0, size
        while lo < hi:
            mid = (lo + hi) >> 1
            if tails[mid] < x:
                lo = mid + 1
            else:
                hi = mid
        tails[lo] = x
        if lo == size:
            size += 1
    return size


@nb.njit(cache=True, nogil=True)
def _lnds_chain(seq):
    n = len(seq)
    tails = np.empty(n, dtype=seq.dtype)
    tail_at = np.empty(n, dtype=np.int64)
    prev = np.full(n, -1, dtype=np.int64)
    size = 0
    for i in range(n):
        x = seq[i]
        lo, hi = 0, size
        while lo < hi:
            mid = (lo + hi) >> 1
            if tails[mid] <= x:
                lo = mid + 1
            else:
                hi = mid
        tails[lo] = x
        tail_at[lo] = i
        if lo > 0:
            prev[i] = tail_at[lo - 1]
        if lo == size:
            size += 1
    out = np.empty(size, dtype=np.int64)
    if size:
        j = tail_at[size - 1]
        for pos in range(size - 1, -1, -1):
            out[pos] = j
            j = prev[j]
    return out


@nb.njit(cache=True, nogil=True)
def _dominance_dp(points):
    n, d = points.shape
    best = np.ones(n, dtype=np.int64)
    result = 0
    for i in range(n):
        bi = 1
        for j in range(i):
            if best[j] + 1 > bi:
                ok = True
                for c in range(d):
                    if points[j, c] > points[i, c]:
                        ok = False
                        break
                if ok:
                    bi = best[j] + 1
        best[i] = bi
        if bi > result:
            result = bi
    return result


@nb.njit(cache=True, nogil=True)
def _bruteforce(points):
    n, d = points.shape
    best = 0
    for mask in range(1, 1 << n):
        count = 0
        last = -1
        ok = True
        for i in range(n):
            if (mask >> i) & 1:
                if last >= 0:
                    for c in range(d):
                        if points[last, c] > points[i, c]:
                            ok = False
                            break
                    if not ok:
                        break
                last = i
                count += 1
        if ok and count > best:
            best = count
    return best


def lnds_length_1d(seq) -> int:
    """Length of the longest non-decreasing subsequence, O(n log n)."""
    arr = _as_seq(seq)
    return int(_lnds_length(arr)) if len(arr) else 0


def lnds_chain_1d(seq) -> MonotoneChain:
    """A longest non-decreasing subsequence, as time indices."""
    arr = _as_seq(seq)
    if len(arr) == 0:
        return MonotoneChain(np.empty(0, dtype=np.int64))
    return MonotoneChain(_lnds_chain(arr))


def lis_strict_1d(seq) -> int:
    """Length of the longest strictly increasing subsequence."""
    arr = _as_seq(seq)
    return int(_lis_strict_length(arr)) if len(arr) else 0


def lnis_length_1d(seq) -> int:
    """Length of the longest non-increasing subsequence."""
    arr = _as_seq(seq)
    return int(_lnds_length(-arr)) if len(arr) else 0


def lnds_length_dd(points) -> int:
    """Longest chain under time order and coordinatewise weak value order.

    Quadratic dynamic programme over chain end points.
    """
    pts = _as_points(points)
    return int(_dominance_dp(pts)) if len(pts) else 0


def lis_bruteforce(points, d: int | None = None) -> int:
    """Exhaustive maximum over all index subsets; test oracle, n <= 24."""
    pts = _as_points(points)
    if d is not None and pts.shape[1] != d:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {d}")
    if len(pts) > BRUTE_FORCE_MAX:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX} points, got {len(pts)}")
    return int(_bruteforce(pts)) if len(pts) else 0


def variation(seq, a_set) -> float:
    """Sum of |S(a_{i+1}) - S(a_i)| along the sorted index set."""
    arr = _as_seq(seq)
    idx = np.asarray(a_set, dtype=np.int64)
    if len(idx) and (idx.min() < 0 or idx.max() >= len(arr)):
        raise IndexError("index set reaches outside the sequence")
    if np.any(np.diff(idx) < 0):
        raise ValueError("index set must be sorted")
    if len(idx) <= 1:
        return 0
    total = np.abs(np.diff(arr[idx])).sum()
    return total.item()


def record_times(seq) -> MonotoneChain:
    """Weak record times: t with S(t) >= S(s) for every s < t."""
    arr = _as_seq(seq)
    if len(arr) == 0:
        return MonotoneChain(np.empty(0, dtype=np.int64))
    running = np.maximum.accumulate(arr)
    keep = np.empty(len(arr), dtype=bool)
    keep[0] = True
    keep[1:] = arr[1:] >= running[:-1]
    return MonotoneChain(np.flatnonzero(keep).astype(np.int64))


def longest_level_set(seq) -> MonotoneChain:
    """All visits to the most visited value; ties go to the smallest value."""
    arr = _as_seq(seq)
    if len(arr) == 0:
        return MonotoneChain(np.empty(0, dtype=np.int64))
    vals, counts = np.unique(arr, return_counts=True)
    top = vals[np.argmax(counts)]  # argmax takes the first, i.e. smallest, value
    return MonotoneChain(np.flatnonzero(arr == top).astype(np.int64))
