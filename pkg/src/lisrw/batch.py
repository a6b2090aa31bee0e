"""Trial-parallel kernels over keyed walks.

Trial ``t`` always reads the stream ``child(base, t)``; work is cut into
contiguous trial ranges and results are concatenated in trial order, so the
output does not depend on the number of threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numba as nb
import numpy as np

from . import rng
from .lis_core import _dominance_dp, _lnds_length
from .walkgen import StepLaw


def base_key(seed: int, *path: int) -> np.uint64:
    return np.uint64(rng.derive_key(seed, *path))


def run_chunks(fn, trials: int, threads: int = 1):
    """Call ``fn(start, stop)`` over contiguous trial ranges; concatenate in order."""
    if trials <= 0:
        return fn(0, 0)
    threads = max(1, min(threads, trials))
    if threads == 1:
        return fn(0, trials)
    edges = np.linspace(0, trials, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as pool:
        parts = list(pool.map(fn, edges[:-1], edges[1:]))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)


@nb.njit(cache=True, nogil=True)
def _lnds_kernel(base, start, stop, code, a, n, d, npoints):
    out = np.empty(stop - start, dtype=np.int64)
    buf = np.empty((n + 1, d))
    for t in range(start, stop):
        rng.fill_walk(rng.child_key(base, t), code, a, n, d, buf)
        if d == 1:
            out[t - start] = _lnds_length(buf[:npoints, 0].copy())
        else:
            out[t - start] = _dominance_dp(buf[:npoints])
    return out


@nb.njit(cache=True, nogil=True)
def _record_kernel(base, start, stop, code, a, n):
    out = np.empty(stop - start, dtype=np.int64)
    buf = np.empty((n + 1, 1))
    for t in range(start, stop):
        rng.fill_walk(rng.child_key(base, t), code, a, n, 1, buf)
        best = buf[0, 0]
        count = 1
        for i in range(1, n + 1):
            if buf[i, 0] >= best:
                best = buf[i, 0]
                count += 1
        out[t - start] = count
    return out


@nb.njit(cache=True, nogil=True)
def _levelset_kernel(base, start, stop, code, a, n):
    # lattice laws only: positions are integers in lattice units
    out = np.empty(stop - start, dtype=np.int64)
    buf = np.empty((n + 1, 1))
    offset = max(a, 1) * n
    counts = np.zeros(2 * offset + 1, dtype=np.int64)
    for t in range(start, stop):
        rng.fill_walk(rng.child_key(base, t), code, a, n, 1, buf)
        best = 0
        for i in range(n + 1):
            v = np.int64(buf[i, 0]) + offset
            counts[v] += 1
            if counts[v] > best:
                best = counts[v]
        for i in range(n + 1):
            counts[np.int64(buf[i, 0]) + offset] = 0
        out[t - start] = best
    return out


@nb.njit(cache=True, nogil=True)
def _max_abs_kernel(base, start, stop, code, a, n):
    out = np.empty(stop - start)
    for t in range(start, stop):
        key = rng.child_key(base, t)
        s = 0.0
        best = 0.0
        for i in range(n):
            s += rng.draw(key, code, a, i)
            if abs(s) > best:
                best = abs(s)
        out[t - start] = best
    return out


@nb.njit(inline="always")
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return np.int64((x * np.uint64(0x0101010101010101)) >> np.uint64(56))


@nb.njit(cache=True, nogil=True)
def _final_kernel(base, start, stop, code, a, n):
    out = np.empty(stop - start)
    for t in range(start, stop):
        key = rng.child_key(base, t)
        if code == rng.SIMPLE:
            ups = 0
            full = n >> 6
            for w in range(full):
                ups += _popcount(rng.word(key, w))
            rest = n & 63
            if rest:
                mask = (np.uint64(1) << np.uint64(rest)) - np.uint64(1)
                ups += _popcount(rng.word(key, full) & mask)
            out[t - start] = 2.0 * ups - n
        else:
            s = 0.0
            for i in range(n):
                s += rng.draw(key, code, a, i)
            out[t - start] = s
    return out


def lnds_lengths(law: StepLaw, n: int, trials: int, base, *, npoints: int | None = None,
                 threads: int = 1) -> np.ndarray:
    """Exact LIS of the first ``npoints`` positions of each trial's n-step walk."""
    npoints = n + 1 if npoints is None else npoints
    if not 0 <= npoints <= n + 1:
        raise ValueError("npoints must lie in [0, n+1]")
    return run_chunks(lambda s, e: _lnds_kernel(base, s, e, law.code, law.param, n, law.d, npoints),
                      trials, threads)


def record_counts(law: StepLaw, n: int, trials: int, base, threads: int = 1) -> np.ndarray:
    return run_chunks(lambda s, e: _record_kernel(base, s, e, law.code, law.param, n), trials, threads)


def level_set_sizes(law: StepLaw, n: int, trials: int, base, threads: int = 1) -> np.ndarray:
    if not law.lattice:
        raise ValueError("level sets are only meaningful for lattice laws")
    return run_chunks(lambda s, e: _levelset_kernel(base, s, e, law.code, law.param, n), trials, threads)


def max_abs(law: StepLaw, n: int, trials: int, base, threads: int = 1) -> np.ndarray:
    """max_{i<=n} |S(i)| per trial, in unit-variance scale."""
    out = run_chunks(lambda s, e: _max_abs_kernel(base, s, e, law.code, law.param, n), trials, threads)
    return out * law.spacing


def final_positions(law: StepLaw, n: int, trials: int, base, threads: int = 1) -> np.ndarray:
    """S(n) per trial for one-dimensional laws, in unit-variance scale."""
    out = run_chunks(lambda s, e: _final_kernel(base, s, e, law.code, law.param, n), trials, threads)
    return out * law.spacing
