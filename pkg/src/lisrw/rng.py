"""Counter-based keyed random streams.

Every random word is a pure function of ``(key, counter)``: the SplitMix64
finalizer applied to ``key + (counter + 1) * GOLDEN``.  Keys are derived by
folding integer path components (seed, size, trial, ...) into a root key, so
trial ``t`` of an experiment can be regenerated without touching any other
trial and the order in which trials run never matters.

The numba kernels here are shared by every module that needs randomness
inside compiled loops.
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_ROOT_SALT = 0x243F6A8885A308D3

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(0xBF58476D1CE4E5B9)
_U_M2 = np.uint64(0x94D049BB133111EB)
_U_ONE = np.uint64(1)
_U_SALT = np.uint64(_ROOT_SALT)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


def _mix64_py(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def root_key(seed: int) -> int:
    return _mix64_py((seed & MASK64) ^ _ROOT_SALT)


def child_key_py(key: int, i: int) -> int:
    return _mix64_py(key ^ _mix64_py((i & MASK64) + GOLDEN))


def derive_key(seed: int, *path: int) -> int:
    """Key of the stream addressed by ``seed`` and integer path components."""
    key = root_key(seed)
    for i in path:
        key = child_key_py(key, i)
    return key


@nb.njit(inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _U_M1
    z = (z ^ (z >> _S27)) * _U_M2
    return z ^ (z >> _S31)


@nb.njit(inline="always")
def word(key, counter):
    return mix64(key + (np.uint64(counter) + _U_ONE) * _U_GOLDEN)


@nb.njit(inline="always")
def child_key(key, i):
    return mix64(key ^ mix64(np.uint64(i) + _U_GOLDEN))


@nb.njit(cache=True)
def child_keys(key, start, stop):
    out = np.empty(stop - start, dtype=np.uint64)
    for t in range(start, stop):
        out[t - start] = child_key(key, t)
    return out


@nb.njit(inline="always")
def unit_open(w):
    # (0, 1], safe for log()
    return (np.float64(w >> _S11) + 1.0) * _INV53


@nb.njit(inline="always")
def bounded(key, counter, m):
    """Unbiased integer in [0, m) from the words at ``counter`` and beyond.

    Rejection uses sub-counters ``counter * 2**8 + r`` so redraws stay keyed.
    """
    um = np.uint64(m)
    limit = np.uint64(0xFFFFFFFFFFFFFFFF) - (np.uint64(0xFFFFFFFFFFFFFFFF) % um)
    base = np.uint64(counter) << np.uint64(8)
    for r in range(256):
        w = word(key, base + np.uint64(r))
        if w < limit:
            return np.int64(w % um)
    return np.int64(word(key, base) % um)


# Step law codes shared with walkgen.
SIMPLE = 0
LAZY = 1
UNIFORM = 2
NORMAL = 3


@nb.njit(inline="always")
def draw(key, code, a, j):
    """The j-th coordinate draw of a law, in lattice units (or raw for normal)."""
    if code == SIMPLE:
        w = word(key, j >> 6)
        return 1.0 if (w >> np.uint64(j & 63)) & _U_ONE else -1.0
    elif code == LAZY:
        w = word(key, j >> 5)
        b = (w >> np.uint64(2 * (j & 31))) & np.uint64(3)
        if b == 0:
            return -1.0
        elif b == 3:
            return 1.0
        return 0.0
    elif code == UNIFORM:
        return np.float64(bounded(key, j, 2 * a + 1) - a)
    else:
        pair = j >> 1
        u1 = unit_open(word(key, 2 * pair))
        u2 = unit_open(word(key, 2 * pair + 1))
        r = math.sqrt(-2.0 * math.log(u1))
        if j & 1:
            return r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)


@nb.njit(cache=True, nogil=True)
def fill_walk(key, code, a, n, d, out):
    """Write the cumulative path of n steps into ``out`` of shape (n+1, d)."""
    for c in range(d):
        out[0, c] = 0.0
    for i in range(n):
        for c in range(d):
            out[i + 1, c] = out[i, c] + draw(key, code, a, i * d + c)
