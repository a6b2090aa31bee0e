"""Dyadic lower-bound construction for a simple walk stopped at level 2^n.

Values in (0, 2^n) are processed in decreasing 2-adic order.  Value x of
order k gets the interval I_x = [a_x, b_x], where a_x is the first visit to x
after b_{x-2^k} and b_x is the last visit to x before a_{x+2^k}.  Collecting
every visit to x inside I_x gives a non-decreasing index set.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import batch
from .lis_core import MonotoneChain, lnds_length_1d
from .walkgen import StepLaw, Walk, first_hit_time, generate_walk

INFINITY = math.inf


def ord2(x: int) -> int | float:
    """2-adic valuation of an integer; ``math.inf`` for 0."""
    x = int(x)
    if x == 0:
        return INFINITY
    return (abs(x) & -abs(x)).bit_length() - 1


@dataclass(frozen=True, eq=False)
class DyadicConstruction:
    n: int
    a: np.ndarray  # a[x] for 0 <= x <= 2^n
    b: np.ndarray
    visits: np.ndarray  # visits to x inside I_x; 0 for the end values
    index_set: MonotoneChain

    @property
    def intervals(self) -> dict:
        return {x: (int(self.a[x]), int(self.b[x])) for x in range(len(self.a))}

    @property
    def visit_counts(self) -> dict:
        return {x: int(self.visits[x]) for x in range(1, len(self.visits) - 1)}

    def __len__(self):
        return len(self.index_set)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "ord2", "a_x", "b_x", "visits"])
        for x in range(len(self.a)):
            o = ord2(x)
            w.writerow([x, "inf" if o == INFINITY else o, int(self.a[x]), int(self.b[x]), int(self.visits[x])])
        return buf.getvalue()


def _check_stopped(values: np.ndarray, n: int) -> None:
    top = 2**n
    if len(values) < 2 or values[0] != 0:
        raise ValueError("walk must start at 0 and take at least one step")
    if np.any(np.abs(np.diff(values)) != 1):
        raise ValueError("dyadic construction needs +-1 steps")
    if values[-1] != top or np.any(values[:-1] == top):
        raise ValueError(f"walk must be stopped at its first visit to {top}")


def dyadic_increasing_set(walk, n: int) -> DyadicConstruction:
    """Build the intervals I_x and the index set A for a walk stopped at tau_{2^n}."""
    if isinstance(walk, Walk):
        if walk.law.kind != "simple" or walk.d != 1:
            raise ValueError("dyadic construction is defined for the simple walk only")
        values = walk.values
    else:
        values = np.asarray(walk)
    if not np.issubdtype(values.dtype, np.integer):
        raise ValueError("dyadic construction needs an integer walk")
    if n < 1:
        raise ValueError("n must be positive")
    _check_stopped(values, n)
    top = 2**n
    tau = len(values) - 1
    b0 = int(np.flatnonzero(values[:tau] == 0)[-1])
    # after b0 the walk stays in (0, 2^n], so only this stretch matters
    tail = values[b0:]
    order = np.argsort(tail, kind="stable")
    starts = np.searchsorted(tail[order], np.arange(top + 2))

    a = np.zeros(top + 1, dtype=np.int64)
    b = np.zeros(top + 1, dtype=np.int64)
    visits = np.zeros(top + 1, dtype=np.int64)
    b[0] = b0
    a[top] = b[top] = tau
    pieces = [None] * (top + 1)
    for k in range(n - 1, -1, -1):
        step = 2**k
        for x in range(step, top, 2 * step):
            times = order[starts[x]:starts[x + 1]] + b0
            i = np.searchsorted(times, b[x - step], side="right")
            j = np.searchsorted(times, a[x + step], side="left") - 1
            a[x], b[x] = times[i], times[j]
            visits[x] = j - i + 1
            pieces[x] = times[i:j + 1]
    index = np.concatenate([pieces[x] for x in range(1, top)]) if top > 1 else np.empty(0, dtype=np.int64)
    return DyadicConstruction(n, a, b, visits, MonotoneChain(index.astype(np.int64)))


def excursion_visit_counts(construction: DyadicConstruction) -> dict[int, list[int]]:
    """Visit counts grouped by the 2-order of the value."""
    out: dict[int, list[int]] = {k: [] for k in range(construction.n)}
    for x in range(1, 2**construction.n):
        out[ord2(x)].append(int(construction.visits[x]))
    return out


@dataclass(frozen=True)
class DyadicSample:
    """Per-trial output of the construction over many stopped walks."""

    n: int
    sizes: np.ndarray  # |A| per completed trial
    visits: np.ndarray  # (trials, 2^n + 1) visit counts
    trial_ids: np.ndarray
    censored: int

    def level_counts(self, k: int) -> np.ndarray:
        xs = [x for x in range(1, 2**self.n) if ord2(x) == k]
        return self.visits[:, xs]


def sample_constructions(n: int, trials: int, seed: int, cap: int = 10**6, lis: bool = False,
                         stream: tuple | None = None):
    """Run the construction on ``trials`` keyed walks stopped at tau_{2^n}.

    Walks that miss the level within ``cap`` steps are counted as censored
    and left out.  With ``lis`` the exact LIS of each stopped walk (over
    [0, tau)) is returned alongside.  Trial t reads the stream
    ``(seed, *stream, t)``, with ``stream`` defaulting to ``(n,)``.
    """
    law = StepLaw()
    stream = (n,) if stream is None else tuple(stream)
    sizes, visits, ids, exact = [], [], [], []
    censored = 0
    for t in range(trials):
        tau = first_hit_time(law, 2**n, seed, cap, *stream, t)
        if tau is None:
            censored += 1
            continue
        w = generate_walk(law, tau, seed, *stream, t)
        con = dyadic_increasing_set(w, n)
        sizes.append(len(con))
        visits.append(con.visits)
        ids.append(t)
        if lis:
            exact.append(lnds_length_1d(w.values[:-1]))
    sample = DyadicSample(n, np.array(sizes, dtype=np.int64),
                          np.array(visits, dtype=np.int64).reshape(len(sizes), 2**n + 1),
                          np.array(ids, dtype=np.int64), censored)
    if lis:
        return sample, np.array(exact, dtype=np.int64)
    return sample


def expected_size(n: int) -> int:
    """E|A| = n 2^(n-1)."""
    return n * 2 ** (n - 1)


def size_variance(n: int) -> int:
    """Var|A| = sum_k 2^(n-k-1) 2^k (2^k - 1), which is at most 2^(2n-1)."""
    return sum(2 ** (n - k - 1) * 2**k * (2**k - 1) for k in range(n))


def choose_m(n: int, epsilon: float) -> int | None:
    """Integer m with m 2^m / 9 <= eps sqrt(n) log2 n < m 2^m / 4, if any."""
    target = epsilon * math.sqrt(n) * math.log2(n) if n > 1 else 0.0
    m = 1
    while m * 2**m / 9 <= target:
        if target < m * 2**m / 4:
            return m
        m += 1
    return None


@dataclass(frozen=True)
class LowerBoundCheck:
    n: int
    epsilon: float
    trials: int
    threshold: float  # eps sqrt(n) log2 n
    failure_rate: float
    mean_lis: float
    m: int | None
    hit_tail_bound: float | None  # 12 * 2^m / sqrt(n)

    @property
    def mean_bound(self) -> float:
        return math.sqrt(self.n) * math.log2(self.n) / 1000


def theorem_lb_check(n: int, epsilon: float, trials: int, seed: int, threads: int = 1, lis=None) -> LowerBoundCheck:
    """Empirical P(LIS(S|[0,n)) < eps sqrt(n) log2 n) for the simple walk."""
    if lis is None:
        lis = batch.lnds_lengths(StepLaw(), n, trials, batch.base_key(seed, n), npoints=n, threads=threads)
    threshold = epsilon * math.sqrt(n) * math.log2(n) if n > 1 else 0.0
    m = choose_m(n, epsilon)
    return LowerBoundCheck(n, epsilon, len(lis), threshold, float(np.mean(lis < threshold)),
                           float(np.mean(lis)), m, None if m is None else 12 * 2**m / math.sqrt(n))

