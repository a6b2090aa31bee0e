"""Scaled local times on dyadic time/value grids and the certified LIS bound.

Time block of order m: [p 4^m, (p+1) 4^m).  Value block of order m:
[q 2^m, (q+1) 2^m).  The scaled local time S_{m,k,p,q} counts the order m-k
time blocks inside time block (m, p) in which the walk takes some value in
value block (m-k, q).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import mpmath
import numpy as np

from . import batch
from .lis_core import lnds_length_1d
from .walkgen import StepLaw, Walk, generate_walk


@dataclass(frozen=True)
class GridQuery:
    m: int
    k: int
    p: int
    q: int

    def __post_init__(self):
        if not 0 <= self.k <= self.m:
            raise ValueError("need 0 <= k <= m")
        if self.p < 0:
            raise ValueError("time block index must be non-negative")


def _values(walk) -> np.ndarray:
    if isinstance(walk, Walk):
        return walk.values
    arr = np.asarray(walk)
    if arr.ndim != 1:
        raise ValueError("local times need a one-dimensional walk")
    return arr


def _value_blocks(values: np.ndarray, order: int) -> np.ndarray:
    # division by a power of two is exact for floats, so this is exact floor
    return np.floor_divide(values, 2**order).astype(np.int64)


def scaled_local_time(walk, query: GridQuery) -> int:
    """S_{m,k,p,q}, evaluated straight from the definition."""
    v = _values(walk)
    m, k, p, q = query.m, query.k, query.p, query.q
    if (p + 1) * 4**m > len(v):
        raise ValueError(f"walk of {len(v)} points does not cover time block ({m}, {p})")
    sub = 4 ** (m - k)
    lo, hi = q * 2 ** (m - k), (q + 1) * 2 ** (m - k)
    count = 0
    for i in range(4**k):
        start = p * 4**m + i * sub
        block = v[start:start + sub]
        if np.any((block >= lo) & (block < hi)):
            count += 1
    return count


def local_time_table(walk, m: int, k: int, horizon: int | None = None) -> np.ndarray:
    """All nonzero S_{m,k,p,q} over complete time blocks below ``horizon``.

    Rows are (p, q, count), sorted by p then q.  Each order m-k block
    contributes once per distinct value block it visits.
    """
    v = _values(walk)
    horizon = len(v) if horizon is None else min(horizon, len(v))
    if not 0 <= k <= m:
        raise ValueError("need 0 <= k <= m")
    nblocks = horizon // 4**m
    v = v[:nblocks * 4**m]
    if len(v) == 0:
        return np.empty((0, 3), dtype=np.int64)
    sub = np.arange(len(v), dtype=np.int64) // 4 ** (m - k)
    q = _value_blocks(v, m - k)
    qmin = q.min()
    span = q.max() - qmin + 1
    pairs = np.unique(sub * span + (q - qmin))
    parent = (pairs // span) // 4**k
    qq = pairs % span
    keys, counts = np.unique(parent * span + qq, return_counts=True)
    return np.column_stack([keys // span, keys % span + qmin, counts]).astype(np.int64)


@dataclass(frozen=True)
class LocalTimeEvent:
    holds: bool
    gamma_min: float
    violation: tuple | None  # (m, k, p, q, count) of the first violation in scan order


def local_time_event(walk, n: int, gamma: float) -> LocalTimeEvent:
    """Check S_{m,k,p,q} <= gamma * n * 2^k for all k <= m <= n, p < 4^(n-m), q.

    Only visited value blocks can be nonzero, so the scan over q is finite.
    ``gamma_min`` is the smallest gamma for which the event holds.
    """
    if gamma < 2:
        raise ValueError("gamma must be at least 2")
    v = _values(walk)
    if len(v) < 4**n:
        raise ValueError(f"walk needs {4**n} points for order {n}")
    v = v[:4**n]
    worst = Fraction(0)
    violation = None
    for m in range(n + 1):
        for k in range(m + 1):
            table = local_time_table(v, m, k)
            if len(table) == 0:
                continue
            counts = table[:, 2]
            top = Fraction(int(counts.max()), max(n, 1) * 2**k)
            worst = max(worst, top)
            if violation is None:
                bad = np.flatnonzero(counts > gamma * n * 2**k)
                if len(bad):
                    p, q, c = table[bad[0]]
                    violation = (m, k, int(p), int(q), int(c))
    return LocalTimeEvent(violation is None, float(worst), violation)


def local_time_event_holds(walk, n: int, gamma: float) -> tuple[bool, tuple | None]:
    ev = local_time_event(walk, n, gamma)
    return ev.holds, ev.violation


def calibrate_gamma(walks, n: int, grid=None) -> float | None:
    """Smallest grid gamma >= 2 for which the event holds on every walk."""
    grid = np.arange(2.0, 1024.25, 0.25) if grid is None else np.sort(np.asarray(grid, dtype=float))
    need = max((local_time_event(w, n, 2.0).gamma_min for w in walks), default=0.0)
    for g in grid:
        if g >= 2 and g >= need:
            return float(g)
    return None


def event_failure_rate(walks, n: int, gamma: float) -> float:
    walks = list(walks)
    fails = sum(not local_time_event(w, n, gamma).holds for w in walks)
    return fails / len(walks)


@dataclass(frozen=True)
class CertificateReport:
    m: int
    k: int
    gamma: float
    assumption_local_time: bool
    assumption_max: bool
    bound: int | float  # integer part of (gamma * m*k * 2^(k+1))^(m+1), or inf
    lis_observed: int | None = None

    @property
    def applicable(self) -> bool:
        return self.assumption_local_time and self.assumption_max

    @property
    def sound(self) -> bool:
        return not (self.applicable and self.lis_observed is not None and self.lis_observed > self.bound)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bound"] = "inf" if self.bound == math.inf else str(self.bound)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CertificateReport":
        d = dict(d)
        d["bound"] = math.inf if d["bound"] == "inf" else int(d["bound"])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "CertificateReport":
        return cls.from_dict(json.loads(text))


def certificate_bound(m: int, k: int, gamma: float) -> int | float:
    """floor((gamma * m*k * 2^(k+1))^(m+1)) in exact arithmetic."""
    if math.isinf(gamma):
        return math.inf
    base = Fraction(gamma) * m * k * 2 ** (k + 1)
    return math.floor(base ** (m + 1))


def certified_upper_bound(walk, m: int, k: int, gamma: float, compute_lis: bool = True) -> CertificateReport:
    """Check both assumptions of the product bound on ``walk`` and report it.

    With n = m*k the walk must reach time 4^n.  The local time event is
    checked on [0, 4^n) and the range condition max_{i<=4^n} |S(i)| <= n 2^n
    directly.
    """
    if gamma < 2:
        raise ValueError("gamma must be at least 2")
    v = _values(walk)
    n = m * k
    if len(v) < 4**n + 1:
        raise ValueError(f"walk needs {4**n} steps for m*k = {n}")
    ev = local_time_event(v, n, gamma)
    max_ok = bool(np.abs(v[:4**n + 1]).max() <= n * 2**n)
    lis = lnds_length_1d(v[:4**n]) if compute_lis else None
    return CertificateReport(m, k, float(gamma), ev.holds, max_ok, certificate_bound(m, k, gamma), lis)


def theorem_ub_threshold(n: int) -> int:
    """floor(2^(n + 4 sqrt(n log2 n))) as an exact integer."""
    if n < 1:
        raise ValueError("n must be positive")
    with mpmath.workdps(30):
        exponent = n + 4 * mpmath.sqrt(n * mpmath.log(n, 2))
    digits = int(exponent * 0.30103) + 30
    with mpmath.workdps(digits):
        exponent = n + 4 * mpmath.sqrt(n * mpmath.log(n, 2))
        return int(mpmath.floor(mpmath.power(2, exponent)))


@dataclass(frozen=True)
class SubmultiplicativityProbe:
    n: int
    N: int
    ell: int
    trials: int
    p_ell_n: float
    p_n: float
    stderr: float

    @property
    def holds(self) -> bool:
        return self.p_ell_n <= self.p_n**self.ell + 3 * self.stderr


def submultiplicativity_probe(law: StepLaw, n: int, N: int, ell: int, trials: int, seed: int,
                              threads: int = 1, lis=None) -> SubmultiplicativityProbe:
    """Estimate P(LIS >= ell*N) and P(LIS >= N) on [0, 4^n) from the same trials.

    ``stderr`` combines the binomial error of the left side with the delta
    method error of p_N^ell.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    if lis is None:
        lis = lis_samples(law, n, trials, seed, threads)
    left = float(np.mean(lis >= ell * N))
    right = float(np.mean(lis >= N))
    se_left = math.sqrt(left * (1 - left) / trials)
    se_right = math.sqrt(right * (1 - right) / trials)
    se = math.hypot(se_left, ell * right ** (ell - 1) * se_right if ell > 1 else 0.0)
    return SubmultiplicativityProbe(n, N, ell, trials, left, right, se)


def lis_samples(law: StepLaw, n: int, trials: int, seed: int, threads: int = 1) -> np.ndarray:
    """LIS(S|[0, 4^n)) for independent keyed walks."""
    return batch.lnds_lengths(law, 4**n, trials, batch.base_key(seed, 4**n), npoints=4**n, threads=threads)


def local_time_samples(law: StepLaw, m: int, k: int, trials: int, seed: int) -> np.ndarray:
    """S_{m,k,0,0} for walks from the origin, one per trial."""
    out = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        v = generate_walk(law, 4**m - 1, seed, m, k, t).values
        table = local_time_table(v, m, k)
        hit = table[table[:, 1] == 0]
        out[t] = hit[0, 2] if len(hit) else 0
    return out


def tail_constant(samples: np.ndarray, k: int) -> int:
    """Smallest integer C with empirical P(S >= C 2^k) <= 1/2."""
    c = 1
    while np.mean(samples >= c * 2**k) > 0.5:
        c += 1
    return c
