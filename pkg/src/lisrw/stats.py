"""Exactly mergeable summary statistics and power-law fits."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats as sps

from . import rng

RESERVOIR = 4096


def _exact(x):
    if isinstance(x, (int, np.integer)):
        return int(x)
    return Fraction(float(x))


@dataclass
class Aggregate:
    """Count, exact sum and sum of squares, extremes, and a quantile sketch.

    Sums are kept as integers or exact fractions, so merging partial
    aggregates in any grouping gives exactly the aggregate of the whole.  The
    quantile sketch keeps the ``capacity`` samples with the smallest hashed
    trial ids; it is exact while count <= capacity and approximate beyond.
    """

    n: int = 0
    count: int = 0
    total: int | Fraction = 0
    total_sq: int | Fraction = 0
    min: float | None = None
    max: float | None = None
    capacity: int = RESERVOIR
    sketch: list = field(default_factory=list)  # (priority, id, value)

    def add(self, value, trial_id: int) -> None:
        v = _exact(value)
        self.count += 1
        self.total += v
        self.total_sq += v * v
        self.min = value if self.min is None else min(self.min, value)
        self.max = value if self.max is None else max(self.max, value)
        item = (-rng.child_key_py(0x51ED, trial_id), trial_id, value)
        if len(self.sketch) < self.capacity:
            heapq.heappush(self.sketch, item)
        elif item > self.sketch[0]:
            heapq.heapreplace(self.sketch, item)

    def extend(self, values, trial_ids=None) -> "Aggregate":
        ids = range(len(values)) if trial_ids is None else trial_ids
        for v, t in zip(np.asarray(values).tolist(), ids):
            self.add(v, int(t))
        return self

    @classmethod
    def of(cls, values, n: int = 0, trial_ids=None) -> "Aggregate":
        return cls(n=n).extend(values, trial_ids)

    def merge(self, other: "Aggregate") -> "Aggregate":
        if self.capacity != other.capacity:
            raise ValueError("cannot merge aggregates with different sketch sizes")
        mins = [x for x in (self.min, other.min) if x is not None]
        maxs = [x for x in (self.max, other.max) if x is not None]
        sketch = heapq.nlargest(self.capacity, self.sketch + other.sketch)
        heapq.heapify(sketch)
        return Aggregate(self.n, self.count + other.count, self.total + other.total,
                         self.total_sq + other.total_sq, min(mins) if mins else None,
                         max(maxs) if maxs else None, self.capacity, sketch)

    def __eq__(self, other):
        if not isinstance(other, Aggregate):
            return NotImplemented
        return (self.n, self.count, self.total, self.total_sq, self.min, self.max, sorted(self.sketch)) == (
            other.n, other.count, other.total, other.total_sq, other.min, other.max, sorted(other.sketch))

    @property
    def mean(self) -> float:
        return float(Fraction(self.total) / self.count) if self.count else math.nan

    @property
    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        c = self.count
        return float((Fraction(self.total_sq) - Fraction(self.total) ** 2 / c) / (c - 1))

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else math.nan

    @property
    def quantiles_exact(self) -> bool:
        return self.count <= self.capacity

    def quantile(self, q: float) -> float:
        if not self.sketch:
            return math.nan
        vals = sorted(v for _, _, v in self.sketch)
        return float(np.quantile(vals, q, method="inverted_cdf"))


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r2: float
    stderr: float
    window: tuple

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "stderr": self.stderr, "window": list(self.window)}


def loglog_fit(x, y, window=None) -> ExponentFit:
    """Least squares of log2 y on log2 x over points with x inside ``window``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        keep = (x >= window[0]) & (x <= window[1])
        x, y = x[keep], y[keep]
    else:
        window = (float(x.min()), float(x.max())) if len(x) else (math.nan, math.nan)
    if len(x) < 3:
        raise ValueError("need at least 3 points in the fit window")
    if np.any(y <= 0):
        raise ValueError("log-log fit needs positive values")
    lx, ly = np.log2(x), np.log2(y)
    if np.ptp(lx) == 0:
        raise ValueError("degenerate fit: all x equal")
    if np.ptp(ly) == 0:
        return ExponentFit(0.0, float(ly[0]), 1.0, 0.0, tuple(window))
    res = sps.linregress(lx, ly)
    r2 = min(1.0, max(0.0, res.rvalue**2))
    return ExponentFit(float(res.slope), float(res.intercept), r2, float(res.stderr), tuple(window))


def survival_curve(samples, censored, times):
    """Empirical P(T > t); censored samples are known to exceed their recorded value."""
    samples = np.asarray(samples)
    times = np.asarray(times)
    cap = samples[censored].min() if np.any(censored) else np.inf
    if np.any(times >= cap):
        raise ValueError("survival is only known below the censoring cap")
    srt = np.sort(samples)
    return 1.0 - np.searchsorted(srt, times, side="right") / len(samples)


def survival_fit(samples, censored, window, points: int = 25) -> ExponentFit:
    """Power-law exponent of the empirical survival function over ``window``."""
    lo, hi = window
    times = np.unique(np.round(np.geomspace(lo, hi, points)).astype(np.int64))
    surv = survival_curve(samples, censored, times)
    fit = loglog_fit(times, surv)
    return ExponentFit(fit.slope, fit.intercept, fit.r2, fit.stderr, (lo, hi))
