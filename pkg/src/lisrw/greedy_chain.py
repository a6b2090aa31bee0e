"""Greedy monotone chains in d dimensions and orthant entrance times.

The greedy chain starts at a_0 = 0 and jumps to the first later time at
which the walk sits in the closed non-negative orthant translated to the
current chain point.  Its increments are i.i.d. copies of the entrance time
tau = inf{n > 0 : S(n) >= 0 coordinatewise}.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from . import batch, rng
from .lis_core import MonotoneChain, _as_points, lnds_length_dd
from .stats import ExponentFit, survival_curve, survival_fit
from .walkgen import StepLaw, generate_walk


@dataclass(frozen=True, eq=False)
class GreedyChainResult:
    chain: MonotoneChain
    truncated_at_horizon: bool  # the walk continues to a successor past the horizon

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.chain.indices)

    def __len__(self):
        return len(self.chain)


@nb.njit(cache=True, nogil=True)
def _greedy_path(points, horizon):
    n, d = points.shape
    out = np.empty(horizon, dtype=np.int64)
    out[0] = 0
    size = 1
    ref = 0
    for t in range(1, horizon):
        ok = True
        for c in range(d):
            if points[t, c] < points[ref, c]:
                ok = False
                break
        if ok:
            out[size] = t
            size += 1
            ref = t
    return out[:size]


def greedy_chain(walk, horizon: int | None = None) -> GreedyChainResult:
    """Greedy chain of the walk restricted to times [0, horizon)."""
    pts = _as_points(walk)
    horizon = len(pts) if horizon is None else horizon
    if not 0 < horizon <= len(pts):
        raise ValueError("horizon must lie in [1, number of points]")
    idx = _greedy_path(pts, horizon)
    last = pts[idx[-1]]
    beyond = bool(np.any(np.all(pts[horizon:] >= last, axis=1))) if horizon < len(pts) else False
    return GreedyChainResult(MonotoneChain(idx, pts.shape[1]), beyond)


@nb.njit(cache=True, nogil=True)
def _increments_kernel(base, start, stop, code, a, d, count, cap):
    """Up to ``count`` greedy increments per trial, each capped at ``cap``.

    Entries after a censored increment are -1; the censored one holds cap.
    """
    out = np.full((stop - start, count), -1, dtype=np.int64)
    cens = np.zeros(stop - start, dtype=np.bool_)
    pos = np.zeros(d)
    ref = np.zeros(d)
    for t in range(start, stop):
        key = rng.child_key(base, t)
        for c in range(d):
            pos[c] = 0.0
            ref[c] = 0.0
        j = 0
        for i in range(count):
            found = False
            for s in range(1, cap + 1):
                ok = True
                for c in range(d):
                    pos[c] += rng.draw(key, code, a, j)
                    j += 1
                    if pos[c] < ref[c]:
                        ok = False
                if ok:
                    out[t - start, i] = s
                    for c in range(d):
                        ref[c] = pos[c]
                    found = True
                    break
            if not found:
                out[t - start, i] = cap
                cens[t - start] = True
                break
    return out, cens


@nb.njit(cache=True, nogil=True)
def _chain_length_kernel(base, start, stop, code, a, d, horizon):
    out = np.empty(stop - start, dtype=np.int64)
    pos = np.zeros(d)
    ref = np.zeros(d)
    for t in range(start, stop):
        key = rng.child_key(base, t)
        for c in range(d):
            pos[c] = 0.0
            ref[c] = 0.0
        size = 1
        j = 0
        for s in range(1, horizon):
            ok = True
            for c in range(d):
                pos[c] += rng.draw(key, code, a, j)
                j += 1
                if pos[c] < ref[c]:
                    ok = False
            if ok:
                size += 1
                for c in range(d):
                    ref[c] = pos[c]
        out[t - start] = size
    return out


@dataclass(frozen=True)
class ExitSamples:
    tau: np.ndarray
    censored: np.ndarray
    cap: int

    def survival(self, times) -> np.ndarray:
        return survival_curve(self.tau, self.censored, times)

    def fit(self, window=None, points: int = 25) -> ExponentFit:
        """Survival exponent over ``window`` (default [100, cap/10])."""
        window = (100, self.cap // 10) if window is None else window
        return survival_fit(self.tau, self.censored, window, points)


def orthant_exit_samples(law: StepLaw, trials: int, cap: int, seed: int, threads: int = 1) -> ExitSamples:
    """i.i.d. orthant entrance times, censored at ``cap``.

    Trial t uses the same stream as ``generate_walk(law, n, seed, t)``.
    """
    inc, cens = greedy_increments(law, trials, 1, cap, seed, threads)
    return ExitSamples(inc[:, 0], cens, cap)


def greedy_increments(law: StepLaw, trials: int, count: int, cap: int, seed: int, threads: int = 1):
    base = batch.base_key(seed)
    return batch.run_chunks(
        lambda s, e: _increments_kernel(base, s, e, law.code, law.param, law.d, count, cap), trials, threads)


def chain_lengths(law: StepLaw, n: int, trials: int, seed: int, threads: int = 1,
                  stream: tuple = ()) -> np.ndarray:
    """Greedy chain length on [0, n) for each trial.

    Trial t reads the walk ``generate_walk(law, n - 1, seed, *stream, t)``.
    """
    base = batch.base_key(seed, *stream)
    return batch.run_chunks(
        lambda s, e: _chain_length_kernel(base, s, e, law.code, law.param, law.d, n), trials, threads)


@dataclass(frozen=True)
class TailTable:
    n: int
    epsilons: tuple
    estimates: tuple  # P(greedy length < eps n^(1/3))
    c_hat: float
    exact_estimates: tuple | None = None  # same with exact LIS, when computed
    exact_dominates: bool | None = None  # greedy <= exact LIS on every trial


def chain_length_tail(law: StepLaw, n: int, epsilon_grid, trials: int, seed: int,
                      exact: bool = False, threads: int = 1) -> TailTable:
    """Estimate P(LIS(S|[0,n)) < eps n^(1/3)) using the greedy chain as the lower bound."""
    eps = tuple(float(e) for e in epsilon_grid)
    lengths = chain_lengths(law, n, trials, seed, threads)
    scale = n ** (1 / 3)
    est = tuple(float(np.mean(lengths < e * scale)) for e in eps)
    c_hat = max((p / e for p, e in zip(est, eps) if e > 0), default=0.0)
    if not exact:
        return TailTable(n, eps, est, c_hat)
    if n > 10**4:
        raise ValueError("exact LIS is quadratic; limited to n <= 10^4")
    lis = np.array([lnds_length_dd(generate_walk(law, n - 1, seed, t).positions) for t in range(trials)])
    exact_est = tuple(float(np.mean(lis < e * scale)) for e in eps)
    return TailTable(n, eps, est, c_hat, exact_est, bool(np.all(lengths <= lis)))


def one_step_entry_probability(law: StepLaw) -> float:
    """P(tau = 1): probability that one step lands in the closed orthant."""
    if law.kind == "simple":
        return 0.5**law.d
    if law.kind == "lazy":
        return 0.75**law.d
    if law.kind == "uniform":
        return ((law.a + 1) / (2 * law.a + 1)) ** law.d
    return 0.5**law.d

