"""End-to-end acceptance checks, one test per criterion, at full tolerance.

Each test prints a single PASS/FAIL line (visible even without ``-s``) and
then asserts, so a failure is both reported and counted.
"""
import itertools
import math
import time

import numpy as np
import pytest

from lisrw.dyadic_lb import expected_size, sample_constructions
from lisrw.greedy_chain import orthant_exit_samples
from lisrw.lis_core import lis_bruteforce, lis_strict_1d, lnds_length_1d, lnds_length_dd, lnis_length_1d
from lisrw.mc_harness import (
    ExperimentSpec,
    dumps,
    fit_exponent,
    max_concentration_probe,
    petrov_probe,
    report_dict,
    run_scaling,
    trial_values,
)
from lisrw.multiscale import calibrate_gamma, certified_upper_bound, lis_samples, submultiplicativity_probe
from lisrw.walkgen import StepLaw, generate_walk

SRW = StepLaw()
SRW2 = StepLaw(d=2)


@pytest.fixture
def verdict(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}")
        assert ok, detail
    return emit


def test_01_oracle_equivalence(verdict):
    start = time.perf_counter()
    mismatches = 0
    for t in range(1000):
        v = generate_walk(SRW, 12, 101, t).values
        mismatches += lnds_length_1d(v) != lis_bruteforce(v)
    patterns = 0
    for length in range(0, 11):
        for signs in itertools.product((-1, 1), repeat=length):
            v = np.concatenate([[0], np.cumsum(signs)]).astype(np.int64)
            mismatches += lnds_length_1d(v) != lis_bruteforce(v)
            patterns += 1
    for t in range(500):
        p = generate_walk(SRW2, 10, 102, t).positions
        mismatches += lnds_length_dd(p) != lis_bruteforce(p)
    elapsed = time.perf_counter() - start
    verdict(1, "oracle equivalence", mismatches == 0 and elapsed < 60,
            f"{mismatches} mismatches over 1000 walks, {patterns} sign patterns, 500 2D walks in {elapsed:.1f}s")


def test_02_dyadic_mean(verdict):
    start = time.perf_counter()
    rows = []
    ok = True
    for n, trials in ((4, 10**4), (6, 10**3)):
        s = sample_constructions(n, trials, 2000 + n)
        tol = 3 * math.sqrt(2 ** (2 * n - 1) / trials)
        mean = s.sizes.mean()
        ok &= abs(mean - expected_size(n)) <= tol
        rows.append(f"n={n}: {mean:.3f} vs {expected_size(n)}±{tol:.3f} ({s.censored} censored)")
    elapsed = time.perf_counter() - start
    verdict(2, "dyadic mean", bool(ok) and elapsed < 60, "; ".join(rows) + f" in {elapsed:.1f}s")


def test_03_geometric_excursions(verdict):
    s = sample_constructions(5, 10**4, 3003)
    x = s.level_counts(2).ravel().astype(float)
    N = len(x)
    mean = x.mean()
    se_mean = x.std(ddof=1) / math.sqrt(N)
    var = x.var(ddof=1)
    m4 = np.mean((x - mean) ** 4)
    se_var = math.sqrt((m4 - var**2) / N)
    target = mean * (mean - 1)
    ok = abs(mean - 4) <= 3 * se_mean and abs(var - target) <= 3 * se_var
    verdict(3, "geometric excursion law", ok,
            f"mean {mean:.4f} (4±{3 * se_mean:.4f}), variance {var:.3f} vs {target:.3f}±{3 * se_var:.3f}, N={N}")


def test_04_certificate_soundness(verdict):
    bad = checked = applicable = 0
    for m, k in ((2, 2), (3, 2)):
        walks = [generate_walk(SRW, 4 ** (m * k), 404, m, t) for t in range(500)]
        calibrated = calibrate_gamma(walks[:50], m * k)
        grid = sorted({2.0, 2.5, 3.0, 4.0} | ({calibrated} if calibrated else set()))
        for w in walks:
            for g in grid:
                rep = certified_upper_bound(w, m, k, g)
                checked += 1
                applicable += rep.applicable
                bad += rep.applicable and rep.lis_observed > rep.bound
    verdict(4, "certificate soundness", bad == 0,
            f"{bad} unsound of {checked} certificates ({applicable} with both assumptions holding)")


def test_05_submultiplicativity(verdict):
    trials = 10**5
    lis = lis_samples(SRW, 4, trials, 505)
    N = int(np.quantile(lis, 0.9))
    pr = submultiplicativity_probe(SRW, 4, N, 2, trials, 505, lis=lis)
    verdict(5, "submultiplicativity", pr.holds,
            f"N={N}: P(LIS>=2N)={pr.p_ell_n:.5f} <= P(LIS>=N)^2={pr.p_n**2:.5f} + 3se ({3 * pr.stderr:.5f})")


def test_06_scaling_exponent(verdict):
    sizes = tuple(2**e for e in range(10, 21))
    res = run_scaling(ExperimentSpec(SRW, sizes, 200, "exact-lis", 606))
    fit = fit_exponent(res.table)
    n = 2**16
    mean16 = res.table[n].mean
    floor16 = 0.001 * math.sqrt(n) * math.log2(n)
    ok = 0.52 <= fit.slope <= 0.68 and mean16 >= floor16
    verdict(6, "scaling exponent", ok,
            f"slope {fit.slope:.4f} in [0.52, 0.68], mean at 2^16 {mean16:.1f} >= {floor16:.3f}")


def test_07_exit_time_tails(verdict):
    two = orthant_exit_samples(SRW2, 10**6, 10**5, 707).fit((10**2, 10**4))
    one = orthant_exit_samples(SRW, 10**6, 10**5, 708).fit((10**2, 10**4))
    ok = abs(two.slope + 1 / 3) <= 0.08 and abs(one.slope + 1 / 2) <= 0.05
    verdict(7, "orthant exit tails", ok, f"d=2 slope {two.slope:.4f} (-1/3±0.08), d=1 slope {one.slope:.4f} (-1/2±0.05)")


def test_08_chain_growth(verdict):
    spec = ExperimentSpec(SRW2, (10**3, 10**4, 10**5), 500, "greedy-chain", 808)
    fit = fit_exponent(run_scaling(spec).table)
    n, T = 10**4, 50
    greedy, _, _ = trial_values(ExperimentSpec(SRW2, (n,), T, "greedy-chain", 808), n)
    exact, _, _ = trial_values(ExperimentSpec(SRW2, (n,), T, "exact-lis", 808), n)
    below = int(np.sum(greedy <= exact))
    ok = 0.30 <= fit.slope <= 0.40 and below == T
    verdict(8, "2D chain growth", ok, f"slope {fit.slope:.4f} in [0.30, 0.40]; greedy <= DP on {below}/{T} at n=10^4")


def test_09_concentration(verdict):
    mx = max_concentration_probe(SRW, 10**4, [2.0, 3.0], 10**5, 909)
    max_ok = all(r.tail <= r.chebyshev + 3 * r.stderr for r in mx.rows)
    c = [petrov_probe(SRW, n, 1.0, 10**5, 910).c_hat for n in (10**4, 4 * 10**4)]
    ratio = c[1] / c[0]
    ok = max_ok and abs(ratio - 1) <= 0.2
    tails = ", ".join(f"lam={r.lam:g}: {r.tail:.5f} <= {r.chebyshev:.4f}" for r in mx.rows)
    verdict(9, "concentration probes", ok, f"{tails}; c_hat {c[0]:.4f} vs {c[1]:.4f} (ratio {ratio:.3f})")


def test_10_erdos_szekeres(verdict):
    rng = np.random.default_rng(1010)
    lengths = np.unique(np.round(np.exp(rng.uniform(0, math.log(10**4), 10**5))).astype(int), return_counts=True)
    laws = [SRW, StepLaw("lazy"), StepLaw("uniform", a=3), StepLaw("normal")]
    violations = total = 0
    idx = 0
    for length, count in zip(*lengths):
        for _ in range(count):
            v = generate_walk(laws[idx % 4], int(length) - 1, 1010, idx).values
            idx += 1
            up, down = lnds_length_1d(v), lnis_length_1d(v)
            # chains of one kind and antichains of the other cover the sequence
            violations += max(up, down) ** 2 < length or up * lis_strict_1d(-v) < length
            total += 1
    verdict(10, "Erdos-Szekeres audit", violations == 0 and total == 10**5,
            f"{violations} violations over {total} sequences, lengths 1..{lengths[0].max()}")


def test_11_thread_invariance(verdict):
    specs = [
        ExperimentSpec(SRW, tuple(2**e for e in range(6, 12)), 64, "exact-lis", 1111),
        ExperimentSpec(SRW, (64, 256, 1024), 64, "record-count", 1111),
        ExperimentSpec(SRW, (64, 256, 1024), 64, "level-set", 1111),
        ExperimentSpec(SRW2, (100, 1000, 10000), 64, "greedy-chain", 1111),
        ExperimentSpec(SRW, (4, 8, 16), 64, "dyadic-A", 1111),
    ]
    reports = {t: dumps(report_dict([run_scaling(s, threads=t) for s in specs])) for t in (1, 2, 4)}
    rerun = dumps(report_dict([run_scaling(s, threads=3) for s in specs]))
    ok = len(set(reports.values())) == 1 and rerun == reports[1]
    verdict(11, "thread-count reproducibility", ok,
            f"{len(reports[1])} byte report identical across threads 1, 2, 3, 4: {ok}")
