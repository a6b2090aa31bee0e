import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lisrw.lis_core import (
    MonotoneChain,
    lis_bruteforce,
    lis_strict_1d,
    lnds_chain_1d,
    lnds_length_1d,
    lnds_length_dd,
    lnis_length_1d,
    longest_level_set,
    record_times,
    variation,
)
from lisrw.walkgen import StepLaw, generate_walk


def _enumerate(points, ok):
    """Reference count by itertools, independent of the numba oracle."""
    n = len(points)
    for size in range(n, 0, -1):
        for comb in itertools.combinations(range(n), size):
            if all(ok(points[a], points[b]) for a, b in zip(comb, comb[1:])):
                return size
    return 0


def _weak(a, b):
    return np.all(np.asarray(a) <= np.asarray(b))


def test_enumeration_reference_values():
    assert _enumerate([0, 1, 0, 1], _weak) == 3
    assert _enumerate([0, 1, 0, 1], lambda a, b: a < b) == 2
    assert _enumerate([0, 1, 0, 1], lambda a, b: a >= b) == 2
    assert _enumerate([(0, 0), (1, -1), (-1, 1)], _weak) == 1


@pytest.mark.parametrize("seq,expected", [([5, 5, 5, 5], 4), ([3, 2, 1], 1), ([0, 1, 0, 1], 3), ([], 0)])
def test_lnds_examples(seq, expected):
    assert lnds_length_1d(seq) == expected


def test_lnds_chain_examples():
    c = lnds_chain_1d([0, 1, 0, 1])
    assert len(c) == 3 and c.is_valid_for([0, 1, 0, 1])
    assert lnds_chain_1d([7]).indices.tolist() == [0]
    assert len(lnds_chain_1d([2, 1])) == 1
    assert len(lnds_chain_1d([])) == 0


@pytest.mark.parametrize("seq,expected", [([5, 5, 5], 1), ([1, 2, 3], 3), ([0, 1, 0, 1], 2)])
def test_strict_examples(seq, expected):
    assert lis_strict_1d(seq) == expected


@pytest.mark.parametrize("seq,expected", [([3, 2, 1], 3), ([5, 5], 2), ([0, 1, 0, 1], 2)])
def test_lnis_examples(seq, expected):
    assert lnis_length_1d(seq) == expected


def test_dd_examples():
    assert lnds_length_dd([(0, 0), (1, 1), (2, 2)]) == 3
    assert lnds_length_dd([(0, 0), (1, -1), (-1, 1)]) == 1
    assert lnds_length_dd([(0, 0), (0, 0)]) == 2


def test_bruteforce_limits():
    with pytest.raises(ValueError):
        lis_bruteforce(np.zeros(25))
    for seq in ([1], [2, 1], [1, 1, 0]):
        assert lis_bruteforce(seq, 1) == lnds_length_dd(seq)


def test_bruteforce_agrees_with_enumeration():
    rs = np.random.default_rng(0)
    for _ in range(50):
        seq = rs.integers(-3, 4, size=rs.integers(1, 9))
        assert lis_bruteforce(seq) == _enumerate(seq, _weak)
        pts = rs.integers(-2, 3, size=(rs.integers(1, 8), 2))
        assert lis_bruteforce(pts) == _enumerate(pts, _weak)


def test_oracle_on_random_walks():
    for t in range(200):
        v = generate_walk(StepLaw(), 12, 5, t).values
        assert lnds_length_1d(v) == lis_bruteforce(v)
    for t in range(100):
        p = generate_walk(StepLaw(d=2), 10, 6, t).positions
        assert lnds_length_dd(p) == lis_bruteforce(p)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-5, 5), max_size=12))
def test_fast_paths_match_oracle(seq):
    assert lnds_length_1d(seq) == lis_bruteforce(seq)
    assert lis_strict_1d(seq) == _enumerate(seq, lambda a, b: a < b)
    assert lnis_length_1d(seq) == lis_bruteforce([-x for x in seq])
    assert lnds_length_dd(seq) == lnds_length_1d(seq)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), max_size=60))
def test_witness_is_sound(seq):
    c = lnds_chain_1d(seq)
    assert len(c) == lnds_length_1d(seq)
    assert c.is_valid_for(seq)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=1, max_size=200))
def test_erdos_szekeres_and_baselines(seq):
    up = lnds_length_1d(seq)
    assert max(up, lnis_length_1d(seq)) >= math.isqrt(len(seq) - 1) + 1 or len(seq) == 0
    assert up >= len(record_times(seq))
    assert up >= len(longest_level_set(seq))
    assert record_times(seq).is_valid_for(seq)
    assert longest_level_set(seq).is_valid_for(seq)


def test_variation_examples():
    assert variation([0, 1, 2], [0, 2]) == 2
    assert variation([0, 3, 1], [0, 1, 2]) == 5
    assert variation([4, 2], [1]) == 0
    with pytest.raises(IndexError):
        variation([0, 1], [0, 2])


def test_variation_of_increasing_restriction_is_diameter():
    v = generate_walk(StepLaw(), 500, 3).values
    chain = lnds_chain_1d(v).indices
    assert variation(v, chain) == v[chain].max() - v[chain].min()


def test_record_examples():
    assert record_times([0, 1, 1, 2]).indices.tolist() == [0, 1, 2, 3]
    assert record_times([0, -1, 2]).indices.tolist() == [0, 2]


def test_record_count_grows_like_sqrt():
    sizes = [10**2, 10**3, 10**4]
    means = []
    for n in sizes:
        means.append(np.mean([len(record_times(generate_walk(StepLaw(), n, 4, n, t))) for t in range(1000)]))
    slope = np.polyfit(np.log(sizes), np.log(means), 1)[0]
    assert 0.45 <= slope <= 0.55


def test_level_set_examples():
    assert longest_level_set([0, 1, 0]).indices.tolist() == [0, 2]
    assert longest_level_set([1, 1, 2]).indices.tolist() == [0, 1]
    assert longest_level_set([0, 1, 0, 1]).indices.tolist() == [0, 2]


def test_chain_validation_catches_bad_chains():
    seq = [0, 2, 1]
    assert not MonotoneChain(np.array([1, 2])).is_valid_for(seq)
    assert not MonotoneChain(np.array([0, 0])).is_valid_for(seq)
    assert not MonotoneChain(np.array([0, 3])).is_valid_for(seq)
    assert MonotoneChain(np.array([0, 2])).is_valid_for(seq)


def test_chain_csv():
    assert MonotoneChain(np.array([0, 3])).to_csv() == "index\n0\n3\n"
