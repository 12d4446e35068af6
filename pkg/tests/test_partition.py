import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import special

from carflow import partition
from carflow.partition import IntervalUnion, PartitionError, Profile


@pytest.fixture(scope="module")
def half():
    return partition.build_from_mu(0.5)


def harmonic_profile():
    return Profile("inverse", lambda x: 1.0 / np.asarray(x, float), lambda y: 1.0 / np.asarray(y, float))


def test_first_points():
    s = partition.build_from_mu(0.5, n_max=3)
    assert np.allclose(s.a.astype(float), [0.0, 1.0, 1.25, 1.25 + 1 / 9], rtol=0, atol=1e-15)


def test_limit_is_zeta_two(half):
    assert abs(half.a_limit - math.pi**2 / 6) < 1e-6


@pytest.mark.parametrize("mu", [0.2, 0.5, 0.7, 0.9])
def test_limit_against_zeta(mu):
    s = partition.build_from_mu(mu, n_max=20_000)
    assert abs(s.a_limit - special.zeta(1 / (1 - mu))) < 1e-6 * special.zeta(1 / (1 - mu))
    # the area bound dominates the true tail
    true_tail = special.zeta(1 / (1 - mu)) - float(s.a[-1])
    assert true_tail <= s.tail_bound * (1 + 1e-9)


def test_power_profile_x_minus_03():
    # h(x) = x^{-0.3} has inverse y^{-1/0.3}
    s = partition.build_from_h(partition.power_profile(0.7))
    assert abs(s.a_limit - special.zeta(1 / 0.3)) < 1e-6


@pytest.mark.parametrize("mu", [0.3, 0.5, 0.8])
def test_lengths_strictly_decreasing(mu):
    s = partition.build_from_mu(mu, n_max=5000)
    assert np.all(np.diff(s.lengths) < 0)
    assert np.all(np.diff(s.a) > 0)


def test_build_from_h_matches_mu():
    prof = Profile("sqrt", lambda x: np.asarray(x, float) ** -0.5, lambda y: np.asarray(y, float) ** -2.0,
                   lambda x: 2 * math.sqrt(x))
    a = partition.build_from_h(prof, 1000)
    b = partition.build_from_mu(0.5, 1000)
    assert np.array_equal(a.a, b.a) and a.a.dtype == np.longdouble


def test_rejects_non_integrable_profile():
    with pytest.raises(PartitionError):
        partition.build_from_h(harmonic_profile(), 100)


def test_rejects_bad_mu():
    for mu in (0.0, 1.0, -0.2):
        with pytest.raises(PartitionError):
            partition.build_from_mu(mu)


def test_rejects_increasing_profile():
    bad = Profile("up", lambda x: np.asarray(x, float), lambda y: np.asarray(y, float))
    with pytest.raises(PartitionError):
        partition.build_from_h(bad, 10)


def test_o_measure(half):
    assert abs(half.O.measure - half.O_measure) < 1e-12
    assert half.O_measure == math.fsum(half.lengths[0::2].tolist())


def test_sym_diff_examples():
    o = IntervalUnion.of([(0, 1), (2, 3)])
    assert partition.sym_diff_measure(o, 0.0) == 0.0
    assert partition.sym_diff_measure(o, 0.5) == 2.0
    assert partition.sym_diff_measure(IntervalUnion.of([(0, 1)]), 2.0) == 2.0


intervals = st.lists(st.tuples(st.floats(0, 50), st.floats(0.01, 3)), min_size=1, max_size=6)


def _union(raw):
    pairs, end = [], -1.0
    for start, length in sorted(raw):
        start = max(start, end + 0.01)
        pairs.append((start, start + length))
        end = start + length
    return IntervalUnion.of(pairs)


def _sym_diff_brute(o, x, n=200_001):
    lo, hi = min(o.lo[0], o.lo[0] + x) - 1, max(o.hi[-1], o.hi[-1] + x) + 1
    t = np.linspace(lo, hi, n)
    a = np.zeros(n, bool)
    b = np.zeros(n, bool)
    for p, q in o.pairs():
        a |= (t > p) & (t < q)
        b |= (t > p + x) & (t < q + x)
    return np.count_nonzero(a ^ b) * (t[1] - t[0])


@given(intervals, st.floats(-20, 20))
def test_sym_diff_symmetric_and_brute(raw, x):
    o = _union(raw)
    m = partition.sym_diff_measure(o, x)
    assert abs(m - partition.sym_diff_measure(o, -x)) < 1e-9
    assert abs(m - _sym_diff_brute(o, x)) < 0.01


@given(intervals, st.floats(-10, 10), st.floats(-10, 10))
def test_sym_diff_subadditive(raw, x, y):
    o = _union(raw)
    m = partition.sym_diff_measure
    assert m(o, x + y) <= m(o, x) + m(o, y) + 1e-9


def test_min_sum_examples(half):
    assert abs(partition.min_sum(half, 2.0) - math.pi**2 / 6) < 1e-6
    assert abs(partition.min_sum(half, 0.5) - (0.75 + math.pi**2 / 6 - 1.25)) < 1e-6
    assert partition.min_sum(half, 1e-9) < 1e-4


@given(st.floats(1e-8, 5.0), st.floats(1e-8, 5.0))
def test_min_sum_monotone_concave(x, y):
    s = partition.build_from_mu(0.5, 20_000)
    assume(abs(x - y) > 1e-9)
    lo, hi = sorted((x, y))
    f = lambda t: partition.min_sum(s, t)  # noqa: E731
    assert f(lo) <= f(hi) + 1e-12
    assert f(0.5 * (lo + hi)) >= 0.5 * (f(lo) + f(hi)) - 1e-9
    assert f(hi) <= s.a_limit + 1e-12


def test_chain_worked_example(half):
    c = partition.check_oestimate_chain(half, 0.25)
    assert c.passed
    assert abs(c.lower - 0.25) < 1e-15
    assert abs(c.upper_int - 2.0) < 1e-12
    assert c.lower <= c.mid <= c.upper_sum <= c.upper_int


def test_chain_saturation(half):
    x = 10.0
    c = partition.check_oestimate_chain(half, x)
    assert abs(c.mid - 2 * half.O.measure) < 1e-12
    assert c.passed


@pytest.mark.parametrize("mu", [0.3, 0.5, 0.7])
def test_chain_random_x(mu, rng):
    s = partition.build_from_mu(mu)
    for x in 10.0 ** rng.uniform(-4, 0.5, 50):
        assert partition.check_oestimate_chain(s, float(x)).passed, x


def test_exports(tmp_path):
    s = partition.build_from_mu(0.5, 10)
    s.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "n,a_n,len_I_n" and len(lines) == 11
    assert lines[2] == "1,1.0,0.25"
    partition.chain_curve_csv(s, [0.1, 0.2], tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "x,symdiff,min_sum,lower_bound,upper_bound"


def test_interval_union_validation():
    with pytest.raises(PartitionError):
        IntervalUnion.of([(0, 2), (1, 3)])
    with pytest.raises(PartitionError):
        IntervalUnion(np.array([1.0]), np.array([0.0]))
    assert IntervalUnion.of([]).measure == 0.0
