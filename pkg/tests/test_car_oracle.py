import numpy as np
import pytest
from hypothesis import given, strategies as st

from carflow import car_oracle as car
from carflow.car_oracle import CarError
from carflow.opdisc import qe_functional

from conftest import random_unitary


def rvec(rng, d):
    return rng.normal(size=d) + 1j * rng.normal(size=d)


def random_projection(rng, d, rank=None):
    u = random_unitary(rng, d)
    r = int(rng.integers(0, d + 1)) if rank is None else rank
    return u[:, :r] @ u[:, :r].conj().T


def random_covariance(rng, d):
    u = random_unitary(rng, d)
    return u @ np.diag(rng.uniform(0, 1, d)) @ u.conj().T


def test_single_mode():
    rep = car.build_rep(1)
    c = rep.generators[0]
    assert np.array_equal(c, np.array([[0, 1], [0, 0]]))
    assert np.array_equal(c @ c.conj().T + c.conj().T @ c, np.eye(2))


@pytest.mark.parametrize("n", [1, 2, 4, 6, 8])
def test_car_relations(n):
    assert car.car_deviation(car.build_rep(n)) <= 1e-12


def test_mode_range():
    for n in (0, 11):
        with pytest.raises(CarError):
            car.build_rep(n)


@given(st.integers(0, 2**31))
def test_relations_on_vectors(seed):
    rng = np.random.default_rng(seed)
    rep = car.build_rep(3)
    x, y = rvec(rng, 3), rvec(rng, 3)
    ax, ay = rep.a(x), rep.a(y)
    assert np.max(np.abs(ax @ ax)) < 1e-12
    assert np.max(np.abs(ax @ ay + ay @ ax)) < 1e-12
    inner = np.sum(x * np.conj(y))
    assert np.max(np.abs(ax @ ay.conj().T + ay.conj().T @ ax - inner * np.eye(8))) < 1e-12


def test_quasi_free_examples():
    e1, e2 = np.eye(2)
    assert abs(car.quasi_free_moment(0.5 * np.eye(2), [e1], [e1]) - 0.5) < 1e-15
    assert car.quasi_free_moment(0.5 * np.eye(2), [e1, e2], [e1]) == 0
    assert abs(car.quasi_free_moment(np.diag([0.3, 0.8]), [e1, e2], [e1, e2]) - 0.24) < 1e-15
    with pytest.raises(CarError):
        car.quasi_free_moment(np.eye(2), [np.ones(3)], [np.ones(3)])
    with pytest.raises(CarError):
        car.quasi_free_moment(np.diag([1.5, 0.0]), [e1], [e1])


def test_fock_extremes(rng):
    x, y = rvec(rng, 3), rvec(rng, 3)
    word = car.normal_word([x], [y])
    assert abs(car.fock_state_expectation(np.zeros((3, 3)), word)) < 1e-14
    expected = np.sum(x * np.conj(y))
    assert abs(car.fock_state_expectation(np.eye(3), word) - expected) < 1e-12


def test_fock_rejects_non_projection():
    with pytest.raises(CarError):
        car.fock_state_expectation(0.5 * np.eye(2), car.normal_word([np.ones(2)], [np.ones(2)]))


def test_rank_one_projection_words(rng):
    for _ in range(20):
        p = random_projection(rng, 3, rank=1)
        m = int(rng.integers(0, 3))
        xs = [rvec(rng, 3) for _ in range(m)]
        ys = [rvec(rng, 3) for _ in range(m)]
        fock = car.fock_state_expectation(p, car.normal_word(xs, ys))
        assert abs(fock - car.quasi_free_moment(p, xs, ys)) < 1e-10


@given(st.integers(3, 5), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2**31))
def test_determinant_formula(d, n, m, seed):
    rng = np.random.default_rng(seed)
    p = random_projection(rng, d)
    xs = [rvec(rng, d) for _ in range(n)]
    ys = [rvec(rng, d) for _ in range(m)]
    fock = car.fock_state_expectation(p, car.normal_word(xs, ys))
    assert abs(fock - car.quasi_free_moment(p, xs, ys)) < 1e-10


@given(st.integers(2, 4), st.integers(0, 2), st.integers(0, 2**31))
def test_mixed_state_determinant_formula(d, n, seed):
    rng = np.random.default_rng(seed)
    a = random_covariance(rng, d)
    xs = [rvec(rng, d) for _ in range(n)]
    ys = [rvec(rng, d) for _ in range(n)]
    rho = car.density_matrix(car.build_rep(d), a)
    assert abs(np.trace(rho) - 1) < 1e-12
    val = car.state_expectation(a, car.normal_word(xs, ys))
    assert abs(val - car.quasi_free_moment(a, xs, ys)) < 1e-10


def test_gauge_examples(rng):
    a = random_covariance(rng, 3)
    x, y, z = rvec(rng, 3), rvec(rng, 3), rvec(rng, 3)
    words = [[("a", x)], [("a", x), ("a", y)], [("a", x), ("a*", y), ("a*", z)]]
    rep = car.gauge_invariance_check(a, words)
    assert rep.checked == 3 and rep.passed and rep.max_abs < 1e-12


def test_gauge_random(rng):
    a = random_covariance(rng, 3)
    words = car.random_unequal_words(rng, 3, 4, 40)
    rep = car.gauge_invariance_check(a, words)
    assert rep.checked == 40 and rep.passed


@given(st.integers(1, 4), st.integers(0, 2**31))
def test_positivity(d, seed):
    rng = np.random.default_rng(seed)
    a = random_covariance(rng, d)
    x = rvec(rng, d)
    v = car.quasi_free_moment(a, [x], [x])
    assert abs(v.imag) < 1e-12 and v.real >= -1e-10
    if d >= 2:
        u = random_unitary(rng, d)
        pair = [u[:, 0], u[:, 1]]
        w = car.quasi_free_moment(a, pair, pair)
        assert abs(w.imag) < 1e-10 and w.real >= -1e-10


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_qe_of_projection_vanishes(d, seed):
    p = random_projection(np.random.default_rng(seed), d)
    assert abs(qe_functional(p, p)) < 1e-10


def test_parse_word():
    w = car.parse_word("a(1,0) a*(0,1j)")
    assert [k for k, _ in w] == ["a", "a*"]
    assert np.array_equal(w[1][1], np.array([0, 1j]))
    with pytest.raises(CarError):
        car.parse_word("b(1)")
    rep = car.build_rep(2)
    op = car.word_operator(rep, w)
    assert np.allclose(op, rep.a(np.array([1, 0])) @ rep.a_star(np.array([0, 1j])))
