import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from carflow.symbol import (
    ProjectionMatrix,
    SymbolError,
    limit_at_infinity,
    load_sampled,
    make_constant,
    make_jump,
    make_loglog,
    make_nu,
    make_powers,
    make_powers_original,
    nearest_projection,
    outer_cesaro_mean,
    theta_loglog,
    theta_zero,
    write_sampled,
)

from conftest import HALF_ONES, random_unitary

finite_p = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def test_constant_identity():
    s = make_constant(np.eye(2))
    assert np.array_equal(s.evaluate(5.0), np.eye(2))
    assert s.parity == "even" and s.family == "constant"
    assert np.all(s.derivative(np.array([1.0, 2.0])) == 0)


def test_constant_half_ones_idempotent():
    s = make_constant(HALF_ONES)
    v = s.evaluate(np.linspace(-10, 10, 7))
    assert np.max(np.abs(v @ v - v)) == 0.0


def test_constant_rejects_non_projection():
    with pytest.raises(SymbolError):
        make_constant([[1, 0], [0, 0.5]])


def test_powers_original_at_zero():
    v = make_powers_original().evaluate(0.0)
    expected = 0.5 * np.array([[1, np.exp(1j)], [np.exp(-1j), 1]])
    assert np.max(np.abs(v - expected)) < 1e-15


def test_theta_zero_gives_half_ones():
    s = make_powers(theta_zero())
    assert np.max(np.abs(s.evaluate(np.array([-3.0, 0.0, 7.0])) - HALF_ONES)) < 1e-15


@given(st.floats(min_value=0.01, max_value=3.0), finite_p)
def test_powers_spectrum_is_zero_one(nu, p):
    v = make_nu(nu).evaluate(p)
    assert abs(np.trace(v) - 1) < 1e-12
    assert abs(np.linalg.det(v)) < 1e-12
    assert np.allclose(np.linalg.eigvalsh(v), [0.0, 1.0], atol=1e-12)


@given(st.floats(min_value=0.01, max_value=3.0), finite_p)
def test_powers_even(nu, p):
    s = make_nu(nu)
    assert np.max(np.abs(s.evaluate(p) - s.evaluate(-p))) <= 1e-10


def test_nu_rejects_nonpositive():
    for nu in (0.0, -0.5):
        with pytest.raises(SymbolError):
            make_nu(nu)


def test_nu_limit_and_value_at_zero():
    s = make_nu(0.2)
    assert np.max(np.abs(s.evaluate(1e12) - HALF_ONES)) < 1e-4
    assert abs(make_nu(0.5).evaluate(0.0)[0, 1] - 0.5 * np.exp(1j)) < 1e-15


@pytest.mark.parametrize("p", [0.3, 1.0, 4.0, 50.0])
def test_derivative_norm_identity(p):
    # tr|Phi'|^2 = theta'^2 / 2
    nu = 0.25
    s = make_nu(nu)
    d = s.derivative(p)
    theta_d = -2 * nu * p * (1 + p * p) ** (-nu - 1)
    assert abs(np.sum(np.abs(d) ** 2) - 0.5 * theta_d**2) < 1e-15


@pytest.mark.parametrize("s", [make_nu(0.3), make_nu(1.0), make_loglog()], ids=["nu0.3", "nu1", "loglog"])
@pytest.mark.parametrize("p", [0.7, 2.5, 6.0, 40.0])
def test_finite_difference_second_order(s, p):
    errs = []
    for h in (1e-3, 1e-4):
        fd = (s.evaluate(p + h) - s.evaluate(p - h)) / (2 * h)
        errs.append(np.max(np.abs(fd - s.derivative(p))))
    # O(h^2): a tenfold smaller step cuts the error ~100x, until rounding takes over
    assert errs[0] < 1e-5
    assert errs[1] < max(errs[0] / 30, 1e-9)


def test_loglog_profile():
    th = theta_loglog()
    p = math.exp(math.e**2)
    assert abs(th.value(np.array([p]))[0] - 2.0) < 1e-12
    ps = np.logspace(-2, 8, 50)
    assert np.array_equal(th.value(ps), th.value(-ps))
    assert limit_at_infinity(make_loglog()) is None


def test_loglog_blend_is_c1():
    th = theta_loglog()
    for b in th.breakpoints:
        lo, hi = th.value(np.array([b - 1e-9, b + 1e-9]))
        assert abs(hi - lo) < 1e-8
        dlo, dhi = th.derivative(np.array([b - 1e-9, b + 1e-9]))
        assert abs(dhi - dlo) < 1e-7


def test_limits():
    assert np.allclose(limit_at_infinity(make_nu(0.3)), HALF_ONES)
    q = np.diag([1.0, 0.0])
    assert np.allclose(limit_at_infinity(make_constant(q)), q)


def test_nearest_projection_examples():
    assert np.allclose(nearest_projection(HALF_ONES).entries, HALF_ONES)
    assert np.allclose(nearest_projection(np.diag([0.9, 0.1])).entries, np.diag([1.0, 0.0]))
    with pytest.raises(SymbolError, match="ambiguous"):
        nearest_projection(0.5 * np.eye(2))


@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2**31))
def test_nearest_projection_is_projection(n, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    m = 0.5 * (z + z.conj().T)
    if np.min(np.abs(np.linalg.eigvalsh(m) - 0.5)) < 1e-5:
        return
    q = nearest_projection(m).entries
    assert np.max(np.abs(q @ q - q)) < 1e-12
    assert np.max(np.abs(q - q.conj().T)) < 1e-12
    assert round(np.trace(q).real) == int(np.sum(np.linalg.eigvalsh(m) >= 0.5))


def test_projection_matrix_tolerance():
    ProjectionMatrix(HALF_ONES + 1e-14)
    with pytest.raises(SymbolError):
        ProjectionMatrix(HALF_ONES + 1e-9)


@given(st.integers(min_value=0, max_value=2**31))
def test_unitary_covariance(seed):
    rng = np.random.default_rng(seed)
    u = random_unitary(rng, 2)
    s = make_nu(0.3)
    c = s.conjugated(u)
    assert c.check() <= 1e-10
    p = rng.uniform(-50, 50, 5)
    assert np.allclose(c.evaluate(p), u @ s.evaluate(p) @ u.conj().T, atol=1e-14)
    assert np.allclose(limit_at_infinity(c), u @ HALF_ONES @ u.conj().T)


def test_conjugated_labels_distinct(rng):
    s = make_nu(0.3)
    a, b = s.conjugated(random_unitary(rng, 2)), s.conjugated(random_unitary(rng, 2))
    assert a.label != b.label


def test_jump_symbol():
    s = make_jump(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert np.allclose(s.evaluate(-1.0), np.diag([1.0, 0.0]))
    assert np.allclose(s.evaluate(2.0), np.diag([0.0, 1.0]))
    assert not s.has_derivative


def test_sampled_constant(tmp_path):
    f = tmp_path / "c.csv"
    write_sampled(f, make_constant(HALF_ONES), [-1.0, 0.0, 1.0])
    s = load_sampled(f)
    ref = make_constant(HALF_ONES)
    ps = np.array([-10.0, -0.3, 0.0, 0.6, 25.0])
    assert np.allclose(s.evaluate(ps), ref.evaluate(ps), atol=1e-15)
    assert not s.has_derivative and s.parity == "even"


def test_sampled_rejects_nonmonotone(tmp_path):
    f = tmp_path / "bad.csv"
    rows = ["# N=1 parity=unknown", "0,1,0", "1,1,0", "0.5,1,0"]
    f.write_text("\n".join(rows) + "\n")
    with pytest.raises(SymbolError, match="monoton|increasing"):
        load_sampled(f)


def test_sampled_rejects_malformed(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("# N=1 parity=unknown\n0,1\n")
    with pytest.raises(SymbolError):
        load_sampled(f)
    f.write_text("# N=1 parity=unknown\n0,1,0\n1,0.5,0\n")
    with pytest.raises(SymbolError):
        load_sampled(f)


def test_sampled_interpolation_error(tmp_path):
    f = tmp_path / "nu.csv"
    grid = np.round(np.arange(-100.0, 100.0 + 1e-9, 0.01), 10)
    s0 = make_nu(0.5)
    write_sampled(f, s0, grid)
    s = load_sampled(f)
    inner = grid[100:-100]
    mids = 0.5 * (inner[1:] + inner[:-1])
    assert np.max(np.abs(s.evaluate(mids) - s0.evaluate(mids))) < 1e-4
    assert s.parity == "even"
    assert np.allclose(limit_at_infinity(s), s0.evaluate(100.0), atol=1e-3)


def test_outer_cesaro_mean_of_nu():
    m = outer_cesaro_mean(make_nu(0.5), 2.0**20)
    assert np.max(np.abs(m - HALF_ONES)) < 1e-5
