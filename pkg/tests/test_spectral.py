import math

import numpy as np
import pytest
from scipy import integrate

from carflow import quad, spectral
from carflow.quad import CONVERGENT, DIVERGENT
from carflow.symbol import SymbolError, from_samples, make_constant, make_jump, make_loglog, make_nu

from conftest import HALF_ONES


@pytest.fixture(scope="module")
def r05():
    return spectral.regular_part(make_nu(0.5))


@pytest.fixture(scope="module")
def r02():
    return spectral.regular_part(make_nu(0.2))


@pytest.fixture(scope="module")
def rconst():
    return spectral.regular_part(make_constant(HALF_ONES))


def test_grid_layout(r05):
    assert r05.method == "via-derivative"
    assert not np.any(r05.xs == 0)
    assert np.all(np.diff(r05.xs) > 0)
    assert abs(r05.xs[-1] - 1e3) < 1e-9 and abs(r05.xs[0] + 1e3) < 1e-9
    assert abs(np.min(np.abs(r05.xs)) - 1e-3) < 1e-12


def test_constant_is_zero(rconst):
    assert np.max(np.abs(rconst.values)) == 0.0
    assert spectral.weight_integral(rconst, spectral.hat_weight()) == 0.0
    v = spectral.weighted_energy(rconst, 0.4)
    assert v.status == CONVERGENT and v.value == 0.0


def test_hermitian_symmetry(r05):
    # Phi0^(-x) = Phi0^(x)^* (adjoint) for even self-adjoint symbols
    mirrored = r05.values[::-1]
    adj = np.conj(np.swapaxes(r05.values, -1, -2))
    assert np.max(np.abs(mirrored - adj)) < 1e-8


@pytest.mark.parametrize("x", [0.01, 0.3, 2.0, 17.5])
def test_matches_qawf_oracle(r05, x):
    s = make_nu(0.5)
    oracle = spectral.derivative_fourier_qawf(s, x) / (1j * x)
    assert np.max(np.abs(r05.at(x)[0] - oracle)) < 1e-7


def test_parseval(r05):
    rhs = 2 * math.pi * 2 * integrate.quad(lambda p: 1 - math.cos((1 + p * p) ** -0.5), 0, np.inf,
                                           limit=400, epsabs=1e-13)[0]
    lhs = spectral.total_energy(r05)
    assert abs(lhs / rhs - 1) < 0.02


def test_small_x_growth_exponent(r02):
    x = np.logspace(-3, -1, 21)
    norms = np.linalg.norm(r02.at(x), axis=(-2, -1))
    slope = np.polyfit(np.log(x), np.log(norms), 1)[0]
    assert abs(slope + 0.6) < 0.1


def test_weighted_energy_verdicts(r02):
    v = spectral.weighted_energy(r02, 0.5)
    assert v.status == CONVERGENT
    # near 0 the integrand goes like x^{mu + 4 nu - 2} = x^{-0.7}; the deepest ten shells are asymptotic
    assert v.ends["zero"].exponent < -0.7 + 0.2
    inner = sorted((lo, val) for (lo, hi), val in v.shells if hi <= 1.0)[:10]
    lo, val = np.array(inner).T
    assert abs(np.polyfit(np.log(lo), np.log(val), 1)[0] - 1 + 0.7) < 0.02
    bad = spectral.weighted_energy(spectral.regular_part(make_nu(0.05)), 0.5)
    assert bad.status == DIVERGENT


@pytest.mark.parametrize("mu", [0.5, 1.0])
def test_besov_identity_with_sine_constant(r05, mu):
    energy = spectral.weighted_energy(r05, mu)
    besov = quad.besov_double(make_nu(0.5), mu)
    assert energy.status == besov.status == CONVERGENT
    assert abs(besov.value / (quad.sine_constant(mu) * energy.value) - 1) < 0.03


def test_zero_truncation_monotone(r05):
    vals = []
    for eps in (1e-3, 1e-2, 1e-1, 1.0):
        w = lambda t, e=eps: np.where(np.abs(t) > e, np.abs(t) ** 0.5, 0.0) * (np.abs(t) < 999)  # noqa: E731
        vals.append(spectral.weight_integral(r05, w))
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_weight_integral_zero_weight(r05):
    assert spectral.weight_integral(r05, lambda t: np.zeros_like(np.asarray(t, float))) == 0.0


def test_hat_weight_shape():
    w = spectral.hat_weight((0.0, 1.0), (2.0, 3.0))
    t = np.array([-3.5, -3.0, -2.5, -2.0, -1.5, -1.0, 0.0])
    assert np.allclose(w(t), np.maximum(0, 1 - np.abs(t + 2)))


def test_weight_support_check(r05):
    with pytest.raises(ValueError, match="window"):
        spectral.weight_integral(r05, lambda t: np.ones_like(np.asarray(t, float)))


def test_errors():
    with pytest.raises(SymbolError, match="derivative"):
        spectral.regular_part_via_derivative(make_jump(np.diag([1.0, 0]), np.diag([0, 1.0])))
    with pytest.raises(SymbolError, match="non-integrable"):
        spectral.regular_part(make_loglog())


def test_sampled_difference_method():
    grid = np.linspace(-200, 200, 40001)
    s = from_samples(grid, make_nu(0.5).evaluate(grid), "even")
    r = spectral.regular_part(s, window=50.0, step=1e-2)
    assert r.method == "via-difference"
    ref = spectral.regular_part(make_nu(0.5), window=50.0, step=1e-2)
    sel = (np.abs(r.xs) > 0.1) & (np.abs(r.xs) < 10)
    err = np.max(np.abs(r.values[sel] - ref.values[sel]))
    assert err < 1e-2 * np.max(np.abs(ref.values[sel]))


def test_csv_export(tmp_path, r05):
    f = tmp_path / "r.csv"
    r05.to_csv(f, every=1000)
    lines = f.read_text().splitlines()
    assert lines[0] == "x,tr_abs2"
    x, tr = map(float, lines[1].split(","))
    assert x == r05.xs[0] and tr == r05.tr_abs2[0]
    r05.to_csv(f, full=True, every=100000)
    head = f.read_text().splitlines()[0].split(",")
    assert head[:4] == ["x", "tr_abs2", "re_11", "im_11"] and len(head) == 10


def test_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv(spectral.CACHE_ENV, str(tmp_path))
    s = make_nu(0.7)
    a = spectral.regular_part(s, window=20.0, step=1e-2)
    assert len(list(tmp_path.glob("regular-*.npz"))) == 1
    b = spectral.regular_part(s, window=20.0, step=1e-2)
    assert np.array_equal(a.values, b.values)
