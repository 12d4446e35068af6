"""Partition sequences a_n = sum_{k<=n} h^{-1}(k) and measure algebra on interval unions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import quad

SLACK = 1e-12


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Profile:
    """A strictly decreasing h on (0, inf) with its inverse and primitive H(x) = int_0^x h."""

    name: str
    h: Callable[[np.ndarray], np.ndarray]
    h_inv: Callable[[np.ndarray], np.ndarray]
    primitive: Optional[Callable[[float], float]] = None

    def integral(self, x: float) -> float:
        if self.primitive is not None:
            return float(self.primitive(x))
        val, _ = integrate.quad(lambda t: float(self.h(np.array([t]))[0]), 0.0, x, limit=200)
        return val


def power_profile(mu: float) -> Profile:
    """h(x) = x^(mu-1), h^{-1}(y) = y^(-1/(1-mu)), H(x) = x^mu / mu."""
    if not 0 < mu < 1:
        raise PartitionError(f"mu must lie in (0, 1), got {mu}")
    s = 1.0 / (1.0 - mu)
    return Profile(
        f"power:{mu!r}",
        lambda x: np.asarray(x, dtype=float) ** (mu - 1.0),
        lambda y: np.asarray(y, dtype=float) ** (-s),
        lambda x: x**mu / mu,
    )


def check_profile(prof: Profile) -> None:
    """Reject profiles that are not strictly decreasing or not integrable at 0."""
    xs = 2.0 ** np.arange(-30, 30.01, 0.25)
    hv = np.asarray(prof.h(xs), dtype=float)
    if not np.all(np.isfinite(hv)) or np.any(hv <= 0) or np.any(np.diff(hv) >= 0):
        raise PartitionError(f"profile {prof.name} is not positive and strictly decreasing")
    ys = np.asarray(prof.h_inv(hv), dtype=float)
    if np.max(np.abs(ys - xs) / xs) > 1e-8:
        raise PartitionError(f"profile {prof.name}: h_inv is not the inverse of h")
    # int_0^1 h: dyadic shells toward 0 must be summable
    shells = []
    for k in range(1, 41):
        shells.append(float(np.sum(quad.panel_integrals(prof.h, np.array([2.0 ** -(k + 1), 2.0**-k]), 12))))
    fit = quad.classify_tail(shells, np.arange(1, 41, dtype=float))
    if fit.status != quad.CONVERGENT:
        raise PartitionError(f"profile {prof.name}: int_0^1 h is not finite ({fit.reason})")


@dataclass(frozen=True, eq=False)
class IntervalUnion:
    """Finite union of disjoint open intervals, sorted."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise PartitionError("interval endpoints must be matching 1-d arrays")
        if np.any(hi < lo):
            raise PartitionError("interval with hi < lo")
        if np.any(lo[1:] < hi[:-1] - SLACK):
            raise PartitionError("intervals must be sorted and disjoint")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def of(cls, pairs) -> "IntervalUnion":
        pairs = sorted((float(a), float(b)) for a, b in pairs)
        if not pairs:
            return cls(np.zeros(0), np.zeros(0))
        lo, hi = zip(*pairs)
        return cls(np.array(lo), np.array(hi))

    @property
    def measure(self) -> float:
        return math.fsum((self.hi - self.lo).tolist())

    def cumulative(self, t) -> np.ndarray:
        """|U intersect (-inf, t)|."""
        if len(self.lo) == 0:
            return np.zeros(np.shape(t))
        knots = np.empty(2 * len(self.lo))
        knots[0::2], knots[1::2] = self.lo, self.hi
        mass = np.concatenate([[0.0], np.cumsum(self.hi - self.lo)])
        vals = np.empty(2 * len(self.lo))
        vals[0::2], vals[1::2] = mass[:-1], mass[1:]
        return np.interp(t, knots, vals, left=0.0, right=mass[-1])

    def overlap(self, other: "IntervalUnion") -> float:
        """|self intersect other|."""
        if len(self.lo) == 0 or len(other.lo) == 0:
            return 0.0
        parts = self.cumulative(other.hi) - self.cumulative(other.lo)
        return math.fsum(parts.tolist())

    def shifted(self, x: float) -> "IntervalUnion":
        return IntervalUnion(self.lo + x, self.hi + x)

    def pairs(self) -> list:
        return list(zip(self.lo.tolist(), self.hi.tolist()))


def sym_diff_measure(o: IntervalUnion, x: float) -> float:
    """|O (symmetric difference) (O + x)| = 2|O| - 2|O intersect (O + x)|."""
    if x == 0:
        return 0.0
    val = 2.0 * o.measure - 2.0 * o.overlap(o.shifted(x))
    return max(val, 0.0)


@dataclass(frozen=True, eq=False)
class PartitionScheme:
    profile: Profile
    a: np.ndarray
    lengths: np.ndarray
    a_limit: float
    tail: float
    tail_bound: float

    @property
    def n_max(self) -> int:
        return len(self.lengths)

    @property
    def intervals(self) -> list:
        a = self.a.astype(float)
        return list(zip(a[:-1].tolist(), a[1:].tolist()))

    @property
    def O(self) -> IntervalUnion:  # noqa: N802
        a = self.a.astype(float)
        return IntervalUnion(a[:-1][0::2], a[1:][0::2])

    @property
    def O_measure(self) -> float:  # noqa: N802
        return math.fsum(self.lengths[0::2].tolist())

    def tail_after(self, m: int) -> float:
        """sum_{k>m} h^{-1}(k): exact partial sums inside the scheme, Euler-Maclaurin beyond."""
        if m <= self.n_max:
            return (self.a_limit - float(self.a[m])) if m < self.n_max else self.tail
        return _em_tail(self.profile, m)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("n,a_n,len_I_n\n")
            for n in range(self.n_max):
                fh.write(f"{n},{float(self.a[n])!r},{float(self.lengths[n])!r}\n")


def _em_tail(prof: Profile, n: int) -> float:
    """Euler-Maclaurin estimate of sum_{k>n} h^{-1}(k).

    int_{n+1}^inf h^{-1}(y) dy = H(h^{-1}(n+1)) - (n+1) h^{-1}(n+1) by the
    area identity for inverse functions; the half end term completes the
    trapezoid approximation.
    """
    r = float(prof.h_inv(np.array([n + 1.0]))[0])
    return prof.integral(r) - (n + 1) * r + 0.5 * r


def tail_bound(prof: Profile, n: int) -> float:
    """Upper bound sum_{k>n} h^{-1}(k) <= H(h^{-1}(n+1)) - n h^{-1}(n+1)."""
    r = float(prof.h_inv(np.array([n + 1.0]))[0])
    return prof.integral(r) - n * r


def build_from_h(prof: Profile, n_max: int = 100_000) -> PartitionScheme:
    if n_max < 2:
        raise PartitionError("n_max must be at least 2")
    check_profile(prof)
    k = np.arange(1, n_max + 1, dtype=float)
    lengths = np.asarray(prof.h_inv(k), dtype=float)
    # extended precision: late lengths fall below the float64 spacing of a_n
    a = np.concatenate([[np.longdouble(0)], np.cumsum(lengths.astype(np.longdouble))])
    # fast profiles eventually drop below even the extended spacing; stop there and leave the rest to the tail
    tiny = lengths <= 16 * np.finfo(np.longdouble).eps * a[1:].astype(float)
    if np.any(tiny):
        cut = max(int(np.argmax(tiny)), 2)
        lengths, a = lengths[:cut], a[:cut + 1]
        n_max = cut
    if np.any(np.diff(a) <= 0):
        raise PartitionError("partition points are not strictly increasing (lengths underflow)")
    tail = _em_tail(prof, n_max)
    bound = tail_bound(prof, n_max)
    a_limit = float(np.sum(lengths.astype(np.longdouble)) + tail)
    return PartitionScheme(prof, a, lengths, a_limit, tail, bound)


def build_from_mu(mu: float, n_max: int = 100_000) -> PartitionScheme:
    """Scheme for a_n = sum_{k<=n} k^{-1/(1-mu)}."""
    return build_from_h(power_profile(mu), n_max)


def min_sum(scheme: PartitionScheme, x: float) -> float:
    """sum_{n>=0} min(x, |I_n|) = m x + sum_{n>=m} |I_n| with m = #{n: |I_n| > x}."""
    if not x > 0:
        raise PartitionError("min_sum needs x > 0")
    lengths = scheme.lengths
    if x < lengths[-1]:
        # every stored length exceeds x; count the rest from h: |I_n| > x  <=>  n + 1 < h(x)
        hx = float(scheme.profile.h(np.array([x]))[0])
        m = max(int(math.ceil(hx)) - 1, scheme.n_max)
        while float(scheme.profile.h_inv(np.array([m + 1.0]))[0]) > x:
            m += 1
        return m * x + scheme.tail_after(m)
    m = int(np.count_nonzero(lengths > x))
    return m * x + scheme.tail_after(m)


@dataclass(frozen=True)
class ChainCheck:
    lower: float
    mid: float
    upper_sum: float
    upper_int: float
    error_bar: float
    passed: bool

    def as_tuple(self) -> tuple:
        return (self.lower, self.mid, self.upper_sum, self.upper_int)


def check_oestimate_chain(scheme: PartitionScheme, x: float, tol: float = 1e-10) -> ChainCheck:
    """x(h(x)-1) <= |O sym (O+x)| <= 2 sum min(x, |I_n|) <= 2 int_0^x h.

    The middle term uses the truncated O; the omitted part of O has measure
    at most the scheme tail, so it moves the symmetric difference by at most
    twice that, which is carried as the error bar.
    """
    if not x > 0:
        raise PartitionError("chain check needs x > 0")
    prof = scheme.profile
    lower = x * (float(prof.h(np.array([x]))[0]) - 1.0)
    mid = sym_diff_measure(scheme.O, x)
    upper_sum = 2.0 * min_sum(scheme, x)
    upper_int = 2.0 * prof.integral(x)
    err = 2.0 * max(scheme.tail_bound, scheme.tail)
    slack = tol * max(1.0, abs(upper_int))
    ok = (lower <= mid + err + slack) and (mid - err <= upper_sum + slack) and (upper_sum <= upper_int + slack)
    return ChainCheck(lower, mid, upper_sum, upper_int, err, bool(ok))


def chain_curve_csv(scheme: PartitionScheme, xs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,symdiff,min_sum,lower_bound,upper_bound\n")
        for x in xs:
            c = check_oestimate_chain(scheme, float(x))
            fh.write(f"{float(x)!r},{c.mid!r},{c.upper_sum / 2!r},{c.lower!r},{c.upper_int!r}\n")
