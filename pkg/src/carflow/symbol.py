"""Matrix-valued projection symbols on the real line.

A symbol is a map p -> Phi(p) in M_N(C) whose values are orthogonal
projections.  Evaluation is vectorized: ``symbol.evaluate(p)`` accepts a
scalar or an array of frequencies and returns an array of shape
``p.shape + (N, N)``.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

ANALYTIC_TOL = 1e-10
SAMPLED_TOL = 1e-6
MATRIX_TOL = 1e-12
AMBIGUITY_TOL = 1e-6


class SymbolError(ValueError):
    """Raised for invalid symbols, projections or symbol files."""


# --------------------------------------------------------------------------
# projection matrices
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    entries: np.ndarray

    def __post_init__(self):
        q = np.array(self.entries, dtype=complex)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise SymbolError(f"projection must be square, got shape {q.shape}")
        q.setflags(write=False)
        object.__setattr__(self, "entries", q)
        err = projection_defect(q)
        if err > MATRIX_TOL:
            raise SymbolError(f"not a projection (defect {err:.3e})")

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


def projection_defect(m: np.ndarray) -> float:
    """max(||M^2 - M||, ||M - M*||) in operator norm; works on stacks."""
    m = np.asarray(m, dtype=complex)
    sq = m @ m - m
    adj = m - np.conj(np.swapaxes(m, -1, -2))
    return float(max(np.max(np.linalg.norm(sq, ord=2, axis=(-2, -1)), initial=0.0),
                     np.max(np.linalg.norm(adj, ord=2, axis=(-2, -1)), initial=0.0)))


def nearest_projection(m: np.ndarray) -> ProjectionMatrix:
    """Spectral rounding of a self-adjoint matrix to a projection.

    Eigenvalues >= 1/2 go to 1, the rest to 0.  An eigenvalue within 1e-6
    of 1/2 makes the rounding ambiguous and raises.
    """
    m = np.asarray(m, dtype=complex)
    if np.linalg.norm(m - m.conj().T) > 1e-8 * max(1.0, np.linalg.norm(m)):
        raise SymbolError("nearest_projection needs a self-adjoint matrix")
    h = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(h)
    if np.any(np.abs(w - 0.5) < AMBIGUITY_TOL):
        raise SymbolError("ambiguous spectral rounding: eigenvalue at 1/2")
    keep = v[:, w >= 0.5]
    q = keep @ keep.conj().T
    return ProjectionMatrix(0.5 * (q + q.conj().T))


# --------------------------------------------------------------------------
# scalar profiles theta(p) for the Powers form
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaProfile:
    """A real even profile theta with its derivative.

    ``limit`` is lim theta(p) as |p| -> infinity, or None when it does not
    exist.  ``breakpoints`` lists nonnegative points where the profile is
    only finitely smooth.
    """

    name: str
    params: tuple
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    limit: Optional[float]
    breakpoints: tuple = ()


def theta_nu(nu: float) -> ThetaProfile:
    if not nu > 0:
        raise SymbolError(f"nu must be positive, got {nu}")

    def value(p):
        p = np.asarray(p, dtype=float)
        return (1.0 + p * p) ** (-nu)

    def derivative(p):
        p = np.asarray(p, dtype=float)
        return -2.0 * nu * p * (1.0 + p * p) ** (-nu - 1.0)

    return ThetaProfile("powers-nu", (float(nu),), value, derivative, 0.0)


def theta_zero() -> ThetaProfile:
    return ThetaProfile("zero", (), lambda p: np.zeros_like(np.asarray(p, dtype=float)),
                        lambda p: np.zeros_like(np.asarray(p, dtype=float)), 0.0)


E2 = math.exp(2.0)


def theta_loglog() -> ThetaProfile:
    """log(log|p|) for |p| >= e^2, a C^1 cubic blend on [e^2/2, e^2],
    constant log(log(e^2/2)) inside."""
    a, b = E2 / 2.0, E2
    ya, yb = math.log(math.log(a)), math.log(math.log(b))
    db = 1.0 / (b * math.log(b))
    w = b - a

    def hermite(t):
        # value ya, slope 0 at t=0; value yb, slope db at t=1 (slope in p units)
        h00 = 2 * t**3 - 3 * t**2 + 1
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        return h00 * ya + h01 * yb + h11 * w * db

    def hermite_d(t):
        d00 = 6 * t**2 - 6 * t
        d01 = -6 * t**2 + 6 * t
        d11 = 3 * t**2 - 2 * t
        return (d00 * ya + d01 * yb) / w + d11 * db

    def value(p):
        x = np.abs(np.asarray(p, dtype=float))
        out = np.full(x.shape, ya)
        far = x >= b
        mid = (x > a) & ~far
        with np.errstate(divide="ignore", invalid="ignore"):
            out[far] = np.log(np.log(x[far]))
        out[mid] = hermite((x[mid] - a) / w)
        return out

    def derivative(p):
        p = np.asarray(p, dtype=float)
        x = np.abs(p)
        out = np.zeros(x.shape)
        far = x >= b
        mid = (x > a) & ~far
        out[far] = 1.0 / (x[far] * np.log(x[far]))
        out[mid] = hermite_d((x[mid] - a) / w)
        return np.sign(p) * out

    return ThetaProfile("loglog", (a, b), value, derivative, None, (a, b))


# --------------------------------------------------------------------------
# symbols
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Symbol:
    """An immutable projection-valued symbol.

    ``family`` is a provenance tag (``constant``, ``powers-theta``,
    ``powers-nu``, ``loglog``, ``sampled``, ``jump``, ``conjugated``) and
    ``params`` its parameters.  ``limit`` holds the closed-form value at
    infinity for analytic families; ``has_limit`` is False when the limit is
    known not to exist, None when unknown (sampled data).
    """

    dimension: int
    evaluate_fn: Callable[[np.ndarray], np.ndarray]
    derivative_fn: Optional[Callable[[np.ndarray], np.ndarray]]
    parity: str
    family: str
    params: tuple = ()
    limit: Optional[np.ndarray] = None
    has_limit: Optional[bool] = None
    breakpoints: tuple = ()
    smooth: bool = True
    tolerance: float = ANALYTIC_TOL
    grid: Optional[np.ndarray] = field(default=None, repr=False)

    def evaluate(self, p) -> np.ndarray:
        return self.evaluate_fn(np.asarray(p, dtype=float))

    def derivative(self, p) -> np.ndarray:
        if self.derivative_fn is None:
            raise SymbolError(f"symbol {self.label} has no analytic derivative")
        return self.derivative_fn(np.asarray(p, dtype=float))

    @property
    def has_derivative(self) -> bool:
        return self.derivative_fn is not None

    @property
    def label(self) -> str:
        if not self.params:
            return self.family
        return self.family + ":" + ",".join(_fmt(x) for x in self.params)

    def conjugated(self, u: np.ndarray) -> "Symbol":
        """The symbol p -> U Phi(p) U* for a constant unitary U."""
        u = np.asarray(u, dtype=complex)
        if u.shape != (self.dimension, self.dimension):
            raise SymbolError("unitary has wrong dimension")
        if np.linalg.norm(u @ u.conj().T - np.eye(self.dimension)) > 1e-12:
            raise SymbolError("conjugating matrix is not unitary")
        ud = u.conj().T
        base = self
        deriv = None
        if base.derivative_fn is not None:
            deriv = lambda p: u @ base.derivative_fn(p) @ ud  # noqa: E731
        lim = None if base.limit is None else u @ base.limit @ ud
        return Symbol(
            self.dimension,
            lambda p: u @ base.evaluate_fn(p) @ ud,
            deriv,
            self.parity,
            "conjugated",
            (base.label, hashlib.sha256(u.tobytes()).hexdigest()[:12]),
            lim,
            self.has_limit,
            self.breakpoints,
            self.smooth,
            self.tolerance,
            self.grid,
        )

    def check(self, points: Optional[Sequence[float]] = None) -> float:
        """Verify the projection (and parity) invariants on sample points.

        Returns the worst defect; raises SymbolError beyond tolerance.
        """
        if points is None:
            points = np.concatenate([-np.logspace(-3, 6, 40), [0.0], np.logspace(-3, 6, 40)])
        pts = np.asarray(points, dtype=float)
        vals = self.evaluate(pts)
        err = projection_defect(vals)
        if self.parity == "even":
            err = max(err, float(np.max(np.abs(self.evaluate(-pts) - vals))))
        if err > self.tolerance:
            raise SymbolError(f"symbol {self.label} violates invariants (defect {err:.3e})")
        return err


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def make_constant(q) -> Symbol:
    if not isinstance(q, ProjectionMatrix):
        q = ProjectionMatrix(np.asarray(q, dtype=complex))
    mat = q.entries
    n = q.dimension

    def evaluate(p):
        return np.broadcast_to(mat, np.shape(p) + (n, n)).copy()

    def derivative(p):
        return np.zeros(np.shape(p) + (n, n), dtype=complex)

    return Symbol(n, evaluate, derivative, "even", "constant",
                  (np.round(mat, 12).tolist().__repr__(),), mat.copy(), True)


def powers_matrix(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    e = np.exp(1j * theta)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = 0.5
    out[..., 1, 1] = 0.5
    out[..., 0, 1] = 0.5 * e
    out[..., 1, 0] = 0.5 * np.conj(e)
    return out


def make_powers(theta: ThetaProfile, family: str = "powers-theta") -> Symbol:
    """Phi(p) = 1/2 [[1, e^{i theta}], [e^{-i theta}, 1]]."""

    def evaluate(p):
        return powers_matrix(theta.value(p))

    def derivative(p):
        t = theta.value(p)
        dt = theta.derivative(p)
        e = np.exp(1j * t)
        out = np.zeros(np.shape(t) + (2, 2), dtype=complex)
        out[..., 0, 1] = 0.5j * dt * e
        out[..., 1, 0] = -0.5j * dt * np.conj(e)
        return out

    lim = None if theta.limit is None else powers_matrix(theta.limit)
    return Symbol(2, evaluate, derivative, "even", family, theta.params,
                  lim, theta.limit is not None, theta.breakpoints)


def make_powers_original() -> Symbol:
    """Powers' first example, theta(p) = (1+p^2)^(-1/5)."""
    return make_powers(theta_nu(0.2), "powers-theta")


def make_nu(nu: float) -> Symbol:
    return make_powers(theta_nu(nu), "powers-nu")


def make_loglog() -> Symbol:
    return make_powers(theta_loglog(), "loglog")


def make_jump(q1, q2) -> Symbol:
    """Q1 for p < 0 and Q2 for p >= 0; a non-admissible test symbol."""
    q1 = q1 if isinstance(q1, ProjectionMatrix) else ProjectionMatrix(q1)
    q2 = q2 if isinstance(q2, ProjectionMatrix) else ProjectionMatrix(q2)
    if q1.dimension != q2.dimension:
        raise SymbolError("jump projections differ in dimension")
    a, b = q1.entries, q2.entries

    def evaluate(p):
        mask = (np.asarray(p) >= 0)[..., None, None]
        return np.where(mask, b, a).astype(complex)

    return Symbol(q1.dimension, evaluate, None, "unknown", "jump", (),
                  None, False, (0.0,), smooth=False)


# --------------------------------------------------------------------------
# sampled symbols
# --------------------------------------------------------------------------


def _interp_symbol(p_grid: np.ndarray, values: np.ndarray):
    n = values.shape[-1]
    re = values.real.reshape(len(p_grid), n * n)
    im = values.imag.reshape(len(p_grid), n * n)

    def evaluate(p):
        p = np.asarray(p, dtype=float)
        flat = p.ravel()
        out = np.empty((flat.size, n * n), dtype=complex)
        for k in range(n * n):
            out[:, k] = np.interp(flat, p_grid, re[:, k]) + 1j * np.interp(flat, p_grid, im[:, k])
        return out.reshape(p.shape + (n, n))

    return evaluate


def from_samples(p_grid, values, parity: str = "unknown", label: str = "") -> Symbol:
    p_grid = np.asarray(p_grid, dtype=float)
    values = np.asarray(values, dtype=complex)
    if p_grid.ndim != 1 or len(p_grid) < 2:
        raise SymbolError("need at least two sample points")
    if np.any(np.diff(p_grid) <= 0):
        raise SymbolError("non-monotone grid: p must be strictly increasing")
    if values.shape[0] != len(p_grid) or values.ndim != 3 or values.shape[1] != values.shape[2]:
        raise SymbolError("sample values must have shape (len(p), N, N)")
    if parity not in ("even", "unknown"):
        raise SymbolError(f"unknown parity {parity!r}")
    err = projection_defect(values)
    if err > SAMPLED_TOL:
        raise SymbolError(f"sampled entries fail the projection invariant (defect {err:.3e})")
    sym = Symbol(values.shape[1], _interp_symbol(p_grid, values), None, parity, "sampled",
                 (label,) if label else (), None, None, tuple(p_grid.tolist()), smooth=False,
                 tolerance=SAMPLED_TOL, grid=p_grid)
    return sym


def load_sampled(path) -> Symbol:
    """Read a sampled-symbol CSV.

    Header ``# N=<int> parity=<even|unknown>``; rows ``p, re_11, im_11, ...``
    row-major.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SymbolError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SymbolError("missing header line '# N=<int> parity=<...>'")
    header = dict(tok.split("=", 1) for tok in lines[0][1:].split() if "=" in tok)
    try:
        n = int(header["N"])
    except (KeyError, ValueError) as exc:
        raise SymbolError("header must declare N=<int>") from exc
    parity = header.get("parity", "unknown")
    rows = []
    for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 1 + 2 * n * n:
            raise SymbolError(f"line {lineno}: expected {1 + 2 * n * n} columns, got {len(row)}")
        try:
            rows.append([float(c) for c in row])
        except ValueError as exc:
            raise SymbolError(f"line {lineno}: malformed number") from exc
    if not rows:
        raise SymbolError("no data rows")
    arr = np.array(rows)
    vals = (arr[:, 1::2] + 1j * arr[:, 2::2]).reshape(len(arr), n, n)
    return from_samples(arr[:, 0], vals, parity, str(path))


def write_sampled(path, symbol: Symbol, p_grid, parity: Optional[str] = None) -> None:
    p_grid = np.asarray(p_grid, dtype=float)
    vals = symbol.evaluate(p_grid).reshape(len(p_grid), -1)
    parity = parity or symbol.parity
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# N={symbol.dimension} parity={parity}\n")
        w = csv.writer(fh)
        for p, row in zip(p_grid, vals):
            cells = [repr(float(p))]
            for z in row:
                cells += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(cells)


# --------------------------------------------------------------------------
# limit at infinity
# --------------------------------------------------------------------------


def _outer_mean(sym: Symbol, frac: float) -> np.ndarray:
    p = sym.grid
    span = p[-1] - p[0]
    lo = p <= p[0] + frac * span
    hi = p >= p[-1] - frac * span
    vals = sym.evaluate(p)
    w = np.gradient(p)
    parts = []
    weights = []
    for m in (lo, hi):
        parts.append(np.tensordot(w[m], vals[m], axes=1))
        weights.append(w[m].sum())
    return sum(parts) / sum(weights)


def limit_at_infinity(sym: Symbol) -> Optional[np.ndarray]:
    """Closed-form limit for analytic families, Cesaro mean for sampled data.

    Returns None when the limit does not exist (or cannot be certified).
    """
    if sym.grid is not None and sym.family == "sampled":
        m10 = _outer_mean(sym, 0.10)
        m05 = _outer_mean(sym, 0.05)
        if np.linalg.norm(m10 - m05, ord=2) < 1e-3:
            return m10
        return None
    if sym.has_limit:
        return None if sym.limit is None else np.array(sym.limit)
    return None


def outer_cesaro_mean(sym: Symbol, p_far: float = 2.0**20, frac: float = 0.10,
                      n: int = 2001) -> np.ndarray:
    """Mean of Phi over the outer fraction of the window [-p_far, p_far]."""
    if sym.grid is not None:
        return _outer_mean(sym, frac)
    lo = (1.0 - frac) * p_far
    p = np.linspace(lo, p_far, n)
    vals = 0.5 * (sym.evaluate(p) + sym.evaluate(-p))
    return np.trapezoid(vals, p, axis=0) / (p_far - lo)
