"""Finite realizations of Fourier multipliers, interval projections and their compressions.

The time window [-L/2, L/2) is cut into M cells of width h = L/M; the
frequency grid is p_m = 2 pi m / L, m = -M/2 .. M/2 - 1.  In the time basis
the multiplier C_Phi is block circulant, (C_Phi)_{jk} = c_{(j-k) mod M} with

    c_n = (1/M) sum_m Phi(p_m) e^{i p_m n h},

so every Hilbert-Schmidt norm below is computed from the M kernel blocks c_n
instead of an (MN) x (MN) dense matrix.  Dense matrices are still available
for small grids as a brute-force check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .symbol import MATRIX_TOL, Symbol, SymbolError

MAX_CELLS = 2**15
MAX_DENSE = 2**12
SPECTRUM_TOL = 1e-10
MIN_CELLS = 4


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    L: float
    M: int

    def __post_init__(self):
        if not (self.L > 0):
            raise GridError("window length must be positive")
        if self.M < 2 or self.M & (self.M - 1):
            raise GridError("M must be a power of two, at least 2")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def freqs(self) -> np.ndarray:
        """Frequencies in FFT order."""
        return 2 * math.pi * np.fft.fftfreq(self.M, d=self.h)

    @property
    def dp(self) -> float:
        return 2 * math.pi / self.L

    @property
    def nyquist(self) -> float:
        return math.pi * self.M / self.L

    @property
    def left_edges(self) -> np.ndarray:
        return -self.L / 2 + self.h * np.arange(self.M)

    @property
    def centers(self) -> np.ndarray:
        return self.left_edges + self.h / 2

    def check_cap(self, n: int) -> None:
        if self.M * n > MAX_CELLS:
            raise GridError(f"M*N = {self.M * n} exceeds the cap {MAX_CELLS}")


def _as_pairs(e) -> list:
    if isinstance(e, tuple) and len(e) == 2 and np.isscalar(e[0]):
        return [(float(e[0]), float(e[1]))]
    return [(float(a), float(b)) for a, b in e]


def cell_mask(e, g: Grid) -> np.ndarray:
    """Cells whose centers lie in the interval union E."""
    pairs = _as_pairs(e)
    c = g.centers
    mask = np.zeros(g.M, dtype=bool)
    for a, b in pairs:
        if b < a:
            raise GridError(f"interval ({a}, {b}) has negative length")
        if a < -g.L / 2 - 1e-12 or b > g.L / 2 + 1e-12:
            raise GridError(f"interval ({a}, {b}) exceeds the window [-{g.L / 2}, {g.L / 2}]")
        mask |= (c > a) & (c < b)
    return mask


def symbol_kernel(s: Symbol, g: Grid) -> np.ndarray:
    """c_n, n = 0..M-1 (index mod M), shape (M, N, N)."""
    g.check_cap(s.dimension)
    vals = s.evaluate(g.freqs)
    return np.fft.ifft(vals, axis=0)


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    grid: Grid
    kind: str
    basis: str
    dimension: int
    kernel: Optional[np.ndarray] = None  # multipliers: c_n
    symbol_values: Optional[np.ndarray] = None  # multipliers: Phi(p_m) in FFT order
    mask: Optional[np.ndarray] = None  # projections

    def dense(self, basis: Optional[str] = None) -> np.ndarray:
        basis = basis or self.basis
        m, n = self.grid.M, self.dimension
        if m * n > MAX_DENSE:
            raise GridError(f"dense matrix of size {m * n} exceeds {MAX_DENSE}")
        if self.kind == "multiplier":
            if basis == "frequency":
                out = np.zeros((m, n, m, n), dtype=complex)
                idx = np.arange(m)
                out[idx, :, idx, :] = self.symbol_values
                return out.reshape(m * n, m * n)
            j = np.arange(m)
            blocks = self.kernel[(j[:, None] - j[None, :]) % m]  # (m, m, n, n)
            return blocks.transpose(0, 2, 1, 3).reshape(m * n, m * n)
        if self.kind == "projection":
            d = np.kron(np.diag(self.mask.astype(float)), np.eye(n)).astype(complex)
            if basis == "time":
                return d
            f = _unitary_dft(m, n)
            return f @ d @ f.conj().T
        raise ValueError(f"unknown operator kind {self.kind}")

    def write_binary(self, path, basis: Optional[str] = None) -> None:
        """Header line of JSON (M, N, L, basis), then row-major complex128 entries."""
        basis = basis or self.basis
        mat = np.ascontiguousarray(self.dense(basis), dtype=np.complex128)
        head = json.dumps({"M": self.grid.M, "N": self.dimension, "L": self.grid.L, "basis": basis},
                          sort_keys=True)
        with open(path, "wb") as fh:
            fh.write(b"CARFLOW-OP " + head.encode() + b"\n")
            fh.write(mat.tobytes(order="C"))


def read_binary(path) -> tuple:
    with open(path, "rb") as fh:
        line = fh.readline()
        if not line.startswith(b"CARFLOW-OP "):
            raise ValueError("not an operator file")
        head = json.loads(line[len(b"CARFLOW-OP "):])
        size = head["M"] * head["N"]
        data = np.frombuffer(fh.read(), dtype=np.complex128)
    return head, data.reshape(size, size)


def _unitary_dft(m: int, n: int) -> np.ndarray:
    """Time-to-frequency change of basis matching the kernel convention."""
    j = np.arange(m)
    f = np.exp(-2j * math.pi * np.outer(np.fft.fftfreq(m) * m, j) / m) / math.sqrt(m)
    return np.kron(f, np.eye(n))


def fourier_multiplier(s: Symbol, g: Grid, basis: str = "time") -> DiscretizedOperator:
    g.check_cap(s.dimension)
    vals = s.evaluate(g.freqs)
    return DiscretizedOperator(g, "multiplier", basis, s.dimension, np.fft.ifft(vals, axis=0), vals)


def interval_projection(e, g: Grid, dimension: int = 1) -> DiscretizedOperator:
    return DiscretizedOperator(g, "projection", "time", dimension, mask=cell_mask(e, g))


def _pair_counts(mask_a: np.ndarray, mask_b: np.ndarray) -> np.ndarray:
    """count[n] = #{(j, k): j in A, k in B, j - k = n mod M}."""
    fa = np.fft.fft(mask_a.astype(float))
    fb = np.fft.fft(mask_b.astype(float))
    return np.rint(np.fft.ifft(fa * np.conj(fb)).real)


def _block_hs2(kernel: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> float:
    """||P_rows C P_cols||_HS^2 via kernel pair counts."""
    counts = _pair_counts(rows, cols)
    tr = np.sum(np.abs(kernel) ** 2, axis=(-2, -1))
    return float(np.dot(counts, tr))


def compressed_hs(s: Symbol, i, j, g: Grid) -> float:
    """||P_J C_Phi P_I||_HS from the explicit J x I block of C_Phi."""
    mi, mj = cell_mask(i, g), cell_mask(j, g)
    if np.any(mi & mj):
        raise GridError("I and J overlap")
    kern = symbol_kernel(s, g)
    rows, cols = np.flatnonzero(mj), np.flatnonzero(mi)
    block = kern[(rows[:, None] - cols[None, :]) % g.M]
    return float(math.sqrt(np.sum(np.abs(block) ** 2)))


def _hankel_hs2(kern: np.ndarray, mask: np.ndarray) -> float:
    # C is a projection: ||(1-P)CP||^2 = tr(PCP) - ||PCP||^2
    inside = float(mask.sum()) * float(np.trace(kern[0]).real)
    return max(inside - _block_hs2(kern, mask, mask), 0.0)


def hankel_hs(s: Symbol, e, g: Grid) -> float:
    """||(1 - P_E) C_Phi P_E||_HS."""
    return math.sqrt(_hankel_hs2(symbol_kernel(s, g), cell_mask(e, g)))


def toeplitz_defect_trace(s: Symbol, g: Grid) -> float:
    """tr(T - T^2) for T = P_+ C_Phi P_+ on the positive half of the window."""
    kern = symbol_kernel(s, g)
    mask = g.centers > 0
    return float(mask.sum()) * float(np.trace(kern[0]).real) - _block_hs2(kern, mask, mask)


@dataclass(frozen=True)
class ShiftDefect:
    value: float
    cells: int
    rounding: float


def shift_defect(s: Symbol, t: float, g: Grid) -> ShiftDefect:
    """||S_t^* T S_t - T||_HS on the part of [0, L/2) that the shift keeps inside the window.

    S_t moves the time grid by round(t/h) cells; the difference between t
    and the lattice shift is reported as ``rounding``.
    """
    if t == 0:
        return ShiftDefect(0.0, 0, 0.0)
    if not 0 < t < g.L / 4:
        raise GridError("shift must satisfy 0 < t < L/4")
    n = int(round(t / g.h))
    kern = symbol_kernel(s, g)
    half = np.flatnonzero(g.centers > 0)
    keep = half[half + n <= half[-1]]
    # entry (j, k) of S^*TS is T_{j+n, k+n}; streamed by rows to bound memory
    val = 0.0
    for r in range(0, len(keep), 512):
        rows = keep[r:r + 512]
        a = kern[((rows[:, None] + n) - (keep[None, :] + n)) % g.M]
        b = kern[(rows[:, None] - keep[None, :]) % g.M]
        val += float(np.sum(np.abs(a - b) ** 2))
    return ShiftDefect(math.sqrt(val), n, n * g.h - t)


def _hs(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def _check_projection(p: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise SymbolError("projection must be a square matrix")
    if max(np.max(np.abs(p @ p - p)), np.max(np.abs(p - p.conj().T))) > tol:
        raise SymbolError("input is not an orthogonal projection")
    return p


def pq_identity(p, q) -> tuple:
    """(||(1-P)QP||_HS, ||(1-Q)PQ||_HS)."""
    p, q = _check_projection(p), _check_projection(q)
    if p.shape != q.shape:
        raise SymbolError("P and Q differ in size")
    one = np.eye(p.shape[0])
    return _hs((one - p) @ q @ p), _hs((one - q) @ p @ q)


def _check_contraction(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square")
    if np.max(np.abs(a - a.conj().T)) > SPECTRUM_TOL:
        raise ValueError(f"{name} is not self-adjoint")
    ev = np.linalg.eigvalsh(a)
    if ev[0] < -SPECTRUM_TOL or ev[-1] > 1 + SPECTRUM_TOL:
        raise ValueError(f"{name} has spectrum outside [0, 1]")
    return a


def qe_functional(a, b) -> float:
    """tr(B(1-A)B + (1-B)A(1-B))."""
    a, b = _check_contraction(a, "A"), _check_contraction(b, "B")
    if a.shape != b.shape:
        raise ValueError("A and B differ in size")
    one = np.eye(a.shape[0])
    return float(np.trace(b @ (one - a) @ b + (one - b) @ a @ (one - b)).real)


@dataclass(frozen=True)
class PartialSums:
    sums: np.ndarray
    terms: np.ndarray
    cells: np.ndarray
    resolved: np.ndarray
    intervals: list

    @property
    def n_resolved(self) -> int:
        bad = np.flatnonzero(~self.resolved)
        return int(bad[0]) if len(bad) else len(self.resolved)

    def trend(self) -> tuple:
        """Slope of log(term) against log(n+1) over the finer half of the resolved terms.

        Terms decaying faster than 1/n (slope < -1.05) suggest a convergent
        series, slower than 1/n (slope > -0.95) a divergent one.
        """
        k = self.n_resolved
        if k < 6:
            return float("nan"), "Inconclusive"
        n = np.arange(1, k + 1, dtype=float)[k // 2:]
        t = self.terms[k // 2:k]
        if np.all(t == 0):
            return float("-inf"), "Convergent"
        ok = t > 0
        if ok.sum() < 3:
            return float("nan"), "Inconclusive"
        slope = float(np.polyfit(np.log(n[ok]), np.log(t[ok]), 1)[0])
        if slope < -1.05:
            return slope, "Convergent"
        if slope > -0.95:
            return slope, "Divergent"
        return slope, "Inconclusive"


def cabatif_hs_partial_sum(s: Symbol, intervals: Sequence, n_terms: int, g: Grid,
                           offset: float = 0.0) -> PartialSums:
    """Running sums of ||(1 - P_{I_n}) C_Phi P_{I_n}||_HS^2 over the scheme intervals.

    ``intervals`` is a PartitionScheme or a list of (lo, hi); ``offset``
    translates them inside the window.  Intervals covering fewer than four
    cells are computed but flagged unresolved.
    """
    if hasattr(intervals, "intervals"):
        intervals = intervals.intervals
    ivs = [(a + offset, b + offset) for a, b in list(intervals)[:n_terms]]
    kern = symbol_kernel(s, g)
    terms, cells = [], []
    for iv in ivs:
        m = cell_mask(iv, g)
        cells.append(int(m.sum()))
        terms.append(_hankel_hs2(kern, m))
    terms = np.array(terms)
    cells = np.array(cells)
    return PartialSums(np.cumsum(terms), terms, cells, cells >= MIN_CELLS, ivs)


__all__ = [
    "Grid", "DiscretizedOperator", "fourier_multiplier", "interval_projection", "compressed_hs",
    "hankel_hs", "shift_defect", "pq_identity", "qe_functional", "cabatif_hs_partial_sum",
    "toeplitz_defect_trace", "MATRIX_TOL",
]
