"""CAR algebra on n modes and quasi-free state moments.

Convention: a(x) = sum_i x_i c_i is linear in x, c_i being Jordan-Wigner
lowering operators, and <x, y> = sum_i x_i conj(y_i) is linear in the first
slot.  Then {a(x), a(y)^*} = <x, y> 1 holds verbatim.

The quasi-free state with covariance A satisfies omega(a(f) a(g)^*) = <Af, g>.
A = 1 is therefore the Jordan-Wigner vacuum (annihilated by every a), and
for a projection P the pure state fills the modes of ran(1 - P).
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_MODES = 10
CAR_TOL = 1e-12
PROJ_TOL = 1e-10


class CarError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CarRep:
    n: int
    generators: tuple  # c_1 .. c_n, each 2^n x 2^n

    @property
    def size(self) -> int:
        return 1 << self.n

    def a(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.n,):
            raise CarError(f"vector of length {self.n} expected, got shape {x.shape}")
        return sum(xi * c for xi, c in zip(x, self.generators))

    def a_star(self, x) -> np.ndarray:
        return self.a(x).conj().T

    @property
    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.size, dtype=complex)
        v[0] = 1.0
        return v


def build_rep(n: int) -> CarRep:
    """Jordan-Wigner matrices c_i = Z x ... x Z x sigma_- x 1 x ... x 1."""
    if not 1 <= n <= MAX_MODES:
        raise CarError(f"number of modes must lie in 1..{MAX_MODES}")
    lower = np.array([[0, 1], [0, 0]], dtype=complex)  # |0> = empty, |1> = filled
    z = np.diag([1.0, -1.0]).astype(complex)
    one = np.eye(2, dtype=complex)
    gens = []
    for i in range(n):
        m = np.array([[1.0 + 0j]])
        for k in range(n):
            m = np.kron(m, z if k < i else (lower if k == i else one))
        gens.append(m)
    return CarRep(n, tuple(gens))


def _anti(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y + y @ x


def car_deviation(rep: CarRep) -> float:
    """Largest entry of {c_i, c_j} and {c_i, c_j^*} - delta_ij over all pairs."""
    worst = 0.0
    one = np.eye(rep.size)
    for i, ci in enumerate(rep.generators):
        for j, cj in enumerate(rep.generators):
            worst = max(worst, float(np.max(np.abs(_anti(ci, cj)))))
            target = one if i == j else 0.0
            worst = max(worst, float(np.max(np.abs(_anti(ci, cj.conj().T) - target))))
    return worst


def _inner(x, y) -> complex:
    return complex(np.sum(np.asarray(x, complex) * np.conj(np.asarray(y, complex))))


def _check_cov(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise CarError("covariance must be square")
    if np.max(np.abs(a - a.conj().T)) > CAR_TOL * max(1.0, float(np.max(np.abs(a)))) * 100:
        raise CarError("covariance is not self-adjoint")
    ev = np.linalg.eigvalsh(a)
    if ev[0] < -CAR_TOL * 100 or ev[-1] > 1 + CAR_TOL * 100:
        raise CarError("covariance spectrum leaves [0, 1]")
    return a


def quasi_free_moment(a, xs: Sequence, ys: Sequence) -> complex:
    """omega_A(a(x_n)...a(x_1) a(y_1)^*...a(y_m)^*) = delta_nm det(<A x_i, y_j>)."""
    a = _check_cov(a)
    d = a.shape[0]
    for v in list(xs) + list(ys):
        if np.shape(v) != (d,):
            raise CarError(f"vector of length {d} expected")
    if len(xs) != len(ys):
        return 0j
    if not xs:
        return 1 + 0j
    g = np.array([[_inner(a @ np.asarray(x, complex), y) for y in ys] for x in xs])
    return complex(np.linalg.det(g))


# words: list of ("a" | "a*", vector), multiplied left to right


def normal_word(xs: Sequence, ys: Sequence) -> list:
    """The word a(x_n)...a(x_1) a(y_1)^*...a(y_m)^*."""
    return [("a", x) for x in reversed(list(xs))] + [("a*", y) for y in ys]


def word_operator(rep: CarRep, word: Sequence) -> np.ndarray:
    out = np.eye(rep.size, dtype=complex)
    for kind, v in word:
        if kind == "a":
            out = out @ rep.a(v)
        elif kind == "a*":
            out = out @ rep.a_star(v)
        else:
            raise CarError(f"unknown letter {kind!r}")
    return out


def parse_word(text: str) -> list:
    """Parse 'a(1,0) a*(0,1j)' into a word."""
    word = []
    for kind, body in re.findall(r"(a\*?)\(([^)]*)\)", text):
        vals = ast.literal_eval("(" + body + ",)")
        word.append((kind, np.array([complex(v) for v in vals])))
    if not word and text.strip():
        raise CarError(f"cannot parse word {text!r}")
    return word


def projection_state(rep: CarRep, p) -> np.ndarray:
    """The pure state vector of omega_P: modes of ran(1 - P) filled over the vacuum."""
    p = np.asarray(p, dtype=complex)
    if p.shape != (rep.n, rep.n):
        raise CarError("projection has the wrong size")
    if max(np.max(np.abs(p @ p - p)), np.max(np.abs(p - p.conj().T))) > PROJ_TOL:
        raise CarError("P is not a projection")
    ev, vec = np.linalg.eigh(np.eye(rep.n) - p)
    psi = rep.vacuum
    for k in np.flatnonzero(ev > 0.5):
        psi = rep.a_star(vec[:, k]) @ psi
    return psi / np.linalg.norm(psi)


def fock_state_expectation(p, word: Sequence, rep: CarRep = None) -> complex:
    """<Psi_P | word | Psi_P> in the explicit Fock representation."""
    p = np.asarray(p, dtype=complex)
    rep = rep or build_rep(p.shape[0])
    psi = projection_state(rep, p)
    return complex(np.vdot(psi, word_operator(rep, word) @ psi))


def density_matrix(rep: CarRep, a) -> np.ndarray:
    """rho = prod_k (lambda_k (1 - N_k) + (1 - lambda_k) N_k) in the eigenmodes of A."""
    a = _check_cov(a)
    lam, vec = np.linalg.eigh(a)
    one = np.eye(rep.size)
    rho = one.astype(complex)
    for k in range(rep.n):
        b = rep.a(vec[:, k])
        num = b.conj().T @ b
        rho = rho @ (lam[k] * (one - num) + (1 - lam[k]) * num)
    return rho


def state_expectation(a, word: Sequence, rep: CarRep = None) -> complex:
    """tr(rho_A word) for a general covariance 0 <= A <= 1."""
    a = np.asarray(a, dtype=complex)
    rep = rep or build_rep(a.shape[0])
    return complex(np.trace(density_matrix(rep, a) @ word_operator(rep, word)))


@dataclass(frozen=True)
class GaugeReport:
    checked: int
    max_abs: float
    passed: bool


def gauge_invariance_check(a, words: Sequence, tol: float = 1e-10) -> GaugeReport:
    """Expectations of words with unequal numbers of a and a^* must vanish."""
    a = np.asarray(a, dtype=complex)
    rep = build_rep(a.shape[0])
    rho = density_matrix(rep, a)
    worst, count = 0.0, 0
    for w in words:
        na = sum(1 for kind, _ in w if kind == "a")
        if na == len(w) - na:
            continue
        count += 1
        worst = max(worst, abs(complex(np.trace(rho @ word_operator(rep, w)))))
    return GaugeReport(count, worst, worst <= tol)


def random_unequal_words(rng: np.random.Generator, d: int, max_degree: int = 4, count: int = 50) -> list:
    out = []
    while len(out) < count:
        deg = int(rng.integers(1, max_degree + 1))
        kinds = rng.choice(["a", "a*"], size=deg)
        if 2 * int(np.sum(kinds == "a")) == deg:
            continue
        out.append([(k, rng.normal(size=d) + 1j * rng.normal(size=d)) for k in kinds])
    return out
