"""Admissibility, type I / type III, CABATIF and pairwise distinguishability verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import quad, spectral
from .quad import CONVERGENT, DIVERGENT, INCONCLUSIVE, DEFAULT, IntegralVerdict, QuadConfig
from .symbol import (
    ProjectionMatrix,
    Symbol,
    SymbolError,
    limit_at_infinity,
    make_nu,
    nearest_projection,
    outer_cesaro_mean,
)

TYPE_I = "TypeI"
TYPE_III = "TypeIII"
CABATIF = "CABATIF"
NOT_CABATIF = "NotCABATIF"
FAR_TOL = 1e-2
FAR_DEPTH = 64
ANALYTIC_FAMILIES = ("constant", "powers-nu", "powers-theta")


class ClassificationError(ValueError):
    pass


@dataclass
class Admissibility:
    status: str
    criteria: list
    violations: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)

    @property
    def admissible(self) -> Optional[bool]:
        return {CONVERGENT: True, DIVERGENT: False}.get(self.status)

    def to_dict(self) -> dict:
        return {"verdict": self.status, "admissible": self.admissible, "criteria": self.criteria,
                "violations": self.violations}


def _regular(s: Symbol, window: float, step: float):
    """Regular part or None with the reason it is unavailable."""
    try:
        return spectral.regular_part(s, window, step), None
    except SymbolError as e:
        return None, str(e)


def check_admissible(s: Symbol, cfg: QuadConfig = DEFAULT, use_spectral: bool = True,
                     window: float = spectral.DEFAULT_WINDOW, step: float = spectral.DEFAULT_STEP,
                     regular=None) -> Admissibility:
    """Derivative criterion (sufficient), Besov mu=1 integral and weighted energy (both equivalent)."""
    criteria, verdicts, violations = [], [], []
    deriv = None
    if s.has_derivative:
        deriv = quad.derivative_criterion(s, 1.0, cfg)
        criteria.append({"name": "derivative", "role": "sufficient", "status": deriv.status})
        verdicts.append(deriv)
    besov = quad.besov_double(s, 1.0, cfg)
    criteria.append({"name": "besov", "role": "equivalent", "status": besov.status})
    verdicts.append(besov)
    energy = None
    if use_spectral:
        if regular is None:
            regular, why = _regular(s, window, step)
        else:
            why = None
        if regular is not None:
            energy = spectral.weighted_energy(regular, 1.0, cfg)
            criteria.append({"name": "weighted_energy", "role": "equivalent", "status": energy.status})
            verdicts.append(energy)
        else:
            criteria.append({"name": "weighted_energy", "role": "equivalent", "status": "Skipped",
                             "reason": why})
    if deriv is not None and deriv.convergent and besov.divergent:
        violations.append("derivative criterion converges but the Besov integral diverges")
    if energy is not None and {energy.status, besov.status} == {CONVERGENT, DIVERGENT}:
        violations.append("weighted energy and Besov integral disagree")
    if besov.status != INCONCLUSIVE:
        status = besov.status
    elif deriv is not None and deriv.convergent:
        status = CONVERGENT
    elif energy is not None:
        status = energy.status
    else:
        status = INCONCLUSIVE
    return Admissibility(status, criteria, violations, verdicts)


# --------------------------------------------------------------------------
# type I / type III
# --------------------------------------------------------------------------


@dataclass
class FlowType:
    kind: str
    q: Optional[ProjectionMatrix]
    tag: str
    candidates: list
    evidence: list
    note: str = ""

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "tag": self.tag,
            "note": self.note,
            "evidence": [
                {"Q": _mat(c), "l2_distance": v.to_dict(), **extra}
                for c, v, extra in self.evidence
            ],
        }
        if self.q is not None:
            out["Q"] = _mat(self.q)
        return out


def _mat(q) -> list:
    m = q.entries if isinstance(q, ProjectionMatrix) else np.asarray(q)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def far_measure_verdict(s: Symbol, q: ProjectionMatrix, cfg: QuadConfig = DEFAULT,
                        tol: float = FAR_TOL, samples: int = 256) -> quad.TailFit:
    """Does |{p : ||Phi(p) - Q|| >= tol}| diverge over the far shells?"""
    vals, depth = [], []
    for k in range(*cfg.large):
        p = 2.0**k * (1 + (np.arange(samples) + 0.5) / samples)
        far = 0
        for sign in (1.0, -1.0):
            d = np.linalg.norm(s.evaluate(sign * p) - q.entries, ord=2, axis=(-2, -1))
            far += int(np.count_nonzero(d >= tol))
        vals.append(2.0**k * far / samples)
        depth.append(float(k))
    return quad.classify_tail(vals, depth, cfg)


def classify_flow_type(s: Symbol, cfg: QuadConfig = DEFAULT, admissibility: Optional[Admissibility] = None,
                       use_spectral: bool = False) -> FlowType:
    """TypeI(Q) when some candidate Q has finite L2 distance, TypeIII when none can.

    With a limit at infinity the only possible Q is the limit itself, so its
    L2 verdict decides.  Without a limit the candidates are spectral
    roundings of outer Cesaro means; TypeIII then also needs every candidate
    to stay at distance >= 1e-2 from Phi on a diverging measure of
    frequencies, and the result is tagged heuristic.
    """
    adm = admissibility or check_admissible(s, cfg, use_spectral=use_spectral)
    if adm.status == DIVERGENT:
        raise ClassificationError(f"{s.label} is not admissible")
    if adm.status == INCONCLUSIVE:
        return FlowType(INCONCLUSIVE, None, "admissibility-undecided", [], [],
                        "admissibility could not be decided")
    lim = limit_at_infinity(s)
    evidence = []
    if lim is not None:
        try:
            q = nearest_projection(lim)
        except SymbolError as e:
            return FlowType(INCONCLUSIVE, None, "limit-ambiguous", [], [], str(e))
        v = quad.l2_distance(s, q, cfg)
        evidence.append((q, v, {"source": "limit"}))
        tag = "family-analytic" if s.family in ANALYTIC_FAMILIES else "limit-complete"
        if s.family == "sampled":
            tag = "grid-limited"
        if v.convergent:
            return FlowType(TYPE_I, q, tag, [q], evidence)
        if v.divergent:
            return FlowType(TYPE_III, None, tag, [q], evidence,
                            "the limit is the only possible Q and its L2 distance diverges")
        return FlowType(INCONCLUSIVE, None, tag, [q], evidence)
    # candidates are fitted at p_far, so judge them on shells reaching far beyond it
    far_cfg = replace(cfg, large=(cfg.large[0], max(cfg.large[1], FAR_DEPTH)))
    cands = []
    for p_far in (2.0**10, 2.0**15, 2.0**20):
        try:
            q = nearest_projection(outer_cesaro_mean(s, p_far))
        except SymbolError:
            continue
        if not any(np.allclose(q.entries, c.entries, atol=1e-9) for c in cands):
            cands.append(q)
    statuses = []
    for q in cands:
        v = quad.l2_distance(s, q, far_cfg)
        far = far_measure_verdict(s, q, far_cfg)
        evidence.append((q, v, {"source": "cesaro", "far_measure": far.status}))
        if v.convergent:
            return FlowType(TYPE_I, q, "heuristic-complete", cands, evidence)
        statuses.append((v.status, far.status))
    if cands and all(a == DIVERGENT and b == DIVERGENT for a, b in statuses):
        return FlowType(TYPE_III, None, "heuristic-complete", cands, evidence,
                        "no candidate projection is L2-approachable")
    return FlowType(INCONCLUSIVE, None, "heuristic-complete", cands, evidence)


# --------------------------------------------------------------------------
# CABATIF
# --------------------------------------------------------------------------


@dataclass
class CabatifVerdict:
    mu: float
    status: str
    fired: list
    verdicts: dict
    disagreements: list = field(default_factory=list)

    @property
    def fitted_exponent(self) -> float:
        v = self.verdicts.get("dyadic_difference")
        if v is None or "infinity" not in v.ends:
            return float("nan")
        return v.ends["infinity"].exponent

    def to_dict(self) -> dict:
        return {"mu": self.mu, "verdict": self.status, "fired": self.fired,
                "disagreements": self.disagreements,
                "criteria": {k: v.status for k, v in self.verdicts.items()}}


def cabatif(s: Symbol, mu: float, cfg: QuadConfig = DEFAULT, regular=None) -> CabatifVerdict:
    """CABATIF for the partition a_n = sum k^{-1/(1-mu)}.

    NotCABATIF when the necessary dyadic condition diverges; CABATIF when a
    sufficient condition (derivative or Besov integral) converges and the
    dyadic one does not diverge; Inconclusive otherwise.  The weighted
    energy is an optional cross-check.
    """
    if not 0 < mu < 1:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    if s.parity != "even":
        raise ClassificationError(f"CABATIF criteria need an even symbol, Phi(p) = Phi(-p) ({s.label})")
    verdicts = {"dyadic_difference": quad.dyadic_difference(s, mu, cfg)}
    if s.has_derivative:
        verdicts["derivative_criterion"] = quad.derivative_criterion(s, mu, cfg)
    verdicts["besov_double"] = quad.besov_double(s, mu, cfg)
    if regular is not None:
        verdicts["weighted_energy"] = spectral.weighted_energy(regular, mu, cfg)
    dy = verdicts["dyadic_difference"]
    suff = [k for k in ("derivative_criterion", "besov_double") if k in verdicts and verdicts[k].convergent]
    fired = []
    if dy.divergent:
        status = NOT_CABATIF
        fired.append("necessary: dyadic_difference diverges")
    elif suff:
        status = CABATIF
        fired += [f"sufficient: {k} converges" for k in suff]
    else:
        status = INCONCLUSIVE
    expected = {CABATIF: CONVERGENT, NOT_CABATIF: DIVERGENT}.get(status)
    disagreements = []
    if expected is not None:
        for k, v in verdicts.items():
            if v.status in (CONVERGENT, DIVERGENT) and v.status != expected and k != "dyadic_difference":
                disagreements.append(f"{k} is {v.status}")
    return CabatifVerdict(mu, status, fired, verdicts, disagreements)


@dataclass
class Distinction:
    nu1: float
    nu2: float
    mu_star: float
    distinguished: bool
    first: CabatifVerdict
    second: CabatifVerdict

    def to_dict(self) -> dict:
        return {"nu1": self.nu1, "nu2": self.nu2, "mu_star": self.mu_star,
                "result": "Distinguished" if self.distinguished else "NotDistinguished",
                "cabatif_nu1": self.first.to_dict(), "cabatif_nu2": self.second.to_dict()}


def distinguish_pair(nu1: float, nu2: float, cfg: QuadConfig = DEFAULT) -> Distinction:
    """Separate the nu1 and nu2 flows with mu* in the window (1 - 4 nu2, 1 - 4 nu1)."""
    if not 0 < nu1 < nu2 <= 0.25:
        if nu1 == nu2:
            raise ClassificationError("empty mu-window: nu1 == nu2")
        raise ClassificationError("need 0 < nu1 < nu2 <= 0.25")
    lo, hi = 1 - 4 * nu2, 1 - 4 * nu1
    mu = 0.5 * (lo + hi)
    a = cabatif(make_nu(nu1), mu, cfg)
    b = cabatif(make_nu(nu2), mu, cfg)
    ok = b.status == CABATIF and a.status == NOT_CABATIF
    return Distinction(nu1, nu2, mu, ok, a, b)


@dataclass
class Equivalence:
    status: str
    message: str
    verdict: IntegralVerdict

    @property
    def equivalent(self) -> bool:
        return self.status == CONVERGENT


def l2_equivalent(s: Symbol, t, cfg: QuadConfig = DEFAULT) -> Equivalence:
    dim = t.dimension if hasattr(t, "dimension") else np.shape(t)[0]
    if dim != s.dimension:
        raise ClassificationError(f"dimension mismatch: {s.dimension} vs {dim}")
    v = quad.l2_distance(s, t, cfg)
    if v.convergent:
        msg = "cocycle conjugate (sufficient condition met)"
    elif v.divergent:
        msg = "condition fails (no conclusion from the L2 criterion alone)"
    else:
        msg = "undecided"
    return Equivalence(v.status, msg, v)


# --------------------------------------------------------------------------
# full report
# --------------------------------------------------------------------------


@dataclass
class ClassificationReport:
    symbol: str
    admissible: Admissibility
    flow_type: Optional[FlowType]
    cabatif: dict
    diagnostics: list
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "symbol": self.symbol,
            "admissible": self.admissible.to_dict(),
            "flow_type": None if self.flow_type is None else self.flow_type.to_dict(),
            "cabatif": {repr(float(m)): v.to_dict() for m, v in self.cabatif.items()},
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "params": self.params,
        }

    @property
    def decided(self) -> bool:
        if self.admissible.status == INCONCLUSIVE:
            return False
        if self.flow_type is not None and self.flow_type.kind == INCONCLUSIVE:
            return False
        return all(v.status != INCONCLUSIVE for v in self.cabatif.values())


def classify(s: Symbol, mus: Sequence[float] = (), cfg: QuadConfig = DEFAULT, use_spectral: bool = True,
             window: float = spectral.DEFAULT_WINDOW, step: float = spectral.DEFAULT_STEP) -> ClassificationReport:
    regular = None
    if use_spectral:
        regular, _ = _regular(s, window, step)
    adm = check_admissible(s, cfg, use_spectral=use_spectral, regular=regular, window=window, step=step)
    diags = list(adm.verdicts)
    flow = None
    if adm.status == CONVERGENT:
        flow = classify_flow_type(s, cfg, adm)
        diags += [v for _, v, _ in flow.evidence]
    cab = {}
    for mu in mus:
        if s.parity != "even":
            raise ClassificationError(f"CABATIF criteria need an even symbol ({s.label})")
        cab[float(mu)] = cabatif(s, float(mu), cfg, regular)
        diags += list(cab[float(mu)].verdicts.values())
    params = {"quad": cfg.echo(), "window": window, "step": step, "spectral": use_spectral}
    return ClassificationReport(s.label, adm, flow, cab, diags, params)


__all__ = [
    "check_admissible", "classify_flow_type", "cabatif", "distinguish_pair", "l2_equivalent",
    "classify", "ClassificationError",
]
